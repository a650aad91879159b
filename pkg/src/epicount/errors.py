"""Exception hierarchy shared across the package.

The CLI maps these to exit codes: ConfigError -> 1, ScopeError (and
subclasses) -> 2, CapacityError -> 3.  Acceptance failures are reported
separately with exit code 4.
"""


class EpicountError(Exception):
    """Base class for all package errors."""


class ConfigError(EpicountError):
    """Malformed configuration input (bad key, bad value, bad version)."""


class ScopeError(EpicountError):
    """The request is outside what the implementation claims to decide."""


class UnsupportedInstanceError(ScopeError):
    """Operation not defined for this category instance."""


class OutOfHorizonError(ScopeError):
    """A sampled object is asked about targets beyond its truncation."""


class UncertifiedTailError(ScopeError):
    """Infinite-support integral without a tail certificate."""


class CapacityError(EpicountError):
    """Exact enumeration was requested beyond the supported size bounds."""


class PosetDomainError(EpicountError):
    """Mobius query on a pair (B, A) with B not below A."""
