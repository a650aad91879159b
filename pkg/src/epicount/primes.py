"""Prime sieve with a process-wide cache.

The experiments repeatedly ask for all primes below bounds up to 1e6; the
sieve is recomputed only when the requested limit grows.
"""

from __future__ import annotations

import numpy as np

_cached_limit: int = 0
_cached_primes: np.ndarray = np.empty(0, dtype=np.int64)


def primes_up_to(limit: int) -> np.ndarray:
    """All primes p <= limit, ascending, as an int64 array (shared, do not mutate)."""
    global _cached_limit, _cached_primes
    if limit < 2:
        return np.empty(0, dtype=np.int64)
    if limit > _cached_limit:
        is_prime = np.ones(limit + 1, dtype=bool)
        is_prime[:2] = False
        for p in range(2, int(limit**0.5) + 1):
            if is_prime[p]:
                is_prime[p * p :: p] = False
        _cached_primes = np.flatnonzero(is_prime).astype(np.int64)
        _cached_limit = limit
    cut = int(np.searchsorted(_cached_primes, limit, side="right"))
    return _cached_primes[:cut]


def is_prime(n: int) -> bool:
    """Primality check: sieve lookup when the cache covers n, else trial division."""
    if n < 2:
        return False
    if n <= _cached_limit:
        i = int(np.searchsorted(_cached_primes, n))
        return i < len(_cached_primes) and int(_cached_primes[i]) == n
    if n < 4:
        return True
    if n % 2 == 0:
        return False
    d = 3
    while d * d <= n:
        if n % d == 0:
            return False
        d += 2
    return True
