"""Flat key=value experiment configuration files.

Line-oriented text with a schema version header:

    version=1
    instance=subsets
    measure=cramer
    ordering=singletons
    n_grid=100,1000,10000
    trials=200
    seed=20260815

Blank lines and lines starting with '#' are ignored.  The first real line
must be the version header.  Unknown keys, duplicate keys, and malformed
values are rejected with the offending line number.  A seed is required:
there is no wall-clock fallback, every run must be reproducible from its
config file alone.
"""

from __future__ import annotations

from typing import Optional

from .errors import ConfigError
from .harness import ExperimentConfig

CONFIG_VERSION = 1

_STRING_KEYS = ("instance", "measure", "ordering", "gamma")
_INT_KEYS = ("trials", "seed", "k", "horizon", "matrix_dim", "threads")
_FLOAT_KEYS = ("bound_tolerance", "liminf_floor", "corollary_eps")
_REQUIRED_KEYS = ("instance", "measure", "ordering", "n_grid", "trials", "seed")

KNOWN_KEYS = ("version", "n_grid") + _STRING_KEYS + _INT_KEYS + _FLOAT_KEYS


def _parse_int(raw: str) -> int:
    return int(raw, 10)


def _parse_grid(raw: str) -> tuple[int, ...]:
    parts = [p.strip() for p in raw.split(",")]
    if any(not p for p in parts):
        raise ValueError("empty entry")
    return tuple(int(p, 10) for p in parts)


def parse_config_text(text: str, source: str = "<config>") -> ExperimentConfig:
    """Parse config text into an ExperimentConfig.

    Raises ConfigError with a ``source:line:`` prefix for anything wrong
    at the file level; semantic validation then happens in the config
    dataclass itself.
    """
    fields: dict = {}
    seen_lines: dict[str, int] = {}
    version_seen = False
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(
                f"{source}:{lineno}: expected key=value, got {stripped!r}"
            )
        key, _, raw = stripped.partition("=")
        key = key.strip()
        raw = raw.strip()
        if not version_seen:
            if key != "version":
                raise ConfigError(
                    f"{source}:{lineno}: first entry must be the version "
                    f"header 'version={CONFIG_VERSION}', got key {key!r}"
                )
            try:
                version = _parse_int(raw)
            except ValueError:
                raise ConfigError(
                    f"{source}:{lineno}: version must be an integer, "
                    f"got {raw!r}"
                ) from None
            if version != CONFIG_VERSION:
                raise ConfigError(
                    f"{source}:{lineno}: config version {version} is not "
                    f"supported; this build reads version {CONFIG_VERSION}"
                )
            version_seen = True
            seen_lines[key] = lineno
            continue
        if key not in KNOWN_KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in seen_lines:
            raise ConfigError(
                f"{source}:{lineno}: duplicate key {key!r} "
                f"(first set on line {seen_lines[key]})"
            )
        seen_lines[key] = lineno
        try:
            if key == "n_grid":
                fields[key] = _parse_grid(raw)
            elif key in _INT_KEYS:
                fields[key] = _parse_int(raw)
            elif key in _FLOAT_KEYS:
                fields[key] = float(raw)
            else:
                fields[key] = raw
        except ValueError:
            raise ConfigError(
                f"{source}:{lineno}: bad value for {key!r}: {raw!r}"
            ) from None
    if not version_seen:
        raise ConfigError(f"{source}: missing version header 'version={CONFIG_VERSION}'")
    missing = [k for k in _REQUIRED_KEYS if k not in fields]
    if missing:
        raise ConfigError(f"{source}: missing required keys: {', '.join(missing)}")
    try:
        return ExperimentConfig(**fields)
    except ConfigError as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path: str) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    return parse_config_text(text, source=str(path))


def render_config(config: ExperimentConfig) -> str:
    """Serialize a config back to the file format (round-trips through
    parse_config_text)."""
    lines = [f"version={CONFIG_VERSION}"]
    lines.append(f"instance={config.instance}")
    lines.append(f"measure={config.measure}")
    lines.append(f"ordering={config.ordering}")
    lines.append("n_grid=" + ",".join(str(n) for n in config.n_grid))
    lines.append(f"trials={config.trials}")
    lines.append(f"seed={config.seed}")
    lines.append(f"k={config.k}")
    lines.append(f"gamma={config.gamma}")
    if config.horizon is not None:
        lines.append(f"horizon={config.horizon}")
    lines.append(f"matrix_dim={config.matrix_dim}")
    lines.append(f"threads={config.threads}")
    lines.append(f"bound_tolerance={config.bound_tolerance!r}")
    lines.append(f"liminf_floor={config.liminf_floor!r}")
    if config.corollary_eps is not None:
        lines.append(f"corollary_eps={config.corollary_eps!r}")
    return "\n".join(lines) + "\n"
