"""Flat key-value config files.

Both the scenario and the trainer read the same trivial format: one
``key = value`` pair per line, ``#`` starts a comment, blank lines are
ignored.  Values are parsed by the consumer; this module only tokenizes
and reports malformed lines.
"""

from __future__ import annotations

import os


class ConfigError(ValueError):
    """Raised for unknown keys, bad values, or malformed config lines."""


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines into a string dict."""
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {raw.strip()!r}")
        key, val = line.split("=", 1)
        key = key.strip()
        val = val.strip()
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in out:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        out[key] = val
    return out


def parse_kv_file(path: str | os.PathLike) -> dict[str, str]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_kv_text(fh.read())


def apply_env_overrides(pairs: dict[str, str], prefix: str = "COMMLIGHT_") -> dict[str, str]:
    """Overlay environment variables (PREFIX + upper-cased key) onto pairs."""
    out = dict(pairs)
    for name, val in os.environ.items():
        if name.startswith(prefix):
            out[name[len(prefix):].lower()] = val
    return out


def coerce(key: str, raw: str, kind: type):
    """Convert a raw string to kind, raising ConfigError naming the key."""
    try:
        if kind is bool:
            low = raw.lower()
            if low in ("1", "true", "yes"):
                return True
            if low in ("0", "false", "no"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"invalid value for {key!r}: {raw!r} (expected {kind.__name__})") from None
