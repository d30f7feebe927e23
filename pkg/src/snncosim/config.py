"""Line-based experiment configuration files.

Grammar, one statement per line:

    section.key = value        # trailing comments allowed
    # full-line comment
                               # blank lines ignored

Keys are dotted lowercase identifiers.  Values are bare tokens: integers
(decimal or 0x hex), floats, booleans (true/false), comma-separated lists,
or strings (unquoted, taken verbatim after stripping whitespace and any
trailing comment).  Duplicate keys are rejected so a file cannot silently
contradict itself.  One file fully defines an experiment; re-running it
reproduces identical outputs.
"""

from __future__ import annotations

import re
from pathlib import Path

from .errors import ConfigError

_KEY_RE = re.compile(r"^[a-z][a-z0-9_]*(\.[a-z][a-z0-9_]*)+$")
_SENTINEL = object()


class Config:
    """Parsed key/value view with typed, consumption-tracked accessors."""

    def __init__(self, values: dict[str, str], path: str = "<memory>",
                 lines: dict[str, int] | None = None):
        self._values = values
        self._consumed: set[str] = set()
        self.path = path
        self._lines = lines or {}

    def _where(self, key: str) -> str:
        line = self._lines.get(key)
        loc = f"{self.path}:{line}" if line else self.path
        return f"{loc}: {key}"

    def _raw(self, key: str, default):
        self._consumed.add(key)
        if key in self._values:
            return self._values[key]
        if default is _SENTINEL:
            raise ConfigError(f"{self.path}: missing required key {key!r}")
        return default

    def get_str(self, key: str, default=_SENTINEL) -> str:
        v = self._raw(key, default)
        return v if isinstance(v, str) else v

    def get_int(self, key: str, default=_SENTINEL) -> int:
        v = self._raw(key, default)
        if not isinstance(v, str):
            return v
        try:
            return int(v, 0)
        except ValueError:
            raise ConfigError(f"{self._where(key)}: {v!r} is not an integer")

    def get_float(self, key: str, default=_SENTINEL) -> float:
        v = self._raw(key, default)
        if not isinstance(v, str):
            return v
        try:
            return float(v)
        except ValueError:
            raise ConfigError(f"{self._where(key)}: {v!r} is not a number")

    def get_bool(self, key: str, default=_SENTINEL) -> bool:
        v = self._raw(key, default)
        if not isinstance(v, str):
            return v
        low = v.lower()
        if low in ("true", "1", "yes", "on"):
            return True
        if low in ("false", "0", "no", "off"):
            return False
        raise ConfigError(f"{self._where(key)}: {v!r} is not a boolean")

    def get_list(self, key: str, default=_SENTINEL) -> list[str]:
        v = self._raw(key, default)
        if not isinstance(v, str):
            return v
        return [item.strip() for item in v.split(",") if item.strip()]

    def get_choice(self, key: str, choices, default=_SENTINEL) -> str:
        v = self.get_str(key, default)
        if v not in choices:
            raise ConfigError(
                f"{self._where(key)}: {v!r} not one of {sorted(choices)}")
        return v

    def has(self, key: str) -> bool:
        return key in self._values

    def section_keys(self, section: str) -> list[str]:
        prefix = section + "."
        return [k for k in self._values if k.startswith(prefix)]

    def reject_unconsumed(self) -> None:
        """Catch typos: every key present must have been read by someone."""
        stray = sorted(set(self._values) - self._consumed)
        if stray:
            where = self._lines.get(stray[0])
            loc = f"{self.path}:{where}" if where else self.path
            raise ConfigError(f"{loc}: unknown key {stray[0]!r}"
                              + (f" (+{len(stray) - 1} more)"
                                 if len(stray) > 1 else ""))


def parse_config_text(text: str, path: str = "<memory>") -> Config:
    values: dict[str, str] = {}
    lines: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(
                f"{path}:{lineno}: expected 'section.key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if not _KEY_RE.match(key):
            raise ConfigError(
                f"{path}:{lineno}: {key!r} is not a dotted lowercase key")
        if key in values:
            raise ConfigError(
                f"{path}:{lineno}: duplicate key {key!r} "
                f"(first set on line {lines[key]})")
        if not value:
            raise ConfigError(f"{path}:{lineno}: empty value for {key!r}")
        values[key] = value
        lines[key] = lineno
    return Config(values, path, lines)


def parse_config(path) -> Config:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    return parse_config_text(text, str(path))
