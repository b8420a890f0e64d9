"""Flat ``section.key = value`` configuration.

The packaged ``data/defaults.cfg`` is both the default configuration and the
schema: each line declares a key, its default, and (in the trailing comment)
its type and unit. User files and ``--set`` overrides may only name keys that
appear there.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

_TYPES = ("float", "int", "bool", "str", "floats", "ints")
_LINE = re.compile(r"^\s*([A-Za-z_][\w]*\.[A-Za-z_][\w]*)\s*=\s*([^#]*?)\s*(?:#\s*(.*))?$")


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class KeySpec:
    key: str
    type: str
    unit: str
    description: str
    default: object


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _convert(text: str, typ: str):
    if typ == "float":
        return float(text)
    if typ == "int":
        return int(text)
    if typ == "bool":
        return _parse_bool(text)
    if typ == "str":
        return text.strip()
    items = [s for s in (p.strip() for p in text.split(",")) if s]
    if typ == "floats":
        return tuple(float(s) for s in items)
    if typ == "ints":
        return tuple(int(s) for s in items)
    raise ValueError(f"unknown type {typ!r}")


def _format(value, typ: str) -> str:
    if typ == "bool":
        return "true" if value else "false"
    if typ == "float":
        return repr(float(value))
    if typ in ("floats", "ints"):
        return ", ".join(repr(v) for v in value)
    return str(value)


def _load_schema() -> dict[str, KeySpec]:
    text = resources.files("vdclink").joinpath("data/defaults.cfg").read_text()
    schema: dict[str, KeySpec] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        m = _LINE.match(line)
        if not m or not m.group(3):
            raise ConfigError(f"defaults.cfg:{lineno}: malformed schema line")
        key, raw, comment = m.groups()
        head, _, desc = comment.partition(":")
        typ, _, unit = (s.strip() for s in head.partition(","))
        if typ not in _TYPES:
            raise ConfigError(f"defaults.cfg:{lineno}: unknown type {typ!r}")
        schema[key] = KeySpec(key, typ, unit, desc.strip(), _convert(raw, typ))
    return schema


SCHEMA: dict[str, KeySpec] = _load_schema()


class Config:
    """Immutable mapping from schema key to typed value."""

    __slots__ = ("_values",)

    def __init__(self, values: dict | None = None):
        merged = {k: s.default for k, s in SCHEMA.items()}
        for k, v in (values or {}).items():
            if k not in SCHEMA:
                raise ConfigError(f"unknown config key {k!r}")
            merged[k] = v
        object.__setattr__(self, "_values", merged)

    def __getitem__(self, key: str):
        try:
            return self._values[key]
        except KeyError:
            raise ConfigError(f"unknown config key {key!r}") from None

    def __eq__(self, other) -> bool:
        return isinstance(other, Config) and self._values == other._values

    def __hash__(self):
        return hash(tuple(sorted(self._values.items())))

    def __repr__(self) -> str:
        return f"Config({len(self._values)} keys)"

    def as_dict(self) -> dict:
        return dict(self._values)

    def section(self, prefix: str) -> dict:
        """Values of one section with the prefix stripped."""
        p = prefix + "."
        return {k[len(p):]: v for k, v in self._values.items() if k.startswith(p)}

    def with_(self, **updates) -> Config:
        """Copy with ``section__key=value`` style updates (double underscore = dot)."""
        return self.with_values({k.replace("__", "."): v for k, v in updates.items()})

    def with_values(self, updates: dict) -> Config:
        vals = dict(self._values)
        for k, v in updates.items():
            if k not in SCHEMA:
                raise ConfigError(f"unknown config key {k!r}")
            spec = SCHEMA[k]
            vals[k] = _convert(v, spec.type) if isinstance(v, str) and spec.type != "str" else v
        return Config(vals)

    def with_overrides(self, items) -> Config:
        """Apply ``key=value`` strings as given on the command line."""
        updates = {}
        for item in items or ():
            key, sep, raw = item.partition("=")
            key = key.strip()
            if not sep:
                raise ConfigError(f"override {item!r} is not key=value")
            if key not in SCHEMA:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                updates[key] = _convert(raw, SCHEMA[key].type)
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from None
        return self.with_values(updates)

    @classmethod
    def parse(cls, text: str, source: str = "<string>") -> Config:
        values = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            m = _LINE.match(line)
            if not m:
                raise ConfigError(f"{source}:{lineno}: expected key = value")
            key, raw, _ = m.groups()
            if key not in SCHEMA:
                raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
            try:
                values[key] = _convert(raw, SCHEMA[key].type)
            except ValueError as exc:
                raise ConfigError(f"{source}:{lineno}: {key}: {exc}") from None
        return cls(values)

    @classmethod
    def load(cls, path) -> Config:
        p = Path(path)
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {p}: {exc.strerror}") from None
        return cls.parse(text, str(p))

    def dumps(self) -> str:
        lines = []
        for k, spec in SCHEMA.items():
            unit = f", {spec.unit}" if spec.unit else ""
            lines.append(f"{k} = {_format(self._values[k], spec.type)}  # {spec.type}{unit}: {spec.description}")
        return "\n".join(lines) + "\n"

    def dump(self, path) -> None:
        Path(path).write_text(self.dumps())


def default_config() -> Config:
    return Config()
