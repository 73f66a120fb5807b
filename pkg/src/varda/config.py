"""Configuration settings and key=value config files."""

from __future__ import annotations

import dataclasses
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, get_type_hints

from .errors import ConfigError

_DTYPES = ("float64", "float32")


@dataclass
class Settings:
    """Process-level settings read from the environment.

    VARDA_THREADS bounds evaluation parallelism, VARDA_DTYPE picks the default
    tensor precision and VARDA_LOG_LEVEL the CLI log level.
    """

    threads: int = field(default_factory=lambda: int(os.getenv("VARDA_THREADS", "1")))
    dtype: str = field(default_factory=lambda: os.getenv("VARDA_DTYPE", "float64"))
    log_level: str = field(default_factory=lambda: os.getenv("VARDA_LOG_LEVEL", "INFO"))

    def __post_init__(self) -> None:
        if self.threads < 1:
            raise ConfigError(f"VARDA_THREADS must be >= 1, got {self.threads}")
        if self.dtype not in _DTYPES:
            raise ConfigError(f"VARDA_DTYPE must be one of {_DTYPES}, got {self.dtype!r}")


def read_kv_file(path: str | Path) -> dict[str, tuple[str, int]]:
    """Parse a key=value file into {key: (raw value, line number)}."""
    entries: dict[str, tuple[str, int]] = {}
    with open(path, encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"expected key=value, got {line!r}", line=lineno)
            key, value = (part.strip() for part in line.split("=", 1))
            if not key:
                raise ConfigError("empty key", line=lineno)
            if key in entries:
                raise ConfigError(f"duplicate key {key!r}", line=lineno)
            entries[key] = (value, lineno)
    return entries


def write_kv_lines(values: dict[str, Any]) -> list[str]:
    """Render a flat mapping as sorted key=value lines."""
    return [f"{key}={format_value(values[key])}" for key in sorted(values)]


def format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    if value is None:
        return "none"
    return str(value)


def parse_value(raw: str, annotation: Any, *, line: int | None = None) -> Any:
    """Convert a raw string to the python type named by a dataclass annotation."""
    text = str(annotation)
    try:
        if raw.lower() == "none" and "None" in text:
            return None
        if text.startswith("tuple") or text.startswith("list"):
            inner = text[text.index("[") + 1 :].split(",")[0].strip(" ]")
            items = [parse_value(part.strip(), inner, line=line) for part in raw.split(",") if part]
            return tuple(items) if text.startswith("tuple") else items
        if "bool" in text:
            lowered = raw.lower()
            if lowered not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return lowered in ("true", "1", "yes")
        if "int" in text and "float" not in text:
            return int(raw)
        if "float" in text:
            return float(raw)
        return raw
    except ValueError as err:
        raise ConfigError(f"cannot parse {raw!r} as {text}", line=line) from err


def apply_overrides(
    obj: Any, values: dict[str, tuple[str, int | None]], prefix: str = ""
) -> set[str]:
    """Assign matching keys onto a (possibly nested) dataclass in place.

    Returns the set of keys that were consumed so callers can report leftovers.
    """
    consumed: set[str] = set()
    hints = get_type_hints(type(obj))
    for f in dataclasses.fields(obj):
        key = f"{prefix}{f.name}"
        current = getattr(obj, f.name)
        if dataclasses.is_dataclass(current):
            consumed |= apply_overrides(current, values, prefix=f"{key}.")
            continue
        if key in values:
            raw, line = values[key]
            setattr(obj, f.name, parse_value(raw, hints[f.name], line=line))
            consumed.add(key)
    return consumed


def flatten(obj: Any, prefix: str = "") -> dict[str, Any]:
    """Flatten a nested dataclass into dotted keys."""
    out: dict[str, Any] = {}
    for f in dataclasses.fields(obj):
        value = getattr(obj, f.name)
        if dataclasses.is_dataclass(value):
            out.update(flatten(value, prefix=f"{prefix}{f.name}."))
        else:
            out[f"{prefix}{f.name}"] = value
    return out
