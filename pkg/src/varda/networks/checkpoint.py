"""Checkpoint files: a NetConfig manifest followed by named, role-tagged VTEN records.

Layout (little-endian)::

    b"VCKP" | u32 manifest bytes | manifest (UTF-8 key=value lines)
    u32 record count
    per record: u16 name bytes | name | u8 role bytes | role | VTEN record

Parameter records carry one of the ParameterSet roles; optimizer and trainer
arrays are stored with the ``state`` role.
"""

from __future__ import annotations

import logging
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..config import apply_overrides, flatten, format_value
from ..errors import ConfigError, FormatError
from ..tensor import Tensor, decode_array, encode_array
from .config import NetConfig
from .params import ROLES, ParameterSet, init_params

logger = logging.getLogger(__name__)

MAGIC = b"VCKP"
STATE_ROLE = "state"
NET_PREFIX = "net."


@dataclass
class Checkpoint:
    params: ParameterSet
    manifest: dict[str, str] = field(default_factory=dict)
    state: dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def config(self) -> NetConfig:
        return self.params.config


def config_diff(expected: NetConfig, actual: NetConfig) -> list[str]:
    """Readable ``field: expected != actual`` lines for every differing field."""
    want, got = flatten(expected), flatten(actual)
    return [f"{key}: {want[key]!r} != {got[key]!r}" for key in want if want[key] != got[key]]


def require_compatible(expected: NetConfig, actual: NetConfig, *, what: str) -> None:
    diff = config_diff(expected, actual)
    if diff:
        raise ConfigError(f"{what} does not match the checkpoint network", diff=diff)


def _manifest_text(params: ParameterSet, manifest: dict[str, str]) -> bytes:
    lines = [f"{NET_PREFIX}{k}={format_value(v)}" for k, v in flatten(params.config).items()]
    lines += [f"{k}={manifest[k]}" for k in sorted(manifest)]
    return ("\n".join(lines) + "\n").encode("utf-8")


def encode_checkpoint(
    params: ParameterSet,
    manifest: dict[str, str] | None = None,
    state: dict[str, np.ndarray] | None = None,
) -> bytes:
    text = _manifest_text(params, manifest or {})
    records: list[tuple[str, str, np.ndarray]] = [
        (e.name, e.role, e.tensor.data) for e in params.entries()
    ]
    records += [(name, STATE_ROLE, np.asarray(arr)) for name, arr in (state or {}).items()]
    parts = [MAGIC, struct.pack("<I", len(text)), text, struct.pack("<I", len(records))]
    for name, role, arr in records:
        raw_name, raw_role = name.encode("utf-8"), role.encode("utf-8")
        parts += [struct.pack("<H", len(raw_name)), raw_name]
        parts += [struct.pack("<B", len(raw_role)), raw_role, encode_array(arr)]
    return b"".join(parts)


def save_checkpoint(
    path: str | Path,
    params: ParameterSet,
    manifest: dict[str, str] | None = None,
    state: dict[str, np.ndarray] | None = None,
) -> Path:
    """Write atomically: the file is either the old or the complete new checkpoint."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(encode_checkpoint(params, manifest, state))
    os.replace(tmp, path)
    logger.info(f"Checkpoint saved: {path}")
    return path


def _read(buf: bytes, pos: int, fmt: str) -> tuple[tuple, int]:
    size = struct.calcsize(fmt)
    if len(buf) - pos < size:
        raise FormatError("truncated checkpoint", offset=len(buf))
    return struct.unpack_from(fmt, buf, pos), pos + size


def _read_text(buf: bytes, pos: int, length: int) -> tuple[str, int]:
    if len(buf) - pos < length:
        raise FormatError("truncated checkpoint string", offset=len(buf))
    try:
        return buf[pos : pos + length].decode("utf-8"), pos + length
    except UnicodeDecodeError as err:
        raise FormatError("checkpoint string is not UTF-8", offset=pos) from err


def _parse_manifest(text: str) -> tuple[NetConfig, dict[str, str]]:
    net: dict[str, tuple[str, int | None]] = {}
    rest: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        if "=" not in line:
            raise FormatError(f"bad checkpoint manifest entry {line!r}", line=lineno)
        key, value = line.split("=", 1)
        if key.startswith(NET_PREFIX):
            net[key[len(NET_PREFIX) :]] = (value, lineno)
        else:
            rest[key] = value
    config = NetConfig()
    try:
        consumed = apply_overrides(config, net)
    except ConfigError as err:
        raise FormatError(f"bad network manifest: {err}") from err
    unknown = sorted(set(net) - consumed)
    if unknown:
        raise FormatError(f"unknown network keys in checkpoint: {unknown}")
    return config, rest


def decode_checkpoint(buf: bytes) -> Checkpoint:
    if buf[:4] != MAGIC:
        raise FormatError(f"bad checkpoint magic {bytes(buf[:4])!r}", offset=0)
    (text_len,), pos = _read(buf, 4, "<I")
    text, pos = _read_text(buf, pos, text_len)
    config, manifest = _parse_manifest(text)
    (count,), pos = _read(buf, pos, "<I")

    layout = init_params(config)
    params = ParameterSet(config)
    state: dict[str, np.ndarray] = {}
    for _ in range(count):
        start = pos
        (name_len,), pos = _read(buf, pos, "<H")
        name, pos = _read_text(buf, pos, name_len)
        (role_len,), pos = _read(buf, pos, "<B")
        role, pos = _read_text(buf, pos, role_len)
        arr, pos = decode_array(buf, pos)
        if role == STATE_ROLE:
            state[name] = arr
            continue
        if role not in ROLES or name not in layout or layout.role_of(name) != role:
            raise FormatError(f"unexpected parameter record {name!r} ({role})", offset=start)
        if arr.shape != layout[name].shape:
            raise FormatError(
                f"parameter {name!r} has shape {arr.shape}, expected {layout[name].shape}",
                offset=start,
            )
        params.add(name, role, Tensor(arr, dtype=arr.dtype))
    if pos != len(buf):
        raise FormatError(f"{len(buf) - pos} trailing bytes after checkpoint records", offset=pos)
    missing = [name for name in layout if name not in params]
    if missing:
        raise FormatError(f"checkpoint lacks parameters {missing}")
    ordered = ParameterSet(config)
    for name in layout:
        ordered.add(name, layout.role_of(name), params[name])
    return Checkpoint(ordered, manifest, state)


def load_checkpoint(path: str | Path) -> Checkpoint:
    ckpt = decode_checkpoint(Path(path).read_bytes())
    logger.debug(f"Loaded checkpoint {path}: {len(ckpt.params)} tensors, {len(ckpt.state)} state")
    return ckpt

