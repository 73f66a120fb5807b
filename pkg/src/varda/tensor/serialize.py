"""VTEN binary tensor codec.

Layout: magic ``VTEN``, u8 dtype code, u8 rank, rank × little-endian u32
extents, then the row-major values in little-endian byte order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from ..errors import FormatError
from .core import Tensor

MAGIC = b"VTEN"

DTYPE_CODES: dict[int, np.dtype] = {
    1: np.dtype("<f4"),
    2: np.dtype("<f8"),
    3: np.dtype("u1"),
    4: np.dtype("<i8"),
}
_CODE_OF = {dt: code for code, dt in DTYPE_CODES.items()}


def encode_array(array: np.ndarray) -> bytes:
    arr = np.asarray(array)
    code = _CODE_OF.get(arr.dtype.newbyteorder("<"))
    if code is None:
        raise FormatError(f"dtype {arr.dtype} has no VTEN code")
    if arr.ndim > 255:
        raise FormatError(f"rank {arr.ndim} exceeds 255")
    header = MAGIC + struct.pack("<BB", code, arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + np.ascontiguousarray(arr, dtype=DTYPE_CODES[code]).tobytes()


def decode_array(buf: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Decode one record starting at ``offset``; returns (array, offset past the record)."""
    if len(buf) - offset < 6:
        raise FormatError("truncated VTEN header", offset=offset)
    if buf[offset : offset + 4] != MAGIC:
        raise FormatError(f"bad magic {bytes(buf[offset:offset + 4])!r}", offset=offset)
    code, rank = struct.unpack_from("<BB", buf, offset + 4)
    if code not in DTYPE_CODES:
        raise FormatError(f"unknown dtype code {code}", offset=offset + 4)
    pos = offset + 6
    if len(buf) - pos < 4 * rank:
        raise FormatError("truncated VTEN extents", offset=len(buf))
    shape = struct.unpack_from(f"<{rank}I", buf, pos)
    if any(n == 0 for n in shape):
        raise FormatError(f"zero extent in shape {shape}", offset=pos)
    pos += 4 * rank
    dtype = DTYPE_CODES[code]
    nbytes = int(np.prod(shape, dtype=np.int64)) * dtype.itemsize
    if len(buf) - pos < nbytes:
        raise FormatError(f"truncated VTEN payload: need {nbytes} bytes", offset=len(buf))
    data = np.frombuffer(buf, dtype=dtype, count=nbytes // dtype.itemsize, offset=pos)
    return data.reshape(shape).astype(dtype.newbyteorder("="), copy=True), pos + nbytes


def save_tensor(path: str | Path, tensor: Tensor | np.ndarray) -> None:
    arr = tensor.data if isinstance(tensor, Tensor) else tensor
    Path(path).write_bytes(encode_array(arr))


def load_array(path: str | Path) -> np.ndarray:
    buf = Path(path).read_bytes()
    arr, end = decode_array(buf)
    if end != len(buf):
        raise FormatError(f"{len(buf) - end} trailing bytes after VTEN record", offset=end)
    return arr


def load_tensor(path: str | Path) -> Tensor:
    arr = load_array(path)
    return Tensor(arr, dtype=arr.dtype)
