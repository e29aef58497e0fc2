"""Flat binary tensor container used for feature/embedding caches and weights.

Layout, all little-endian: u32 dimension count, u32 per-dimension sizes,
u32 element-type code, then row-major data. Element types: 0 = IEEE float32
(the default interchange type), 1 = IEEE float64 (used where a lossless
round-trip of training state matters).
"""

from __future__ import annotations

import struct
from typing import BinaryIO

import numpy as np

_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}
_CODES_BY_KIND = {np.dtype(np.float32): 0, np.dtype(np.float64): 1}


class TensorFormatError(Exception):
    """Raised when a container header or payload is malformed."""


def tensor_to_bytes(array: np.ndarray, dtype: str | None = None) -> bytes:
    """Serialize an array; dtype 'float32'/'float64' overrides the array's own."""
    arr = np.asarray(array)
    if dtype is not None:
        arr = arr.astype(dtype)
    if arr.dtype not in _CODES_BY_KIND:
        arr = arr.astype(np.float32)
    code = _CODES_BY_KIND[arr.dtype]
    header = struct.pack("<I", arr.ndim)
    header += struct.pack(f"<{arr.ndim}I", *arr.shape)
    header += struct.pack("<I", code)
    return header + np.ascontiguousarray(arr, dtype=_DTYPE_CODES[code]).tobytes()


def tensor_from_bytes(buf: bytes, offset: int = 0) -> tuple[np.ndarray, int]:
    """Deserialize one tensor; returns (array, offset just past its payload)."""
    try:
        (ndim,) = struct.unpack_from("<I", buf, offset)
        offset += 4
        shape = struct.unpack_from(f"<{ndim}I", buf, offset)
        offset += 4 * ndim
        (code,) = struct.unpack_from("<I", buf, offset)
        offset += 4
    except struct.error as exc:
        raise TensorFormatError("truncated tensor header") from exc
    if code not in _DTYPE_CODES:
        raise TensorFormatError(f"unknown element-type code {code}")
    dtype = _DTYPE_CODES[code]
    count = int(np.prod(shape, dtype=np.int64)) if ndim else 1
    nbytes = count * dtype.itemsize
    if offset + nbytes > len(buf):
        raise TensorFormatError("truncated tensor payload")
    arr = np.frombuffer(buf, dtype=dtype, count=count, offset=offset).reshape(shape)
    return arr.copy(), offset + nbytes


def save_tensor(path, array: np.ndarray, dtype: str | None = None) -> None:
    with open(path, "wb") as f:
        f.write(tensor_to_bytes(array, dtype))


def load_tensor(path) -> np.ndarray:
    with open(path, "rb") as f:
        buf = f.read()
    arr, end = tensor_from_bytes(buf)
    if end != len(buf):
        raise TensorFormatError(f"{end - len(buf)} trailing bytes after tensor payload")
    return arr


def write_tensor_stream(f: BinaryIO, array: np.ndarray, dtype: str | None = None) -> None:
    f.write(tensor_to_bytes(array, dtype))
