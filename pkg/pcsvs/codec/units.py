"""
Unit files: one utterance's T x n_q acoustic unit grid.

Layout (little-endian):
    bytes 0-3    magic b"PCSU"
    bytes 4-15   uint32 T, uint32 n_q, uint32 K_a
    then         T * n_q int16 indices, row-major (frame by frame)
"""

from __future__ import annotations

import struct

import numpy as np

from pcsvs.errors import DataError, InvalidInputError
from pcsvs.utils.io import PathLike, atomic_open

MAGIC = b"PCSU"
_HEADER = struct.Struct("<4sIII")


def write_units(path: PathLike, units: np.ndarray, codebook_size: int) -> None:
    arr = np.asarray(units)
    if arr.ndim != 2:
        raise InvalidInputError(f"units must be a (T, n_q) grid, got shape {arr.shape}")
    if not 1 <= codebook_size <= np.iinfo(np.int16).max + 1:
        raise InvalidInputError(f"codebook size {codebook_size} does not fit int16 units")
    if arr.size and (arr.min() < 0 or arr.max() >= codebook_size):
        raise InvalidInputError(f"unit index out of range [0, {codebook_size})")
    t, n_q = arr.shape
    with atomic_open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, t, n_q, codebook_size))
        fh.write(arr.astype("<i2").tobytes())


def read_units(path: PathLike) -> tuple[np.ndarray, int]:
    """Returns (units int64 (T, n_q), K_a)."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except OSError as e:
        raise DataError(f"cannot read unit file {path}: {e}") from e
    if len(blob) < _HEADER.size:
        raise DataError(f"{path}: truncated unit file header")
    magic, t, n_q, k_a = _HEADER.unpack_from(blob)
    if magic != MAGIC:
        raise DataError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    body = blob[_HEADER.size:]
    if len(body) != 2 * t * n_q:
        raise DataError(f"{path}: expected {t}x{n_q} units, body has {len(body)} bytes")
    units = np.frombuffer(body, dtype="<i2").astype(np.int64).reshape(t, n_q)
    if units.size and (units.min() < 0 or units.max() >= k_a):
        raise DataError(f"{path}: unit index out of range [0, {k_a})")
    return units, int(k_a)
