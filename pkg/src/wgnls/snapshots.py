"""Binary field snapshots.

Layout: a 32-byte little-endian header (magic "WGNLS1", version u16,
n_x u32, n_y u32, box_length f64, t f64) followed by the samples as
interleaved re/im float64 pairs in C order over (x1, x2, y).
"""

from __future__ import annotations

import struct

import numpy as np

from .errors import SnapshotFormatError
from .spectral import Field3, Grid3

__all__ = ["write_snapshot", "read_snapshot", "MAGIC", "VERSION"]

MAGIC = b"WGNLS1"
VERSION = 1
_HEADER = struct.Struct("<6sHIIdd")


def write_snapshot(path, field: Field3, t: float) -> None:
    grid = field.grid
    header = _HEADER.pack(
        MAGIC, VERSION, grid.n_x, grid.n_y, grid.box_length, float(t)
    )
    inter = np.empty(field.values.shape + (2,), dtype="<f8")
    inter[..., 0] = field.values.real
    inter[..., 1] = field.values.imag
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(inter.tobytes())


def read_snapshot(path) -> tuple[Field3, float]:
    with open(path, "rb") as fh:
        raw = fh.read(_HEADER.size)
        if len(raw) < _HEADER.size:
            raise SnapshotFormatError(f"truncated header in {path}")
        magic, version, n_x, n_y, box_length, t = _HEADER.unpack(raw)
        if magic != MAGIC:
            raise SnapshotFormatError(f"bad magic {magic!r} in {path}")
        if version != VERSION:
            raise SnapshotFormatError(f"unsupported version {version} in {path}")
        payload = fh.read()
    expected = n_x * n_x * n_y * 2 * 8
    if len(payload) != expected:
        raise SnapshotFormatError(
            f"payload is {len(payload)} bytes, expected {expected} in {path}"
        )
    inter = np.frombuffer(payload, dtype="<f8").reshape(n_x, n_x, n_y, 2)
    values = inter[..., 0] + 1j * inter[..., 1]
    grid = Grid3(n_x=n_x, box_length=box_length, n_y=n_y)
    return Field3(grid, values), t
