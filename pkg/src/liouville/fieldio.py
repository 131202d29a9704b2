"""Binary field dumps.

Layout: 16-byte header ``b"LIOU"``, ``u32 n``, ``u32 N``, ``u32 0`` (reserved), then
``N * n * n`` little-endian float64 values in row-major ``[component, i, j]`` order.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"LIOU"
HEADER = struct.Struct("<4sIII")


def write_field(path, u: np.ndarray) -> None:
    u = np.asarray(u, dtype=float)
    if u.ndim == 2:
        u = u[None]
    N, n, n2 = u.shape
    if n != n2:
        raise ValueError(f"field must be square per component, got {u.shape}")
    with open(path, "wb") as fh:
        fh.write(HEADER.pack(MAGIC, n, N, 0))
        fh.write(np.ascontiguousarray(u, dtype="<f8").tobytes())


def read_field(path) -> np.ndarray:
    data = Path(path).read_bytes()
    if len(data) < HEADER.size:
        raise ValueError(f"{path}: truncated header")
    magic, n, N, _ = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"{path}: bad magic {magic!r}")
    expected = HEADER.size + 8 * N * n * n
    if len(data) != expected:
        raise ValueError(f"{path}: expected {expected} bytes, found {len(data)}")
    return np.frombuffer(data, dtype="<f8", offset=HEADER.size).reshape(N, n, n).astype(float)
