"""Writer for the EMB1 binary embedding container.

Layout (little endian throughout):

    magic   4 bytes  b"EMB1"
    N       u32      row count
    D       u32      embedding dimension
    ids     N times: u16 byte length + UTF-8 bytes
    data    N*D float32, C order

This is an independent implementation of the format the openintent loader
reads; the two packages share bytes on disk, not code.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from embexport.errors import DataError

MAGIC = b"EMB1"


def write_emb1(ids: list[str], matrix: np.ndarray, path: str | Path) -> None:
    """Serialize (ids, matrix) to `path`. Deterministic: same input, same bytes."""
    matrix = np.ascontiguousarray(matrix, dtype="<f4")
    if matrix.ndim != 2:
        raise DataError(f"embedding matrix must be 2-D, got shape {matrix.shape}")
    n, d = matrix.shape
    if len(ids) != n:
        raise DataError(f"{len(ids)} ids for {n} embedding rows")
    if not np.all(np.isfinite(matrix)):
        raise DataError("embedding matrix contains non-finite values")

    chunks = [MAGIC, struct.pack("<II", n, d)]
    for uid in ids:
        raw = uid.encode("utf-8")
        if len(raw) > 0xFFFF:
            raise DataError(f"id too long for EMB1 ({len(raw)} bytes): {uid[:32]!r}...")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
    chunks.append(matrix.tobytes(order="C"))
    Path(path).write_bytes(b"".join(chunks))
