"""JSON (de)serialization helpers shared by model artifacts.

Weight matrices are embedded in JSON as base64 of row-major little-endian
float64 bytes. Files are written atomically (temp file + rename) with sorted
keys and a trailing newline so identical content is byte-identical on disk.
"""

from __future__ import annotations

import base64
import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import DataError


def array_to_b64(arr: np.ndarray) -> dict:
    a = np.ascontiguousarray(arr, dtype="<f8")
    return {
        "shape": list(a.shape),
        "dtype": "f8",
        "data": base64.b64encode(a.tobytes(order="C")).decode("ascii"),
    }


def b64_to_array(obj: dict) -> np.ndarray:
    try:
        shape = tuple(int(s) for s in obj["shape"])
        raw = base64.b64decode(obj["data"])
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed array block: {exc}") from None
    arr = np.frombuffer(raw, dtype="<f8")
    want = int(np.prod(shape)) if shape else 1
    if arr.size != want:
        raise DataError(
            f"array block has {arr.size} values, shape {shape} wants {want}"
        )
    return arr.reshape(shape).astype(np.float64)


def dump_json(obj: dict, path: str | Path) -> None:
    path = Path(path)
    text = json.dumps(obj, sort_keys=True, indent=2) + "\n"
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    tmp.replace(path)


def load_json(path: str | Path) -> dict:
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from None


def sha256_file(path: str | Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()
