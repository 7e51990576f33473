"""JSON encoding of matrices and artifacts.

Matrices are written as ``{"rows": r, "cols": c, "data": [[...], ...]}`` in
row-major order; readers also accept a bare nested list.  Python's float repr
round-trips exactly, so a matrix read back is bit-identical to the one written.
"""
from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import SchemaError


def mat(M) -> dict:
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.ndim != 2:
        raise ValueError(f"expected a matrix, got an array with {M.ndim} dimensions")
    return {"rows": int(M.shape[0]), "cols": int(M.shape[1]), "data": M.tolist()}


def vec(v) -> list:
    return [float(x) for x in np.asarray(v, dtype=float).reshape(-1)]


def read_mat(obj, where: str = "matrix", shape: tuple | None = None) -> np.ndarray:
    """Decode a matrix, raising ``SchemaError`` with the offending field path."""
    if isinstance(obj, dict):
        for key in ("rows", "cols", "data"):
            if key not in obj:
                raise SchemaError(f"{where}: missing key {key!r}")
        data = obj["data"]
        rows, cols = obj["rows"], obj["cols"]
    elif isinstance(obj, list):
        data = obj
        rows = len(obj)
        cols = len(obj[0]) if obj and isinstance(obj[0], list) else None
    else:
        raise SchemaError(f"{where}: expected a matrix object or nested list, got {type(obj).__name__}")
    if not isinstance(data, list) or not all(isinstance(r, list) for r in data):
        raise SchemaError(f"{where}: data must be a list of rows")
    if rows == 0:
        M = np.zeros((0, cols or 0))
    else:
        for i, r in enumerate(data):
            if len(r) != cols:
                raise SchemaError(f"{where}: row {i} has {len(r)} entries, expected {cols}")
        try:
            M = np.array(data, dtype=float)
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: non-numeric entry ({exc})") from None
    if M.shape != (rows, cols):
        raise SchemaError(f"{where}: declared {rows}x{cols}, data is {M.shape[0]}x{M.shape[1] if M.ndim == 2 else 0}")
    if shape is not None:
        for got, want, name in zip(M.shape, shape, ("rows", "cols")):
            if want is not None and got != want:
                raise SchemaError(f"{where}: expected {want} {name}, got {got}")
    return M


def require(doc: dict, key: str, where: str):
    if not isinstance(doc, dict):
        raise SchemaError(f"{where}: expected an object")
    if key not in doc:
        raise SchemaError(f"{where}: missing key {key!r}")
    return doc[key]


def dumps(doc) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def write(path: Path, doc) -> str:
    """Write ``doc`` and return the sha256 of the bytes written."""
    text = dumps(doc)
    Path(path).write_text(text)
    return digest(text.encode())


def digest(data: bytes) -> str:
    return "sha256:" + hashlib.sha256(data).hexdigest()


def load(path) -> tuple[dict, str]:
    """Read a JSON document and return it with the hash of its bytes."""
    raw = Path(path).read_bytes()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON at line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return doc, digest(raw)
