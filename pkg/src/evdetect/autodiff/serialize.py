"""Checkpoint format: one-line JSON header, newline, raw float32 LE payload.

The header lists parameter names, shapes, dtype, and byte offsets into the
payload, plus an optional free-form meta dict.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np


def save_checkpoint(path: str | Path, params: dict[str, np.ndarray], meta: dict | None = None) -> None:
    entries = []
    chunks = []
    offset = 0
    for name, array in params.items():
        data = np.ascontiguousarray(array, dtype="<f4").tobytes()
        entries.append(
            {"name": name, "shape": list(np.asarray(array).shape), "dtype": "float32", "offset": offset}
        )
        chunks.append(data)
        offset += len(data)
    header = {"params": entries, "payload_bytes": offset}
    if meta is not None:
        header["meta"] = meta
    with open(path, "wb") as fh:
        fh.write(json.dumps(header).encode("utf-8"))
        fh.write(b"\n")
        fh.write(b"".join(chunks))


def load_checkpoint(path: str | Path) -> tuple[dict[str, np.ndarray], dict]:
    with open(path, "rb") as fh:
        header_line = fh.readline()
        payload = fh.read()
    header = json.loads(header_line.decode("utf-8"))
    if header.get("payload_bytes", len(payload)) != len(payload):
        raise ValueError(f"{path}: truncated payload")
    params: dict[str, np.ndarray] = {}
    for entry in header["params"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        start = entry["offset"]
        array = np.frombuffer(payload, dtype="<f4", count=count, offset=start).reshape(shape)
        params[entry["name"]] = array.copy()
    return params, header.get("meta", {})
