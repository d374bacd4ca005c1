"""Run-length encoding of binary masks, C order, flat [start, len, ...] runs."""

from __future__ import annotations

import numpy as np


def encode(mask: np.ndarray) -> dict:
    """Encode foreground runs of a binary array; starts strictly increasing."""
    flat = np.asarray(mask).ravel(order="C") > 0
    if flat.size == 0:
        return {"shape": list(mask.shape), "order": "C", "runs": []}
    padded = np.concatenate([[False], flat, [False]])
    changes = np.flatnonzero(padded[1:] != padded[:-1])
    starts = changes[0::2]
    lengths = changes[1::2] - starts
    runs = np.empty(2 * len(starts), dtype=np.int64)
    runs[0::2] = starts
    runs[1::2] = lengths
    return {"shape": list(np.asarray(mask).shape), "order": "C",
            "runs": [int(v) for v in runs]}


def decode(obj: dict) -> np.ndarray:
    """Inverse of encode; validates ordering and bounds."""
    shape = tuple(int(s) for s in obj["shape"])
    runs = obj.get("runs", [])
    if obj.get("order", "C") != "C":
        raise ValueError("only C-order RLE is supported")
    if len(runs) % 2:
        raise ValueError("runs must be [start, len, ...] pairs")
    total = int(np.prod(shape)) if shape else 0
    flat = np.zeros(total, dtype=np.uint8)
    prev_end = 0
    for start, length in zip(runs[0::2], runs[1::2]):
        if start < prev_end or length <= 0 or start + length > total:
            raise ValueError(f"invalid run ({start}, {length})")
        flat[start:start + length] = 1
        prev_end = start + length
    return flat.reshape(shape)
