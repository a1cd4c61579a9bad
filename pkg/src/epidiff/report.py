"""Line-delimited JSON reports.

Each line is one record with a ``record`` field (``header``, ``query`` or
``summary``).  Extended reals are written as numbers or the sentinels
``"+inf"`` / ``"-inf"``; finite floats use Python's shortest round-trip
representation, so reading a report back reproduces every value bit-exactly.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .extreal import from_json, to_json

_SENTINELS = ("+inf", "-inf")


def encode(obj):
    """JSON-ready copy of ``obj`` with infinities replaced by sentinels."""
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [encode(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return None if math.isnan(x) else to_json(x)
    return obj


def decode(obj):
    """Inverse of :func:`encode` (sentinel strings back to infinities)."""
    if isinstance(obj, dict):
        return {k: decode(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [decode(v) for v in obj]
    if isinstance(obj, str) and obj in _SENTINELS:
        return from_json(obj)
    return obj


def dumps(record: dict) -> str:
    return json.dumps(encode(record), ensure_ascii=False, allow_nan=False)


def write(path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(dumps(rec) + "\n")


def read(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [decode(json.loads(line)) for line in fh if line.strip()]
