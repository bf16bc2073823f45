"""Deterministic serialization: field CSV files and JSON documents.

Field CSV schema is `row,col,value,valid` in row-major order. Values use
shortest round-trip float formatting, so parse(write(field)) reproduces
the arrays bit for bit. JSON documents are written with sorted structure
left intact (insertion order) and a trailing newline; infinities are
encoded as the string "inf".
"""

from __future__ import annotations

import json
import math

import numpy as np

from .errors import ConfigError


def write_field_csv(path, values: np.ndarray, valid: np.ndarray) -> None:
    values = np.asarray(values)
    valid = np.asarray(valid, dtype=bool)
    height, width = values.shape
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("row,col,value,valid\n")
        for r in range(height):
            for c in range(width):
                fh.write(f"{r},{c},{float(values[r, c])!r},{int(valid[r, c])}\n")


def read_field_csv(path) -> tuple[np.ndarray, np.ndarray]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != "row,col,value,valid":
            raise ConfigError(f"bad field CSV header {header!r} in {path}")
        for line in fh:
            r, c, v, ok = line.strip().split(",")
            rows.append((int(r), int(c), float(v), bool(int(ok))))
    if not rows:
        raise ConfigError(f"empty field CSV {path}")
    height = max(r for r, *_ in rows) + 1
    width = max(c for _, c, *_ in rows) + 1
    values = np.zeros((height, width))
    valid = np.zeros((height, width), dtype=bool)
    for r, c, v, ok in rows:
        values[r, c] = v
        valid[r, c] = ok
    return values, valid


def _encode(obj):
    if isinstance(obj, float) and math.isinf(obj):
        return "inf"
    if isinstance(obj, dict):
        return {k: _encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return _encode(float(obj))
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist())
    return obj


def dump_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_encode(payload), fh, indent=2, allow_nan=False)
        fh.write("\n")


def load_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_paths_csv(path, paths: np.ndarray) -> None:
    """Trajectory polylines for overlay plots: one row per visited state."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("trajectory,step,row,col\n")
        for i, traj in enumerate(paths):
            for k, point in enumerate(traj):
                a = float(point[0])
                b = float(point[1])
                if a.is_integer() and b.is_integer():
                    fh.write(f"{i},{k},{int(a)},{int(b)}\n")
                else:
                    fh.write(f"{i},{k},{a!r},{b!r}\n")
