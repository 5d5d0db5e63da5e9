"""Field snapshots: headered little-endian binary and a CSV dump for small grids.

Binary layout (all little-endian)::

    b"SWE1"                     magic
    uint32 n_x, uint32 n_y      interior extents
    float64 dx, x0, y0, t       spacing, origin, simulated time
    float64[n_y * n_x] x 4      h, hu, hv, z over the interior, row-major (j, i)
"""

from __future__ import annotations

import csv
import struct
from pathlib import Path

import numpy as np

from .grid import FIELD_NAMES, FieldSet, GridSpec

MAGIC = b"SWE1"
_HEADER = struct.Struct("<4sII4d")


def snapshot_bytes(fields: FieldSet, t: float = 0.0) -> bytes:
    spec = fields.spec
    header = _HEADER.pack(MAGIC, spec.n_x, spec.n_y, spec.dx, spec.origin[0], spec.origin[1], t)
    body = b"".join(np.ascontiguousarray(fields.interior(name), dtype="<f8").tobytes() for name in FIELD_NAMES)
    return header + body


def write_snapshot(path: str | Path, fields: FieldSet, t: float = 0.0) -> Path:
    path = Path(path)
    path.write_bytes(snapshot_bytes(fields, t))
    return path


def parse_snapshot(data: bytes) -> tuple[FieldSet, float]:
    if len(data) < _HEADER.size:
        raise ValueError("snapshot too short for header")
    magic, n_x, n_y, dx, x0, y0, t = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}")
    n = n_x * n_y
    expected = _HEADER.size + 4 * 8 * n
    if len(data) != expected:
        raise ValueError(f"snapshot holds {len(data)} bytes, expected {expected}")
    spec = GridSpec(n_x, n_y, dx, (x0, y0))
    fields = FieldSet.zeros(spec)
    payload = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(4, n_y, n_x)
    for name, values in zip(FIELD_NAMES, payload):
        fields.interior(name)[...] = values
    return fields, t


def read_snapshot(path: str | Path) -> tuple[FieldSet, float]:
    return parse_snapshot(Path(path).read_bytes())


def write_csv(path: str | Path, fields: FieldSet, max_cells: int = 250_000) -> Path:
    """One row per interior cell: ``i,j,x,y,h,hu,hv,z``."""
    spec = fields.spec
    if spec.n_cells > max_cells:
        raise ValueError(f"grid of {spec.n_cells} cells too large for CSV output (limit {max_cells})")
    x, y = spec.cell_centers()
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "x", "y", *FIELD_NAMES])
        cols = [fields.grid(name) for name in FIELD_NAMES]
        for j in range(1, spec.n_y + 1):
            for i in range(1, spec.n_x + 1):
                writer.writerow([i, j, repr(x[j, i]), repr(y[j, i]), *(repr(float(c[j, i])) for c in cols)])
    return path
