"""CSV and JSON writers for experiment outputs.

Floats are written with ``repr`` (shortest round-trip form) and JSON keys are
sorted, so equal results give equal bytes.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .domain import DensityField, GridSpec
from .primal import TransportPlan


def plain(obj):
    """Convert numpy scalars and arrays to JSON types; non-finite floats become strings."""
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return plain(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, Path):
        return str(obj)
    return obj


def write_json(path: Path, data: dict) -> Path:
    path.write_text(json.dumps(plain(data), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def _fmt(x) -> str:
    return repr(float(x))


def _write_rows(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def _cell_columns(grid: GridSpec):
    idx = grid.multi_indices()
    pts = grid.centers()
    header = [f"i{a}" for a in range(grid.dim)] + [f"x{a}" for a in range(grid.dim)]
    cells = [[str(int(v)) for v in i] + [_fmt(v) for v in p] for i, p in zip(idx, pts)]
    return header, cells


def write_density_csv(path: Path, f: DensityField) -> Path:
    """One row per cell: multi-index, center coordinates, value."""
    header, cells = _cell_columns(f.grid)
    return _write_rows(path, header + ["value"], (c + [_fmt(v)] for c, v in zip(cells, f.flat)))


def write_fields_csv(path: Path, grid: GridSpec, **fields) -> Path:
    """One row per cell with several named per-cell columns (e.g. ``phi``, ``psi``)."""
    header, cells = _cell_columns(grid)
    cols = [np.asarray(v, dtype=float).ravel() for v in fields.values()]
    rows = (c + [_fmt(col[i]) for col in cols] for i, c in enumerate(cells))
    return _write_rows(path, header + list(fields), rows)


def write_plan_csv(path: Path, plan: TransportPlan) -> Path:
    """One row per plan entry: source cell, target cell, mass, unit cost."""
    rows = ([str(int(s)), str(int(t)), _fmt(m), _fmt(k)]
            for s, t, m, k in zip(plan.sources, plan.targets, plan.masses, plan.unit_costs))
    return _write_rows(path, ["source", "target", "mass", "unit_cost"], rows)


def write_table_csv(path: Path, header, rows) -> Path:
    """Generic numeric table; integers are kept as integers."""
    def cell(v):
        if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
            return str(int(v))
        if isinstance(v, str):
            return v
        return _fmt(v)

    return _write_rows(path, header, ([cell(v) for v in row] for row in rows))
