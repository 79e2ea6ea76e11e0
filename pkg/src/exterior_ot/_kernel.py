"""Snapped cost tables and min-plus convolutions on regular grids.

Costs are rounded to multiples of ``2**-bits``. Potentials produced by the flow
solver are integers in the same unit, so every min-plus operation below is
exact in double precision.
"""

from __future__ import annotations

import math
from functools import lru_cache

import numpy as np

from .domain import CostSpec, GridSpec

_CHUNK = 1 << 22


def cost_bits(grid: GridSpec, cost: CostSpec) -> int:
    """Binary precision of snapped costs; at most 30, lowered for very large costs."""
    diag = grid.spacing * math.sqrt(sum((n - 1) ** 2 for n in grid.shape))
    reach = diag if cost.cap is None else min(diag, cost.cap)
    top = float(cost.max_within(max(reach, grid.spacing), grid.dim))
    return int(min(30, 46 - math.ceil(math.log2(top + 1.0))))


@lru_cache(maxsize=64)
def offset_table(grid: GridSpec, cost: CostSpec) -> tuple[np.ndarray, int]:
    """Snapped cost ``k(h * delta)`` for every index offset ``delta`` on the grid.

    Returns an array of shape ``(2n_1 - 1, ..., 2n_d - 1)`` indexed by
    ``delta + (n - 1)`` and the number of bits used. Entries beyond the cap are +inf.
    """
    bits = cost_bits(grid, cost)
    axes = [np.arange(-(n - 1), n) * grid.spacing for n in grid.shape]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
    raw = cost.evaluate_capped(mesh)
    scale = float(2 ** bits)
    table = np.where(np.isfinite(raw), np.round(raw * scale) / scale, np.inf)
    table.setflags(write=False)
    return table, bits


def stencil(grid: GridSpec, cost: CostSpec, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """Index offsets with ``|h delta| <= radius`` and finite cost, plus their snapped costs."""
    table, _ = offset_table(grid, cost)
    shape = np.asarray(grid.shape)
    idx = np.stack(np.nonzero(np.isfinite(table)), axis=1)
    delta = idx - (shape - 1)
    dist = np.linalg.norm(delta * grid.spacing, axis=1)
    keep = dist <= radius * (1 + 1e-12)
    delta = delta[keep]
    return delta, table[tuple(idx[keep].T)]


def min_plus(xi: np.ndarray, grid: GridSpec, cost: CostSpec, reverse: bool = False,
             out_mask: np.ndarray | None = None) -> np.ndarray:
    """``out[y] = min_x k(y - x) - xi[x]`` (or ``k(x - y)`` with ``reverse``).

    ``xi`` is a flat per-cell array; entries equal to ``-inf`` are ignored.
    ``out_mask`` restricts which outputs are computed (others are +inf).
    """
    table, _ = offset_table(grid, cost)
    if reverse:
        table = table[(slice(None, None, -1),) * grid.dim]
    xi = np.asarray(xi, dtype=float).ravel()
    out = np.full(grid.size, np.inf)
    active = np.flatnonzero(xi > -np.inf)
    if active.size == 0:
        return out
    targets = np.arange(grid.size) if out_mask is None else np.flatnonzero(np.ravel(out_mask))
    if targets.size == 0:
        return out
    finite_offsets = int(np.isfinite(table).sum())
    if finite_offsets < active.size:
        return _min_plus_stencil(xi, grid, table, out, targets)
    shape = np.asarray(grid.shape)
    tshape = 2 * shape - 1
    tstrides = np.array([int(np.prod(tshape[a + 1:])) for a in range(grid.dim)])
    src_idx = np.stack(np.unravel_index(active, grid.shape), axis=1)
    src_key = (src_idx * tstrides).sum(axis=1)
    base = ((shape - 1) * tstrides).sum()
    vals = xi[active]
    flat_table = table.ravel()
    rows = max(1, _CHUNK // active.size)
    for start in range(0, targets.size, rows):
        tg = targets[start:start + rows]
        tg_idx = np.stack(np.unravel_index(tg, grid.shape), axis=1)
        tg_key = (tg_idx * tstrides).sum(axis=1) + base
        block = flat_table[tg_key[:, None] - src_key[None, :]] - vals[None, :]
        out[tg] = block.min(axis=1)
    return out


def _min_plus_stencil(xi, grid, table, out, targets):
    shape = np.asarray(grid.shape)
    field = xi.reshape(grid.shape)
    acc = np.full(grid.shape, np.inf)
    idx = np.stack(np.nonzero(np.isfinite(table)), axis=1)
    for pos in idx:
        delta = pos - (shape - 1)
        k = table[tuple(pos)]
        # out[y] uses xi[y - delta]
        dst = tuple(slice(max(0, dl), n + min(0, dl)) for dl, n in zip(delta, shape))
        src = tuple(slice(max(0, -dl), n + min(0, -dl)) for dl, n in zip(delta, shape))
        np.minimum(acc[dst], k - field[src], out=acc[dst])
    res = acc.ravel()
    out[targets] = res[targets]
    return out


def pair_costs(grid: GridSpec, cost: CostSpec, src: np.ndarray, tgt: np.ndarray) -> np.ndarray:
    """Snapped costs ``k(y - x)`` for flat index pairs."""
    table, _ = offset_table(grid, cost)
    shape = np.asarray(grid.shape)
    a = np.stack(np.unravel_index(np.asarray(src), grid.shape), axis=-1)
    b = np.stack(np.unravel_index(np.asarray(tgt), grid.shape), axis=-1)
    return table[tuple((b - a + shape - 1).T)]
