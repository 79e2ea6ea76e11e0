"""Exact solver for the discrete exterior transport problem.

The problem on a grid with cell volume ``h^d`` is the transportation LP::

    minimize   sum_{x,y} k(y - x) gamma(x, y)
    subject to sum_y gamma(x, y) = f(x) h^d
               sum_x gamma(x, y) <= (1 - f(y)) h^d
               gamma >= 0

Masses are quantized to integers (``h^d / 2**mass_bits``) and costs to
``2**-bits``; the resulting integer problem is solved exactly by a network
simplex. A dummy source with zero-cost arcs to every target absorbs the
unused capacity. Self-arcs ``(x, x)`` are allowed and cost nothing.
"""

from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernel
from ._netsimplex import INFEASIBLE, OPTIMAL, solve_flow
from .domain import CostSpec, DensityField, GridSpec, l1_distance, mass, support_radius, unit_ball_volume

__all__ = [
    "InfeasibleError",
    "SolverError",
    "TransportPlan",
    "SaturationReport",
    "solve_exterior",
    "plan_marginals",
    "saturation_report",
    "second_marginal_uniqueness_check",
    "classical_cost",
    "boundary_layer",
]

DEFAULT_MASS_BITS = 20
MULTISCALE_CELLS = 2048


class InfeasibleError(ValueError):
    """Mass of f exceeds the free capacity of the grid."""


class SolverError(RuntimeError):
    """The flow solver did not reach a certified optimum."""

    def __init__(self, message, best_bound=None):
        super().__init__(message)
        self.best_bound = best_bound


@dataclass(frozen=True, eq=False)
class TransportPlan:
    """Sparse optimal plan: ``masses[i]`` moves from ``sources[i]`` to ``targets[i]``.

    Indices are flat (C-order) cell indices of ``grid``. ``flow_units`` and
    ``value_units`` hold the exact integer solution; ``value`` is its rescaling.
    ``phi`` and ``psi`` are the solver's node potentials extended to every cell
    (``phi = -inf`` off the support of f).
    """

    grid: GridSpec
    sources: np.ndarray
    targets: np.ndarray
    masses: np.ndarray
    unit_costs: np.ndarray
    value: float
    flow_units: np.ndarray = None
    value_units: int = 0
    mass_bits: int = DEFAULT_MASS_BITS
    cost_bits: int = 30
    radius: float = math.inf
    radius_mode: str = "full"
    proof_radius: float = math.nan
    certified: bool = True
    phi: np.ndarray | None = None
    psi: np.ndarray | None = None
    pivots: int = 0
    runtime: float = 0.0
    info: dict = field(default_factory=dict)

    @property
    def n_entries(self) -> int:
        return int(self.sources.size)

    def summary(self) -> dict:
        return {
            "value": self.value,
            "entries": self.n_entries,
            "radius": self.radius,
            "radius_mode": self.radius_mode,
            "proof_radius": self.proof_radius,
            "certified": self.certified,
            "pivots": self.pivots,
            "runtime": self.runtime,
        }


def _empty_plan(grid, bits, mass_bits, start):
    z = np.zeros(0, np.int64)
    return TransportPlan(grid, z, z.copy(), np.zeros(0), np.zeros(0), 0.0, z.copy(), 0, mass_bits, bits,
                         0.0, "empty", math.nan, True, np.full(grid.size, -np.inf), np.zeros(grid.size),
                         0, time.perf_counter() - start)


def _quantize(values: np.ndarray, mass_bits: int) -> np.ndarray:
    return np.rint(np.asarray(values, dtype=float).ravel() * 2 ** mass_bits).astype(np.int64)


def _reach(grid: GridSpec, cap: np.ndarray, m: float, r_max: float) -> np.ndarray:
    """Per-cell starting arc radius: distance to free space plus a margin."""
    from scipy import ndimage

    d = grid.dim
    full = (cap == 0).reshape(grid.shape)
    if full.any():
        padded = np.pad(full, 1, constant_values=False)
        dist = ndimage.distance_transform_edt(padded, sampling=grid.spacing)
        dist = dist[(slice(1, -1),) * d].ravel()
    else:
        dist = np.zeros(grid.size)
    inner = (m / unit_ball_volume(d)) ** (1.0 / d)
    margin = 0.5 * (2 ** (1.0 / d) - 1.0) * inner + 2.0 * grid.spacing * math.sqrt(d)
    return np.minimum(dist + margin, r_max)


def _build_arcs(grid, cost, supply, cap, reach):
    """Arcs from each source cell to free cells within its reach, sorted by (source, target)."""
    sources = np.flatnonzero(supply > 0)
    reach = np.broadcast_to(np.asarray(reach, dtype=float), (grid.size,))[sources]
    offsets, costs = _kernel.stencil(grid, cost, float(reach.max()))
    dist = np.linalg.norm(offsets * grid.spacing, axis=1)
    shape = np.asarray(grid.shape)
    sidx = np.stack(np.unravel_index(sources, grid.shape), axis=1)
    src_parts, tgt_parts, cost_parts = [], [], []
    for delta, k, r in zip(offsets, costs, dist):
        sel = reach >= r * (1 - 1e-12)
        t = sidx[sel] + delta
        ok = np.all((t >= 0) & (t < shape), axis=1)
        if not ok.any():
            continue
        tflat = np.ravel_multi_index(tuple(t[ok].T), grid.shape)
        free = cap[tflat] > 0
        if not free.any():
            continue
        src_parts.append(sources[sel][ok][free])
        tgt_parts.append(tflat[free])
        cost_parts.append(np.full(int(free.sum()), k))
    if not src_parts:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    return _sort_arcs(np.concatenate(src_parts), np.concatenate(tgt_parts), np.concatenate(cost_parts))


def _sort_arcs(src, tgt, cst):
    order = np.lexsort((tgt, src))
    return src[order], tgt[order], cst[order]


def _coarse_arcs(f: DensityField, c: CostSpec, supply, cap, mass_bits):
    """Candidate arcs from the optimal plan of the 2x coarser problem.

    Each coarse arc (and its one-cell neighbourhood on the target side) is
    expanded to all fine parent/child pairs.
    """
    grid = f.grid
    d = grid.dim
    pad = [(0, n % 2) for n in grid.shape]
    fine = np.pad(f.values, pad)
    cshape = tuple(n // 2 for n in fine.shape)
    blocks = fine.reshape([x for n in cshape for x in (n, 2)])
    coarse_vals = blocks.mean(axis=tuple(range(1, 2 * d, 2)))
    cgrid = GridSpec(cshape, 2 * grid.spacing, tuple(o + grid.spacing / 2 for o in grid.origin))
    cplan, _ = solve_exterior(DensityField(cgrid, coarse_vals), c, mass_bits=mass_bits)
    cs = np.stack(np.unravel_index(cplan.sources, cshape), axis=1)
    ct = np.stack(np.unravel_index(cplan.targets, cshape), axis=1)
    near = np.stack(np.meshgrid(*([np.arange(-1, 2)] * d), indexing="ij"), -1).reshape(-1, d)
    kids = np.stack(np.meshgrid(*([np.arange(2)] * d), indexing="ij"), -1).reshape(-1, d)
    ct = (ct[:, None, :] + near[None]).reshape(-1, d)
    cs = np.repeat(cs, near.shape[0], axis=0)
    key = np.unique(np.concatenate([cs, ct], axis=1), axis=0)
    cs, ct = key[:, :d], key[:, d:]
    fs = (2 * cs[:, None, None, :] + kids[None, :, None, :])
    ft = (2 * ct[:, None, None, :] + kids[None, None, :, :])
    fs, ft = np.broadcast_arrays(fs, ft)
    fs, ft = fs.reshape(-1, d), ft.reshape(-1, d)
    shape = np.asarray(grid.shape)
    ok = np.all((fs < shape) & (ft >= 0) & (ft < shape), axis=1)
    fs = np.ravel_multi_index(tuple(fs[ok].T), grid.shape)
    ft = np.ravel_multi_index(tuple(ft[ok].T), grid.shape)
    ok = (supply[fs] > 0) & (cap[ft] > 0)
    fs, ft = fs[ok], ft[ok]
    cst = _kernel.pair_costs(grid, c, fs, ft)
    ok = np.isfinite(cst)
    return fs[ok], ft[ok], cst[ok]


def _merge_arcs(*parts):
    src = np.concatenate([p[0] for p in parts]).astype(np.int64)
    tgt = np.concatenate([p[1] for p in parts]).astype(np.int64)
    cst = np.concatenate([p[2] for p in parts])
    big = int(max(src.max(initial=0), tgt.max(initial=0))) + 1
    _, first = np.unique(src * big + tgt, return_index=True)
    return _sort_arcs(src[first], tgt[first], cst[first])


def _violating_arcs(phi, psi, cells, grid, cost, per_target=32):
    """Arcs ``(x, y)`` with ``phi[x] + psi[y] > k(y - x)`` for the target cells given.

    At most ``per_target`` most violated sources are returned per target.
    """
    table, _ = _kernel.offset_table(grid, cost)
    flat_table = table.ravel()
    shape = np.asarray(grid.shape)
    tshape = 2 * shape - 1
    strides = np.array([int(np.prod(tshape[a + 1:])) for a in range(grid.dim)])
    sources = np.flatnonzero(np.isfinite(phi))
    skey = (np.stack(np.unravel_index(sources, grid.shape), axis=1) * strides).sum(axis=1)
    base = ((shape - 1) * strides).sum()
    out_s, out_t, out_c = [], [], []
    rows = max(1, (1 << 22) // max(1, sources.size))
    for start in range(0, cells.size, rows):
        ys = cells[start:start + rows]
        ykey = (np.stack(np.unravel_index(ys, grid.shape), axis=1) * strides).sum(axis=1) + base
        k = flat_table[ykey[:, None] - skey[None, :]]
        excess = phi[sources][None, :] - k - psi[ys][:, None]
        take = min(per_target, sources.size)
        part = np.argpartition(-excess, take - 1, axis=1)[:, :take]
        ex = np.take_along_axis(excess, part, axis=1)
        row, col = np.nonzero(ex > 0)
        js = part[row, col]
        out_s.append(sources[js])
        out_t.append(ys[row])
        out_c.append(k[row, js])
    if not out_s:
        return np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0)
    return np.concatenate(out_s), np.concatenate(out_t), np.concatenate(out_c)


def solve_exterior(f: DensityField, c: CostSpec, *, radius="auto", mass_bits: int = DEFAULT_MASS_BITS,
                   arc_seed: int | None = None, tie_break: str = "priority",
                   max_rounds: int = 60) -> tuple[TransportPlan, float]:
    """Solve the exterior transport problem for ``f`` exactly.

    Parameters
    ----------
    f : DensityField
        Source density; values are quantized to multiples of ``2**-mass_bits``.
    c : CostSpec
        Translation-invariant cost.
    radius : {"auto", "proof", "full"} or float
        Arc pruning. ``"auto"`` starts from short arcs (distance to free space
        plus a margin) and adds every arc that violates dual feasibility until
        the dual certificate holds over all arcs allowed by the cost cap.
        ``"proof"`` keeps arcs up to the support radius of the existence
        construction, ``"full"`` keeps every arc, a float keeps arcs up to that
        length. Fixed radii still report whether the certificate holds.
    arc_seed : int, optional
        Shuffle the arc order with this seed instead of the lexicographic
        (source, target) order. Used to probe degenerate optima.
    tie_break : {"priority", "none"}
        The discrete second marginal is not unique when the cost has ties.
        With ``"priority"`` (default) a second exact flow on the optimal face
        selects the optimal plan whose second marginal fills cells in a fixed
        order (see :func:`cell_priority`). ``"none"`` returns the first
        optimal basis found.

    Returns
    -------
    plan : TransportPlan
    value : float
    """
    start = time.perf_counter()
    grid = f.grid
    _, bits = _kernel.offset_table(grid, c)
    supply = _quantize(f.values, mass_bits)
    unit = 1 << mass_bits
    cap = unit - supply
    total = int(supply.sum())
    if total == 0:
        return _empty_plan(grid, bits, mass_bits, start), 0.0
    if total > int(cap.sum()):
        raise InfeasibleError(
            f"mass {mass(f):.6g} exceeds free capacity {cap.sum() / unit * grid.cell_volume:.6g}")

    m = total / unit * grid.cell_volume
    diam = grid.spacing * math.sqrt(sum((n - 1) ** 2 for n in grid.shape))
    r_max = diam if c.cap is None else min(diam, c.cap)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        try:
            r_proof = support_radius(c, m, grid.dim)
        except RuntimeError:
            r_proof = math.inf
    grow = radius == "auto"
    multiscale = grow and grid.size >= MULTISCALE_CELLS and min(grid.shape) >= 8
    if multiscale:
        reach, mode = min(2.0 * grid.spacing * math.sqrt(grid.dim), r_max), "empirical"
    elif grow:
        reach, mode = _reach(grid, cap, m, r_max), "empirical"
    elif radius == "proof":
        reach, mode = min(r_proof, r_max), "proof"
    elif radius == "full":
        reach, mode = r_max, "full"
    else:
        reach, mode = min(float(radius), r_max), "fixed"
    src, tgt, cst = _build_arcs(grid, c, supply, cap, reach)
    if multiscale:
        src, tgt, cst = _merge_arcs((src, tgt, cst), _coarse_arcs(f, c, supply, cap, mass_bits))

    scale = float(2 ** bits)
    free = cap > 0
    sources = np.flatnonzero(supply > 0)
    ns = sources.size
    node_of_src = np.full(grid.size, -1, np.int64)
    node_of_src[sources] = np.arange(ns)
    rounds = 0
    pivots = 0
    while True:
        rounds += 1
        targets = np.unique(tgt)
        nt = targets.size
        reach_cap = int(cap[targets].sum())
        status = INFEASIBLE
        if reach_cap >= total:
            node_of_tgt = np.full(grid.size, -1, np.int64)
            node_of_tgt[targets] = ns + 1 + np.arange(nt)
            node_supply = np.concatenate([supply[sources], [reach_cap - total], -cap[targets]])
            a_src = np.concatenate([node_of_src[src], np.full(nt, ns)])
            a_tgt = np.concatenate([node_of_tgt[tgt], node_of_tgt[targets]])
            a_cost_int = np.rint(cst * scale).astype(np.int64)
            a_cost = np.concatenate([a_cost_int, np.zeros(nt, np.int64)])
            perm = None
            if arc_seed is not None:
                perm = np.random.default_rng(arc_seed + rounds).permutation(a_src.size)
                a_src, a_tgt, a_cost = a_src[perm], a_tgt[perm], a_cost[perm]
            flow, pi, status, piv = solve_flow(node_supply, a_src, a_tgt, a_cost)
            pivots += int(piv)
            if perm is not None:
                inv = np.empty_like(perm)
                inv[perm] = np.arange(perm.size)
                flow = flow[inv]
        if status == INFEASIBLE:
            if not grow or rounds >= max_rounds:
                raise InfeasibleError("pruned arc set cannot absorb the mass of f; increase the radius")
            reach = np.minimum(2 * np.maximum(reach, grid.spacing), r_max)
            src, tgt, cst = _build_arcs(grid, c, supply, cap, reach)
            continue
        if status != OPTIMAL:
            raise SolverError("network simplex hit its pivot limit",
                              best_bound=float(np.dot(flow[:src.size], a_cost_int)) / scale)

        pi_dummy = pi[ns]
        phi = np.full(grid.size, -np.inf)
        phi[sources] = (pi_dummy - pi[:ns]) / scale
        psi = np.zeros(grid.size)
        psi[targets] = (pi[ns + 1:] - pi_dummy) / scale
        phi_c = _kernel.min_plus(phi, grid, c)
        violated = np.flatnonzero(free & (phi_c < psi))
        certified = violated.size == 0
        if certified or not grow or rounds >= max_rounds:
            break
        src, tgt, cst = _merge_arcs((src, tgt, cst), _violating_arcs(phi, psi, violated, grid, c))

    psi[~free] = np.minimum(0.0, phi_c[~free])
    flow = flow[:src.size]
    used = flow > 0
    p_src, p_tgt, p_flow, p_cost = src[used], tgt[used], flow[used], cst[used]
    cost_int = a_cost_int[used]
    value_units = sum(int(a) * int(b) for a, b in zip(p_flow, cost_int))
    value = value_units / scale / unit * grid.cell_volume
    masses = p_flow / unit * grid.cell_volume
    arc_len = float(np.linalg.norm(
        (np.stack(np.unravel_index(tgt, grid.shape), 1) - np.stack(np.unravel_index(src, grid.shape), 1))
        * grid.spacing, axis=1).max()) if src.size else 0.0
    plan = TransportPlan(
        grid=grid, sources=p_src, targets=p_tgt, masses=masses, unit_costs=p_cost, value=value,
        flow_units=p_flow, value_units=value_units, mass_bits=mass_bits, cost_bits=bits,
        radius=arc_len, radius_mode=mode, proof_radius=float(r_proof), certified=bool(certified),
        phi=phi, psi=psi, pivots=pivots, runtime=time.perf_counter() - start,
        info={"rounds": rounds, "arcs": int(src.size)},
    )
    if tie_break == "priority" and certified:
        plan = _canonical_marginal(f, c, plan)
        plan = replace(plan, runtime=time.perf_counter() - start)
    elif tie_break not in ("priority", "none"):
        raise ValueError(f"unknown tie_break {tie_break!r}")
    return plan, value


def _tight_arcs(phi, psi, grid, cost, scale):
    """All pairs ``(x, y)`` with ``phi[x] + psi[y] == k(y - x)`` and free capacity at ``y``."""
    table, _ = _kernel.offset_table(grid, cost)
    flat_table = table.ravel()
    shape = np.asarray(grid.shape)
    tshape = 2 * shape - 1
    strides = np.array([int(np.prod(tshape[a + 1:])) for a in range(grid.dim)])
    sources = np.flatnonzero(np.isfinite(phi))
    skey = (np.stack(np.unravel_index(sources, grid.shape), axis=1) * strides).sum(axis=1)
    base = ((shape - 1) * strides).sum()
    cells = np.flatnonzero(np.isfinite(psi))
    out_s, out_t, out_c = [], [], []
    rows = max(1, (1 << 22) // max(1, sources.size))
    for start in range(0, cells.size, rows):
        ys = cells[start:start + rows]
        ykey = (np.stack(np.unravel_index(ys, grid.shape), axis=1) * strides).sum(axis=1) + base
        k = flat_table[ykey[:, None] - skey[None, :]]
        row, col = np.nonzero(phi[sources][None, :] + psi[ys][:, None] == k)
        out_s.append(sources[col])
        out_t.append(ys[row])
        out_c.append(k[row, col])
    return _sort_arcs(np.concatenate(out_s), np.concatenate(out_t), np.concatenate(out_c))


def cell_priority(grid: GridSpec) -> np.ndarray:
    """Rank of each cell by distance to the grid center, ties by flat index."""
    center = np.asarray(grid.origin) + grid.spacing * (np.asarray(grid.shape) - 1) / 2
    order = np.lexsort((np.arange(grid.size), grid.norms(center).ravel()))
    rank = np.empty(grid.size, dtype=np.int64)
    rank[order] = np.arange(grid.size)
    return rank


def _canonical_marginal(f: DensityField, c: CostSpec, plan: TransportPlan) -> TransportPlan:
    """Among optimal plans, one whose second marginal minimizes ``sum rank(y) g(y)``.

    The optimal face is the set of feasible plans supported on tight arcs of
    the solver's dual that saturate every target with ``psi < 0``. A second
    exact flow over that face, with arc cost equal to the target's
    :func:`cell_priority`, fills tie cells in a fixed order that does not
    depend on ``f``.
    """
    grid = f.grid
    unit = 1 << plan.mass_bits
    scale = float(2 ** plan.cost_bits)
    supply = _quantize(f.values, plan.mass_bits)
    cap = unit - supply
    psi = np.where(cap > 0, plan.psi, np.nan)
    src, tgt, cst = _tight_arcs(plan.phi, np.where(np.isnan(psi), -np.inf, psi), grid, c, scale)
    ok = cap[tgt] > 0
    src, tgt, cst = src[ok], tgt[ok], cst[ok]
    sources = np.flatnonzero(supply > 0)
    targets = np.unique(tgt)
    ns, nt = sources.size, targets.size
    node_of_src = np.full(grid.size, -1, np.int64)
    node_of_src[sources] = np.arange(ns)
    node_of_tgt = np.full(grid.size, -1, np.int64)
    node_of_tgt[targets] = ns + 1 + np.arange(nt)
    open_t = targets[plan.psi[targets] == 0]
    total = int(supply.sum())
    node_supply = np.concatenate([supply[sources], [int(cap[targets].sum()) - total], -cap[targets]])
    a_src = np.concatenate([node_of_src[src], np.full(open_t.size, ns)])
    a_tgt = np.concatenate([node_of_tgt[tgt], node_of_tgt[open_t]])
    a_cost = np.concatenate([cell_priority(grid)[tgt], np.zeros(open_t.size, np.int64)])
    flow, _, status, piv = solve_flow(node_supply, a_src, a_tgt, a_cost)
    if status != OPTIMAL:
        raise SolverError("tie-breaking flow on the optimal face failed")
    flow = flow[:src.size]
    used = flow > 0
    p_src, p_tgt, p_flow, p_cost = src[used], tgt[used], flow[used], cst[used]
    cost_int = np.rint(p_cost * scale).astype(np.int64)
    value_units = sum(int(x) * int(y) for x, y in zip(p_flow, cost_int))
    if value_units != plan.value_units:
        raise SolverError("tie-breaking changed the optimal value")
    info = dict(plan.info, tie_break="priority", tight_arcs=int(src.size))
    return replace(plan, sources=p_src, targets=p_tgt, masses=p_flow / unit * grid.cell_volume,
                   unit_costs=p_cost, flow_units=p_flow, pivots=plan.pivots + int(piv), info=info)


def plan_marginals(plan: TransportPlan) -> tuple[DensityField, DensityField]:
    """First and second marginals of ``plan`` as densities."""
    grid = plan.grid
    if plan.flow_units is not None and plan.flow_units.size == plan.masses.size:
        unit = float(1 << plan.mass_bits)
        first = np.bincount(plan.sources, plan.flow_units.astype(float), grid.size) / unit
        second = np.bincount(plan.targets, plan.flow_units.astype(float), grid.size) / unit
    else:
        first = np.bincount(plan.sources, plan.masses, grid.size) / grid.cell_volume
        second = np.bincount(plan.targets, plan.masses, grid.size) / grid.cell_volume
    return (DensityField(grid, np.clip(first, 0, 1)), DensityField(grid, np.clip(second, 0, 1)))


def boundary_layer(labels: np.ndarray, grid: GridSpec, width: int = 1) -> np.ndarray:
    """Cells within ``width`` cells (Chebyshev) of a cell with a different label."""
    from scipy import ndimage

    labels = np.asarray(labels).reshape(grid.shape)
    out = np.zeros(grid.shape, dtype=bool)
    footprint = np.ones((2 * width + 1,) * grid.dim, dtype=bool)
    for v in np.unique(labels):
        region = labels == v
        grown = ndimage.binary_dilation(region, structure=footprint)
        out |= grown & ~region
    return out


@dataclass
class SaturationReport:
    """Cell classification of ``g`` against ``{f, 1 - f}``.

    ``fraction`` counts cells with ``g`` matching ``1 - f`` (set E) or ``f``
    (complement of E), ignoring cells in the boundary layer of E.
    """

    fraction: float
    violating_cells: np.ndarray
    active_set: np.ndarray
    excluded: int
    tolerance: float

    def as_dict(self) -> dict:
        return {
            "fraction": self.fraction,
            "violations": int(self.violating_cells.size),
            "excluded_boundary_cells": self.excluded,
            "active_set_cells": int(self.active_set.sum()),
            "tolerance": self.tolerance,
        }


def saturation_report(f: DensityField, plan: TransportPlan, c: CostSpec | None = None,
                      tol: float | None = None, exclude_boundary: bool = True) -> SaturationReport:
    """Classify each cell as ``g = 1 - f`` (set E), ``g = f`` or violation.

    E is the set of cells touched by a non-self arc of the plan. The default
    tolerance is ``max(1e-6, 2 h Lip(k))`` clipped to 1/4 so that the two
    classes stay distinguishable; cells within one cell of the boundary of E
    or of the support of f are excluded from the count.
    """
    grid = f.grid
    _, g = plan_marginals(plan)
    fv, gv = f.flat, g.flat
    if tol is None:
        lip = c.lipschitz(grid.spacing * 4, grid.dim) if c is not None else 1.0
        tol = min(0.25, max(1e-6, 2 * grid.spacing * lip))
    moving = plan.sources != plan.targets
    active = np.zeros(grid.size, dtype=bool)
    active[plan.sources[moving]] = True
    active[plan.targets[moving]] = True
    is_e = np.abs(gv - (1 - fv)) <= tol
    is_ec = np.abs(gv - fv) <= tol
    ok = is_e | is_ec
    mask = np.ones(grid.size, dtype=bool)
    excluded = 0
    if exclude_boundary:
        labels = active.astype(int) + 2 * (fv > 0) + 4 * (gv > tol)
        layer = boundary_layer(labels, grid).ravel()
        mask = ~layer
        excluded = int(layer.sum())
    counted = int(mask.sum())
    good = int((ok & mask).sum())
    fraction = good / counted if counted else 1.0
    return SaturationReport(fraction, np.flatnonzero(~ok & mask), active.reshape(grid.shape), excluded, tol)


def second_marginal_uniqueness_check(f: DensityField, c: CostSpec, trials: int = 3, radius="auto",
                                     tie_break: str = "priority") -> float:
    """Largest pairwise L1 distance between second marginals of re-solves.

    The first solve uses the lexicographic arc order, later ones shuffle it.
    Pass ``tie_break="none"`` to compare raw optimal bases.
    """
    if trials < 2:
        raise ValueError("trials must be at least 2")
    seconds = []
    for t in range(trials):
        plan, _ = solve_exterior(f, c, radius=radius, tie_break=tie_break,
                                 arc_seed=None if t == 0 else 1000 + t)
        seconds.append(plan_marginals(plan)[1])
    return max(l1_distance(a, b) for i, a in enumerate(seconds) for b in seconds[i + 1:])


def classical_cost(f: DensityField, g: DensityField, c: CostSpec, mass_bits: int = DEFAULT_MASS_BITS,
                   tol: float = 1e-6) -> float:
    """Optimal transport cost between equal-mass densities ``f`` and ``g``."""
    if f.grid != g.grid:
        raise ValueError("classical_cost needs densities on the same grid")
    grid = f.grid
    mf, mg = mass(f), mass(g)
    if abs(mf - mg) > tol * max(1.0, mf):
        raise ValueError(f"mass mismatch: {mf} vs {mg}")
    table, bits = _kernel.offset_table(grid, c)
    a = _quantize(f.values, mass_bits)
    b = _quantize(g.values, mass_bits)
    diff = int(a.sum() - b.sum())
    if diff:
        # absorb the rounding residue on the largest cells of g
        order = np.argsort(-b, kind="stable")
        step = 1 if diff > 0 else -1
        for i in range(abs(diff)):
            b[order[i % order.size]] += step
    src_cells = np.flatnonzero(a > 0)
    tgt_cells = np.flatnonzero(b > 0)
    if src_cells.size == 0:
        return 0.0
    ss, tt = np.meshgrid(src_cells, tgt_cells, indexing="ij")
    ss, tt = ss.ravel(), tt.ravel()
    cst = _kernel.pair_costs(grid, c, ss, tt)
    keep = np.isfinite(cst)
    ss, tt, cst = ss[keep], tt[keep], cst[keep]
    scale = float(2 ** bits)
    ns = src_cells.size
    node_s = np.full(grid.size, -1, np.int64)
    node_s[src_cells] = np.arange(ns)
    node_t = np.full(grid.size, -1, np.int64)
    node_t[tgt_cells] = ns + np.arange(tgt_cells.size)
    supply = np.concatenate([a[src_cells], -b[tgt_cells]])
    cost_int = np.rint(cst * scale).astype(np.int64)
    flow, _, status, _ = solve_flow(supply, node_s[ss], node_t[tt], cost_int)
    if status != OPTIMAL:
        raise SolverError("classical transport problem not solved to optimality")
    units = sum(int(x) * int(y) for x, y in zip(flow[flow > 0], cost_int[flow > 0]))
    return units / scale / float(1 << mass_bits) * grid.cell_volume
