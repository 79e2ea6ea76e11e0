"""c-transforms, the projection P and optimal dual potentials.

For a per-cell function ``xi`` the two transforms are::

    forward  xi^c(y)    = min_x k(y - x) - xi(x)
    reverse  zeta^cb(x) = min_y k(y - x) - zeta(y)

Both are exact min-plus convolutions with the snapped cost table, so on
dyadic inputs every identity below holds bit for bit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernel, _paths
from .domain import CostSpec, DensityField, GridSpec
from .primal import SolverError, TransportPlan, boundary_layer, plan_marginals, solve_exterior

__all__ = [
    "PotentialPair",
    "SlacknessReport",
    "c_transform",
    "project_P",
    "kantorovich_objective",
    "dual_from_plan",
    "duality_gap",
    "maximal_potential",
    "slackness_report",
]


def c_transform(xi, grid: GridSpec, c: CostSpec, direction: str = "forward") -> np.ndarray:
    """Forward (``xi^c``) or reverse (``xi^cb``) c-transform; ``-inf`` entries are ignored."""
    if direction not in ("forward", "reverse"):
        raise ValueError("direction must be 'forward' or 'reverse'")
    xi = np.asarray(xi, dtype=float)
    out = _kernel.min_plus(xi.ravel(), grid, c, reverse=direction == "reverse")
    return out.reshape(grid.shape)


def project_P(phi, grid: GridSpec, c: CostSpec) -> np.ndarray:
    """``P(phi) = ((phi^c) ∧ 0)^cb``."""
    return c_transform(np.minimum(c_transform(phi, grid, c), 0.0), grid, c, "reverse")


def kantorovich_objective(f: DensityField, phi, psi) -> float:
    """``K_f(phi, psi) = sum (f phi + (1 - f) psi) h^d`` with ``0 * inf = 0``."""
    fv = f.flat
    phi = np.asarray(phi, dtype=float).ravel()
    psi = np.asarray(psi, dtype=float).ravel()
    a = np.where(fv > 0, fv * np.where(fv > 0, phi, 0.0), 0.0)
    b = np.where(fv < 1, (1 - fv) * np.where(fv < 1, psi, 0.0), 0.0)
    return math.fsum(np.concatenate([a, b])) * f.grid.cell_volume


@dataclass(frozen=True, eq=False)
class PotentialPair:
    """Dual potentials ``(phi, psi)`` on a grid with ``psi <= 0`` and ``phi ⊕ psi <= c``."""

    phi: np.ndarray
    psi: np.ndarray
    grid: GridSpec
    cost: CostSpec

    def objective(self, f: DensityField) -> float:
        return kantorovich_objective(f, self.phi, self.psi)

    def violation(self) -> float:
        """Largest violation of ``psi <= 0`` and ``phi(x) + psi(y) <= c(x, y)``."""
        phi_c = c_transform(self.phi, self.grid, self.cost)
        v = max(float(np.max(self.psi)), float(np.max(self.psi - phi_c)))
        return max(v, 0.0)

    def is_canonical(self) -> bool:
        psi = np.minimum(c_transform(self.phi, self.grid, self.cost), 0.0)
        phi = c_transform(self.psi, self.grid, self.cost, "reverse")
        return bool(np.array_equal(psi, self.psi) and np.array_equal(phi, self.phi))

    def canonical(self) -> "PotentialPair":
        psi = np.minimum(c_transform(self.phi, self.grid, self.cost), 0.0)
        phi = c_transform(psi, self.grid, self.cost, "reverse")
        return PotentialPair(phi, psi, self.grid, self.cost)


def _check_objective(pair, f, value, rtol):
    k = pair.objective(f)
    if abs(value - k) > rtol * (1 + abs(value)):
        raise SolverError(f"dual objective {k} differs from plan value {value}: plan is not optimal")


def dual_from_plan(f: DensityField, plan: TransportPlan, c: CostSpec, rtol: float = 1e-6) -> PotentialPair:
    """Optimal potentials for ``f`` from a plan, canonicalized by ``psi <- (phi^c)_-``, ``phi <- psi^cb``.

    Uses the flow solver's node potentials when the plan carries them and
    otherwise solves the complementary slackness system on the plan's support.
    """
    if plan.phi is not None and plan.psi is not None:
        pair = PotentialPair(plan.phi.reshape(f.grid.shape), plan.psi.reshape(f.grid.shape), f.grid, c)
    else:
        pair = _slackness_system(f, plan, c)
    pair = pair.canonical()
    _check_objective(pair, f, plan.value, rtol)
    return pair


def duality_gap(f: DensityField, c: CostSpec) -> float:
    """Primal value minus the dual objective of the extracted potentials (signed)."""
    plan, value = solve_exterior(f, c)
    pair = dual_from_plan(f, plan, c, rtol=math.inf)
    return value - pair.objective(f)


def _slackness_system(f, plan, c, max_rounds=None):
    """Greatest ``psi`` solving the complementary slackness system of ``plan``.

    Iterates ``phi(x) = max over plan arcs (c - psi(y))`` and
    ``psi = min(psi, (phi^c) ∧ 0)`` from ``psi = 0``; this is a Bellman-Ford
    sweep on the difference constraints and stops at the greatest solution.
    """
    grid = f.grid
    psi = np.zeros(grid.size)
    src, tgt, k = plan.sources, plan.targets, plan.unit_costs
    rounds = max_rounds or 4 * grid.size + 10
    for _ in range(rounds):
        phi = np.full(grid.size, -np.inf)
        np.maximum.at(phi, src, k - psi[tgt])
        new = np.minimum(psi, np.minimum(_kernel.min_plus(phi, grid, c), 0.0))
        if np.array_equal(new, psi):
            return PotentialPair(phi.reshape(grid.shape), psi.reshape(grid.shape), grid, c)
        psi = new
    raise SolverError("complementary slackness system did not converge: plan is not optimal")


def _greatest_by_dijkstra(f, plan, c):
    """Same fixed point as :func:`_slackness_system`, by one Dijkstra pass.

    The plan's own optimal potentials are a feasible solution of the system
    and serve as the reweighting. Returns None if they are not feasible.
    """
    if plan.phi is None or plan.psi is None or not plan.certified:
        return None
    grid = f.grid
    table, _ = _kernel.offset_table(grid, c)
    shape = np.asarray(grid.shape)
    tshape = 2 * shape - 1
    strides = np.array([int(np.prod(tshape[a + 1:])) for a in range(grid.dim)], dtype=np.int64)
    base = int(((shape - 1) * strides).sum())

    def keys(cells):
        return (np.stack(np.unravel_index(cells, grid.shape), axis=1) * strides).sum(axis=1).astype(np.int64)

    free = np.flatnonzero(f.flat < 1)
    sources = np.flatnonzero(np.isfinite(plan.phi))
    if not np.array_equal(sources, np.unique(plan.sources)):
        return None
    y_of = np.full(grid.size, -1, np.int64)
    y_of[free] = np.arange(free.size)
    x_of = np.full(grid.size, -1, np.int64)
    x_of[sources] = np.arange(sources.size)
    ay = y_of[plan.targets]
    order = np.argsort(ay, kind="stable")
    arc_ptr = np.searchsorted(ay[order], np.arange(free.size + 1)).astype(np.int64)
    u0 = -plan.psi[free].astype(float)
    v0 = plan.phi[sources].astype(float)
    dy, dx, ok = _paths.reduced_dijkstra(u0, v0, keys(free) + base, keys(sources), table.ravel(), arc_ptr,
                                         x_of[plan.sources][order], plan.unit_costs[order].astype(float))
    if not ok:
        return None
    psi = np.full(grid.size, -np.inf)
    psi[free] = -(u0 - dy)
    phi = np.full(grid.size, -np.inf)
    phi[sources] = v0 - dx
    capped = np.flatnonzero(f.flat >= 1)
    if capped.size:
        psi[capped] = np.minimum(_kernel.min_plus(phi, grid, c)[capped], 0.0)
    return PotentialPair(phi.reshape(grid.shape), psi.reshape(grid.shape), grid, c)


def maximal_potential(f: DensityField, c: CostSpec, plan: TransportPlan | None = None,
                      method: str = "dijkstra") -> PotentialPair:
    """Canonical optimal pair whose ``psi`` is pointwise largest among optimal duals.

    Every optimal dual satisfies complementary slackness with any optimal plan,
    so the greatest solution of the slackness system of one optimal plan is
    the maximal element. It is returned after P-canonicalization.

    ``method="dijkstra"`` reweights the system by the solver's potentials and
    falls back to the Bellman-Ford sweep (``method="sweep"``) when those are
    unavailable.
    """
    if method not in ("dijkstra", "sweep"):
        raise ValueError("method must be 'dijkstra' or 'sweep'")
    if plan is None:
        plan, _ = solve_exterior(f, c)
    if plan.n_entries == 0:
        z = np.zeros(f.grid.shape)
        return PotentialPair(c_transform(z, f.grid, c, "reverse"), z, f.grid, c)
    pair = _greatest_by_dijkstra(f, plan, c) if method == "dijkstra" else None
    if pair is None:
        pair = _slackness_system(f, plan, c)
    pair = pair.canonical()
    _check_objective(pair, f, plan.value, 1e-6)
    return pair


@dataclass
class SlacknessReport:
    """Sign classes of ``chi = psi^{cb c}`` and violation fractions of the two laws."""

    chi: np.ndarray
    negative: np.ndarray
    positive: np.ndarray
    saturation_violation: float
    empty_violation: float
    excluded: int

    def as_dict(self) -> dict:
        return {
            "negative_cells": int(self.negative.sum()),
            "positive_cells": int(self.positive.sum()),
            "saturation_violation_fraction": self.saturation_violation,
            "empty_violation_fraction": self.empty_violation,
            "excluded_boundary_cells": self.excluded,
        }


def slackness_report(f: DensityField, plan: TransportPlan, pair: PotentialPair, tol: float = 1e-9,
                     exclude_boundary: bool = False) -> SlacknessReport:
    """Check ``f + g = 1`` where ``chi < 0`` and ``g = 0`` where ``chi > 0``.

    On the grid both laws hold exactly for optimal data, so by default no
    boundary layer is excluded.
    """
    grid = f.grid
    chi = c_transform(c_transform(pair.psi, grid, pair.cost, "reverse"), grid, pair.cost)
    _, g = plan_marginals(plan)
    fv, gv = f.values, g.values
    neg, pos = chi < 0, chi > 0
    mask = np.ones(grid.shape, dtype=bool)
    excluded = 0
    if exclude_boundary:
        layer = boundary_layer(np.sign(chi).astype(int), grid)
        mask = ~layer
        excluded = int(layer.sum())
    bad_sat = neg & (np.abs(fv + gv - 1) > tol) & mask
    bad_empty = pos & (gv > tol) & mask
    n_neg = int((neg & mask).sum())
    n_pos = int((pos & mask).sum())
    return SlacknessReport(
        chi, neg, pos,
        bad_sat.sum() / n_neg if n_neg else 0.0,
        bad_empty.sum() / n_pos if n_pos else 0.0,
        excluded,
    )
