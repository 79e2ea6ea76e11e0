"""Independent brute-force verifiers for tiny instances.

Nothing here calls the flow solver, the transform kernels or the bathtub
routine; agreement with them is evidence rather than tautology. The only shared
piece is the problem definition itself: the cost function and the integer
quantization rule (masses in units of ``h^d / 2**mass_bits``, costs rounded to
``2**-cost_bits``).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import integrate

from .domain import CostSpec, DensityField

__all__ = ["DenseLPInstance", "OracleSizeError", "brute_lp", "monotone_1d", "exhaustive_bathtub", "rational_simplex",
           "unimodular_simplex"]

MAX_LP_CELLS = 200
MAX_BATHTUB_CELLS = 12


class OracleSizeError(ValueError):
    """Instance exceeds the documented oracle size limit."""


@dataclass(frozen=True, eq=False)
class DenseLPInstance:
    """Dense integer transportation LP: supplies, capacities and a full cost matrix."""

    costs: np.ndarray
    supplies: np.ndarray
    capacities: np.ndarray
    sources: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        if self.costs.shape != (self.sources.size, self.targets.size):
            raise ValueError("cost matrix does not match sources x targets")
        if np.any(self.supplies < 0) or np.any(self.capacities < 0):
            raise ValueError("supplies and capacities must be nonnegative")

    @classmethod
    def from_density(cls, f: DensityField, c: CostSpec, mass_bits: int = 20, cost_bits: int = 30):
        grid = f.grid
        unit = 1 << mass_bits
        q = [int(round(v * unit)) for v in f.flat.tolist()]
        src = np.array([i for i, v in enumerate(q) if v > 0], dtype=np.int64)
        tgt = np.array([i for i, v in enumerate(q) if v < unit], dtype=np.int64)
        pts = grid.centers()
        disp = pts[tgt][None, :, :] - pts[src][:, None, :]
        raw = c.evaluate(disp)
        if c.cap is not None:
            raw = np.where(np.linalg.norm(disp, axis=-1) <= c.cap * (1 + 1e-12), raw, np.inf)
        scale = 2 ** cost_bits
        costs = np.full(raw.shape, -1, dtype=object)
        for idx in np.ndindex(raw.shape):
            if math.isfinite(raw[idx]):
                costs[idx] = int(round(raw[idx] * scale))
        sup = np.array([q[i] for i in src], dtype=object)
        cap = np.array([unit - q[j] for j in tgt], dtype=object)
        return cls(costs, sup, cap, src, tgt)


def rational_simplex(A: list[list[int]], b: list[int], cost: list[int]):
    """Minimize ``cost @ x`` subject to ``A x = b``, ``x >= 0`` in exact arithmetic.

    Two-phase tableau method with Bland's rule. Requires ``b >= 0``.
    Returns ``(value, x)`` as Fractions, or raises ValueError if infeasible.
    """
    rows, cols = len(A), len(cost)
    # phase 1 tableau with one artificial per row
    T = [[Fraction(v) for v in A[i]] + [Fraction(int(i == k)) for k in range(rows)] + [Fraction(b[i])]
         for i in range(rows)]
    basis = [cols + i for i in range(rows)]
    width = cols + rows

    def run(obj):
        # reduced costs: obj - c_B B^-1 A, tracked as an extra row
        z = [Fraction(v) for v in obj] + [Fraction(0)]
        for i, bv in enumerate(basis):
            if z[bv] != 0:
                coef = z[bv]
                z = [zj - coef * tj for zj, tj in zip(z, T[i])]
        while True:
            enter = next((j for j in range(width) if z[j] < 0 and allowed[j]), None)
            if enter is None:
                return z
            best, leave = None, None
            for i in range(rows):
                a = T[i][enter]
                if a > 0:
                    ratio = T[i][-1] / a
                    if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                        best, leave = ratio, i
            if leave is None:
                raise ValueError("LP unbounded")
            piv = T[leave][enter]
            T[leave] = [v / piv for v in T[leave]]
            for i in range(rows):
                if i != leave and T[i][enter] != 0:
                    coef = T[i][enter]
                    T[i] = [vi - coef * vl for vi, vl in zip(T[i], T[leave])]
            if z[enter] != 0:
                coef = z[enter]
                z = [zj - coef * tj for zj, tj in zip(z, T[leave])]
            basis[leave] = enter

    allowed = [True] * width
    z = run([0] * cols + [1] * rows)
    if -z[-1] != 0:
        raise ValueError("LP infeasible")
    # drive remaining artificials out of the basis where possible
    for i in range(rows):
        if basis[i] >= cols:
            j = next((j for j in range(cols) if T[i][j] != 0), None)
            if j is not None:
                piv = T[i][j]
                T[i] = [v / piv for v in T[i]]
                for r in range(rows):
                    if r != i and T[r][j] != 0:
                        coef = T[r][j]
                        T[r] = [vr - coef * vi for vr, vi in zip(T[r], T[i])]
                basis[i] = j
    allowed = [True] * cols + [False] * rows
    z = run(list(cost) + [0] * rows)
    x = [Fraction(0)] * cols
    for i, bv in enumerate(basis):
        if bv < cols:
            x[bv] = T[i][-1]
    return -z[-1], x


def unimodular_simplex(A, b, cost):
    """Minimize ``cost @ x`` subject to ``A x = b``, ``x >= 0`` for a totally unimodular ``A``.

    Same two-phase Bland method as :func:`rational_simplex`, on an int64
    tableau. Total unimodularity keeps every tableau entry in ``{-1, 0, 1}``,
    so each pivot divides by ``+-1`` and the arithmetic stays exact; a pivot of
    any other size raises ArithmeticError. Returns ``(value, x)`` with a Python
    int value and an int64 solution.
    """
    A = np.asarray(A, dtype=np.int64)
    b = np.asarray(b, dtype=np.int64)
    cost = np.asarray(cost, dtype=np.int64)
    rows, cols = A.shape
    if np.any(b < 0):
        raise ValueError("right-hand side must be nonnegative")
    T = np.concatenate([A, np.eye(rows, dtype=np.int64), b[:, None]], axis=1)
    basis = np.arange(cols, cols + rows)
    width = cols + rows

    def pivot(z, leave, enter):
        piv = T[leave, enter]
        if piv not in (1, -1):
            raise ArithmeticError("pivot is not +-1: matrix is not totally unimodular")
        T[leave] *= piv
        col = T[:, enter].copy()
        col[leave] = 0
        nz = np.flatnonzero(col)
        T[nz] -= col[nz, None] * T[leave][None, :]
        if z[enter] != 0:
            z -= z[enter] * T[leave]
        basis[leave] = enter

    def run(obj, allowed):
        z = np.concatenate([obj, [0]]).astype(np.int64)
        for i, bv in enumerate(basis):
            if z[bv] != 0:
                z -= z[bv] * T[i]
        while True:
            cand = np.flatnonzero((z[:width] < 0) & allowed)
            if cand.size == 0:
                return z
            enter = int(cand[0])
            colv = T[:, enter]
            pos = np.flatnonzero(colv > 0)
            if pos.size == 0:
                raise ValueError("LP unbounded")
            ratios = T[pos, -1]  # pivots are 1, so the ratio is the right-hand side
            best = ratios.min()
            ties = pos[ratios == best]
            leave = int(ties[np.argmin(basis[ties])])
            pivot(z, leave, enter)

    z = run(np.concatenate([np.zeros(cols, np.int64), np.ones(rows, np.int64)]), np.ones(width, bool))
    if z[-1] != 0:
        raise ValueError("LP infeasible")
    for i in range(rows):
        if basis[i] >= cols:
            nz = np.flatnonzero(T[i, :cols])
            if nz.size:
                pivot(np.zeros(width + 1, np.int64), i, int(nz[0]))
    allowed = np.concatenate([np.ones(cols, bool), np.zeros(rows, bool)])
    run(np.concatenate([cost, np.zeros(rows, np.int64)]), allowed)
    x = np.zeros(cols, dtype=np.int64)
    for i, bv in enumerate(basis):
        if bv < cols:
            x[bv] = T[i, -1]
    if np.any(A @ x != b) or np.any(x < 0):
        raise ArithmeticError("final basis is not feasible")
    value = sum(int(ci) * int(xi) for ci, xi in zip(cost.tolist(), x.tolist()) if xi)
    return value, x


def brute_lp(f: DensityField, c: CostSpec, mass_bits: int = 20, cost_bits: int | None = None):
    """Solve the exterior transport LP densely with an exact integer simplex.

    Returns ``(value, plan, value_units)`` where ``plan`` maps
    ``(source cell, target cell)`` to transported mass and ``value_units`` is
    the exact optimum in units of ``2**-cost_bits * 2**-mass_bits``.
    """
    grid = f.grid
    if grid.size > MAX_LP_CELLS:
        raise OracleSizeError(f"brute_lp handles at most {MAX_LP_CELLS} cells, got {grid.size}")
    if cost_bits is None:
        from ._kernel import cost_bits as _bits

        cost_bits = _bits(grid, c)
    inst = DenseLPInstance.from_density(f, c, mass_bits, cost_bits)
    if not inst.sources.size:
        return 0.0, {}, 0
    if sum(inst.supplies) > sum(inst.capacities):
        raise ValueError("mass of f exceeds free capacity")
    arcs = [(i, j) for i in range(inst.sources.size) for j in range(inst.targets.size) if inst.costs[i, j] >= 0]
    ns, nt = inst.sources.size, inst.targets.size
    ncols = len(arcs) + nt
    A = [[0] * ncols for _ in range(ns + nt)]
    for col, (i, j) in enumerate(arcs):
        A[i][col] = 1
        A[ns + j][col] = 1
    for j in range(nt):
        A[ns + j][len(arcs) + j] = 1
    b = [int(v) for v in inst.supplies] + [int(v) for v in inst.capacities]
    cost = [int(inst.costs[i, j]) for i, j in arcs] + [0] * nt
    units, x = unimodular_simplex(A, b, cost)
    scale = Fraction(grid.cell_volume) / (2 ** mass_bits)
    plan = {(int(inst.sources[i]), int(inst.targets[j])): float(int(x[col]) * scale)
            for col, (i, j) in enumerate(arcs) if x[col] > 0}
    return float(Fraction(units, 2 ** (cost_bits + mass_bits)) * Fraction(grid.cell_volume)), plan, units


def monotone_1d(level: float, left: float, right: float, c: CostSpec, tol: float = 1e-9) -> float:
    """Exterior transport value of ``level * 1[left, right]`` on the line.

    For ``level <= 1/2`` every point keeps its mass. Otherwise the free space
    inside the interval is filled (density ``1 - level``) and the excess fills
    two symmetric outer intervals of length ``delta = L (2 level - 1) / 2``
    where ``L = right - left``. The value is the cost of the monotone pairing
    of the two cumulative distributions, integrated over quantiles.
    """
    if not c.radial or not c.is_convex():
        raise ValueError("monotone_1d requires a convex radial cost")
    if not (0 <= level <= 1) or not right > left:
        raise ValueError("need 0 <= level <= 1 and left < right")
    if level <= 0.5:
        return 0.0
    length = right - left
    total = level * length
    delta = length * (2 * level - 1) / 2

    def f_inv(u):
        return left + u / level

    def g_inv(u):
        if u <= delta:
            return left - delta + u
        if u <= delta + (1 - level) * length:
            return left + (u - delta) / (1 - level)
        return right + (u - delta - (1 - level) * length)

    def integrand(u):
        return float(c.profile(g_inv(u) - f_inv(u)))

    breaks = [0.0, delta, delta + (1 - level) * length, total]
    value = 0.0
    for a, b in zip(breaks[:-1], breaks[1:]):
        if b > a:
            part, _ = integrate.quad(integrand, a, b, epsabs=tol, epsrel=tol, limit=200)
            value += part
    return value


def exhaustive_bathtub(xi, m: float, cell_volume: float = 1.0) -> float:
    """Maximum of ``sum f xi h^d`` over ``f`` in ``{0, 1/2, 1}^n`` with mass ``m``."""
    xi = np.asarray(xi, dtype=float).ravel()
    n = xi.size
    if n > MAX_BATHTUB_CELLS:
        raise OracleSizeError(f"exhaustive_bathtub handles at most {MAX_BATHTUB_CELLS} cells, got {n}")
    target = 2 * m / cell_volume
    if abs(target - round(target)) > 1e-9:
        raise ValueError("m must be a multiple of half a cell volume")
    target = int(round(target))
    best = -math.inf
    levels = np.array(list(itertools.product((0, 1, 2), repeat=n)), dtype=np.int64).reshape(-1, n)
    feasible = levels[levels.sum(axis=1) == target]
    if feasible.size:
        best = float((feasible @ xi).max()) / 2 * cell_volume
    if best == -math.inf:
        raise ValueError("no feasible field: m exceeds the grid volume")
    return best
