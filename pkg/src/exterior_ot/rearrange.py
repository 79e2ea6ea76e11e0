"""Symmetric rearrangements, erosions and the rearrangement inequalities.

Rearrangements are discrete: cell values are sorted and handed out to cells
ordered by distance to the center, ties broken by flat cell index. This makes
them exactly equimeasurable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import _kernel
from .domain import CostSpec, DensityField, GridSpec, unit_ball_volume
from .dual import c_transform

__all__ = [
    "RadialProfile",
    "LevelSet",
    "CheckReport",
    "radial_order",
    "decreasing_rearrangement",
    "increasing_rearrangement",
    "erode",
    "ctransform_rearrangement_check",
    "hardy_littlewood_check",
    "brunn_minkowski_check",
]


@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Values of a radial grid function on each distinct shell radius."""

    radii: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        if np.any(np.diff(self.radii) <= 0):
            raise ValueError("radii must increase strictly")


@dataclass(frozen=True, eq=False)
class LevelSet:
    grid: GridSpec
    mask: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.mask, dtype=bool).reshape(self.grid.shape)
        m.setflags(write=False)
        object.__setattr__(self, "mask", m)

    @classmethod
    def superlevel(cls, values, grid: GridSpec, t: float) -> "LevelSet":
        return cls(grid, np.asarray(values).reshape(grid.shape) > t)

    @property
    def count(self) -> int:
        return int(self.mask.sum())

    @property
    def volume(self) -> float:
        return self.count * self.grid.cell_volume


@dataclass
class CheckReport:
    passed: bool
    margin: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"passed": bool(self.passed), "margin": float(self.margin), **self.details}


def radial_order(grid: GridSpec, center=None) -> tuple[np.ndarray, np.ndarray]:
    """Cells sorted by distance to ``center`` (ties by index) and their distances."""
    dist = grid.norms(center).ravel()
    order = np.lexsort((np.arange(grid.size), dist))
    return order, dist[order]


def _profile(dist_sorted, vals_sorted, reduce):
    radii, start = np.unique(dist_sorted, return_index=True)
    return RadialProfile(radii, reduce.reduceat(vals_sorted, start))


def decreasing_rearrangement(phi, grid: GridSpec, center=None) -> tuple[RadialProfile, np.ndarray]:
    """Symmetric decreasing rearrangement of a nonnegative grid function.

    Returns the per-shell profile (largest value in each shell) and the
    rearranged field.
    """
    phi = np.asarray(phi, dtype=float).ravel()
    if np.any(phi < 0):
        raise ValueError("decreasing rearrangement needs a nonnegative field")
    order, dist = radial_order(grid, center)
    vals = np.sort(phi, kind="stable")[::-1]
    out = np.empty(grid.size)
    out[order] = vals
    return _profile(dist, vals, np.maximum), out.reshape(grid.shape)


def increasing_rearrangement(psi, grid: GridSpec, center=None) -> tuple[RadialProfile, np.ndarray]:
    """``psi_* = -(-psi)^*`` for a nonpositive grid function."""
    psi = np.asarray(psi, dtype=float)
    if np.any(psi > 0):
        raise ValueError("increasing rearrangement needs a nonpositive field")
    prof, field_ = decreasing_rearrangement(-psi, grid, center)
    return RadialProfile(prof.radii, -prof.values), -field_


def _distance_to_complement(mask: np.ndarray, grid: GridSpec) -> np.ndarray:
    padded = np.pad(mask, 1, constant_values=False)
    dist = ndimage.distance_transform_edt(padded, sampling=grid.spacing)
    return dist[(slice(1, -1),) * grid.dim]


def erode(level: LevelSet, r: float) -> LevelSet:
    """Cells whose center lies farther than ``r`` from every cell center outside the set.

    Cells beyond the grid count as outside.
    """
    if r < 0:
        raise ValueError("erosion radius must be nonnegative")
    if level.count == 0:
        return level
    dist = _distance_to_complement(level.mask, level.grid)
    return LevelSet(level.grid, level.mask & (dist > r))


def _thresholds(values: np.ndarray) -> np.ndarray:
    v = np.unique(values)
    mids = (v[1:] + v[:-1]) / 2
    return np.union1d(v, mids)


def ctransform_rearrangement_check(psi, grid: GridSpec, c: CostSpec, thresholds=None, radii=None,
                                   tol: float | None = None) -> CheckReport:
    """Check ``(psi^c)^* <= (psi_*)^c`` pointwise and the level-volume bound.

    The volume bound is ``|{psi^c > t}| <= |erode({-psi > t - k(r)}, r)|`` for
    every sampled threshold ``t`` and radius ``r``; on the grid it holds
    exactly. ``psi`` is padded with zeros by the largest radius first, so the
    grid edge does not act as the complement of the eroded sets. The pointwise inequality is allowed a slack ``tol`` (default
    ``2 h Lip(k)``).
    """
    if not c.radial:
        raise ValueError("rearrangement check needs a radial cost")
    psi = np.asarray(psi, dtype=float).reshape(grid.shape)
    if np.any(psi > 0):
        raise ValueError("psi must be nonpositive")
    if radii is None:
        radii = grid.spacing * np.arange(0, 9)
    # zero margin so that erosions never see the grid edge
    pad = int(math.ceil(max(radii) / grid.spacing)) + 1
    grid = GridSpec(tuple(n + 2 * pad for n in grid.shape), grid.spacing,
                    tuple(o - pad * grid.spacing for o in grid.origin))
    psi = np.pad(psi, pad)
    psi_c = c_transform(psi, grid, c)
    _, lhs = decreasing_rearrangement(psi_c, grid)
    _, psi_star = increasing_rearrangement(psi, grid)
    rhs = c_transform(psi_star, grid, c)
    if tol is None:
        reach = float(np.max(-psi)) if psi.size else 0.0
        r_lip = max(grid.spacing, _radius_for_cost(c, reach))
        tol = 2 * grid.spacing * c.lipschitz(r_lip, grid.dim)
    pointwise = float(np.min(rhs - lhs))

    _, bits = _kernel.offset_table(grid, c)
    scale = float(2 ** bits)
    ts = _thresholds(psi_c.ravel()) if thresholds is None else np.asarray(thresholds, dtype=float)
    ts = ts[ts > 0]
    worst = math.inf
    for t in ts:
        left = int((psi_c > t).sum())
        best = math.inf
        for r in radii:
            k_r = np.round(float(c.profile(r)) * scale) / scale
            best = min(best, erode(LevelSet(grid, -psi > t - k_r), r).count)
        worst = min(worst, best - left)
    if worst == math.inf:
        worst = 0
    return CheckReport(
        pointwise >= -tol and worst >= 0,
        pointwise,
        {"tolerance": tol, "volume_margin_cells": int(worst), "thresholds": int(ts.size)},
    )


def _radius_for_cost(c: CostSpec, value: float) -> float:
    lo, hi = 0.0, 1.0
    while float(c.profile(hi)) < value and hi < 1e6:
        hi *= 2
    for _ in range(60):
        mid = (lo + hi) / 2
        if float(c.profile(mid)) < value:
            lo = mid
        else:
            hi = mid
    return hi


def hardy_littlewood_check(f: DensityField, xi, tol: float = 1e-9) -> CheckReport:
    """Check ``sum f xi <= sum f^* xi^*`` with both rearranged in decreasing order."""
    fv = f.flat
    xv = np.asarray(xi, dtype=float).ravel()
    h = f.grid.cell_volume
    lhs = math.fsum(fv * xv) * h
    rhs = math.fsum(np.sort(fv)[::-1] * np.sort(xv)[::-1]) * h
    scale = 1.0 + math.fsum(np.abs(fv * xv)) * h
    return CheckReport(lhs <= rhs + tol * scale, rhs - lhs, {"lhs": lhs, "rhs": rhs})


def _discrete_ball(count: int, grid: GridSpec) -> LevelSet:
    order, _ = radial_order(grid)
    mask = np.zeros(grid.size, dtype=bool)
    mask[order[:count]] = True
    return LevelSet(grid, mask)


def brunn_minkowski_check(level: LevelSet, s: float, others=(), slack: float | None = None) -> CheckReport:
    """Erosion form of Brunn-Minkowski and the ball's maximality for ``|Omega_s|``.

    Checks ``|Omega|^(1/d) >= |Omega_s|^(1/d) + |B_s|^(1/d) - slack`` (default
    slack ``2h``) and that the discrete ball with the same cell count erodes to
    at least as many cells as ``level`` and every set in ``others``, up to one
    boundary layer of the eroded ball.
    """
    if not s > 0:
        raise ValueError("s must be positive")
    grid = level.grid
    d = grid.dim
    slack = 2 * grid.spacing if slack is None else slack
    eroded = erode(level, s)
    lhs = level.volume ** (1 / d)
    rhs = eroded.volume ** (1 / d) + (unit_ball_volume(d) * s ** d) ** (1 / d)
    ball = _discrete_ball(level.count, grid)
    ball_eroded = erode(ball, s)
    rad = max((ball_eroded.volume / unit_ball_volume(d)) ** (1 / d), grid.spacing)
    layer = d * unit_ball_volume(d) * rad ** (d - 1) * grid.spacing
    competitors = [eroded] + [erode(o, s) for o in others]
    excess = max(o.volume for o in competitors) - ball_eroded.volume
    return CheckReport(
        lhs >= rhs - slack and excess <= layer,
        lhs - rhs,
        {"eroded_volume": eroded.volume, "ball_eroded_volume": ball_eroded.volume,
         "max_competitor_excess": excess, "slack": slack},
    )
