"""The outer problem ``E(m) = sup {Upsilon(f) : mass(f) = m}``.

Contents: the bathtub maximiser, a dual-ascent shape iteration, energy curves,
and the concentration and tightness diagnostics.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import fftconvolve

from .domain import CostSpec, DensityField, GridSpec, l1_distance, mass, support_radius, unit_ball_volume
from .dual import maximal_potential
from .primal import solve_exterior
from .rearrange import radial_order

__all__ = [
    "OptimizeTrace",
    "EnergyCurve",
    "CubeResult",
    "TightnessReport",
    "bathtub",
    "ball_density",
    "best_fit_ball",
    "maximize_shape",
    "energy_curve",
    "grid_for_mass",
    "concentration_cube",
    "tightness_report",
    "radial_ball_value",
    "adaptive_simpson",
]


def bathtub(xi, m: float, grid: GridSpec) -> DensityField:
    """Maximise ``sum f xi h^d`` over ``0 <= f <= 1`` with ``mass(f) = m``.

    Cells are filled in decreasing order of ``xi``, ties by lowest index; the
    last cell may be fractional so that the mass is exactly ``m``.
    """
    xi = np.asarray(xi, dtype=float).ravel()
    if xi.size != grid.size:
        raise ValueError("xi does not match the grid")
    cells = m / grid.cell_volume
    if m < 0 or cells > grid.size * (1 + 1e-12):
        raise ValueError(f"mass {m} is outside [0, {grid.total_volume}]")
    order = np.lexsort((np.arange(grid.size), -xi))
    return _fill(order, cells, grid)


def _fill(order, cells, grid):
    n_full = min(int(math.floor(cells)), grid.size)
    frac = cells - n_full
    out = np.zeros(grid.size)
    out[order[:n_full]] = 1.0
    if frac > 0 and n_full < grid.size:
        out[order[n_full]] = frac
    return DensityField(grid, out.reshape(grid.shape))


def ball_density(m: float, grid: GridSpec, center=None) -> DensityField:
    """Discrete ball of mass exactly ``m``: the cells nearest ``center``, one fractional."""
    order, _ = radial_order(grid, center)
    return _fill(order, m / grid.cell_volume, grid)


def best_fit_ball(f: DensityField) -> DensityField:
    """Indicator of the ball of volume ``mass(f)`` centred at the mass centroid."""
    grid = f.grid
    m = mass(f)
    pts = grid.centers()
    w = f.flat
    center = (pts * w[:, None]).sum(axis=0) / w.sum()
    radius = (m / unit_ball_volume(grid.dim)) ** (1 / grid.dim)
    inside = np.linalg.norm(pts - center, axis=1) < radius
    return DensityField(grid, inside.astype(float).reshape(grid.shape))


def grid_for_mass(m: float, spacing: float, dim: int, margin_cells: int = 4) -> GridSpec:
    """Centered grid holding the ball of mass ``m`` and its destination annulus."""
    rho = (m / unit_ball_volume(dim)) ** (1 / dim)
    return GridSpec.covering(2 ** (1 / dim) * rho + margin_cells * spacing, spacing, dim)


def _random_init(m: float, grid: GridSpec, rng: np.random.Generator) -> DensityField:
    """Random field of mass ``m``: noise on a disc of volume 2m around a random offset."""
    d = grid.dim
    rho = (2 * m / unit_ball_volume(d)) ** (1 / d)
    shift = rng.uniform(-0.25, 0.25, d) * rho
    dist = grid.norms(shift).ravel()
    order = np.lexsort((np.arange(grid.size), dist))
    support = order[: int(math.ceil(2 * m / grid.cell_volume))]
    vals = np.zeros(grid.size)
    vals[support] = rng.uniform(0.0, 1.0, support.size)
    vals *= (m / grid.cell_volume) / vals.sum()
    while vals.max() > 1:
        over = vals > 1
        excess = (vals[over] - 1).sum()
        vals[over] = 1
        room = (vals < 1) & (vals > 0)
        vals[room] += excess * vals[room] / vals[room].sum()
    return DensityField(grid, vals.reshape(grid.shape))


@dataclass
class OptimizeTrace:
    """Accepted iterates of :func:`maximize_shape` and the final state."""

    density: DensityField
    value: float
    values: list[float]
    reason: str
    symmetric_difference: float
    iterates: list[dict] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.values) - 1

    def as_dict(self) -> dict:
        return {
            "value": self.value,
            "values": list(self.values),
            "iterations": self.iterations,
            "reason": self.reason,
            "symmetric_difference": self.symmetric_difference,
            "mass": mass(self.density),
            "iterates": self.iterates,
        }


def maximize_shape(m: float, c: CostSpec, grid: GridSpec, init="ball", max_iter: int = 100,
                   tol: float = 1e-8, seed: int = 0) -> OptimizeTrace:
    """Dual-ascent iteration for the shape maximisation.

    Each step solves ``Upsilon(f)``, takes the maximal potentials ``(phi, psi)``
    and moves to ``bathtub(phi - psi, m)``. The step is accepted only if the
    value grows by more than ``tol (1 + Upsilon)``.

    Parameters
    ----------
    init : {"ball", "random"} or DensityField
        Starting density; ``"random"`` draws noise of mass ``m`` with ``seed``.
    """
    if isinstance(init, DensityField):
        f = init
        if abs(mass(f) - m) > 1e-9 * max(1.0, m):
            raise ValueError("initial density does not have mass m")
    elif init == "ball":
        f = ball_density(m, grid)
    elif init == "random":
        f = _random_init(m, grid, np.random.default_rng(seed))
    else:
        raise ValueError(f"unknown init {init!r}")
    plan, value = solve_exterior(f, c)
    values = [value]
    iterates = []
    seen = {f.values.tobytes()}
    reason = "max_iter"
    for _ in range(max_iter):
        pair = maximal_potential(f, c, plan)
        iterates.append({"value": value, "psi_min": float(pair.psi.min()), "phi_max": float(pair.phi.max())})
        new = bathtub(pair.phi - pair.psi, m, grid)
        if np.array_equal(new.values, f.values):
            reason = "fixed point"
            break
        key = new.values.tobytes()
        if key in seen:
            reason = "repeated state"
            break
        seen.add(key)
        new_plan, new_value = solve_exterior(new, c)
        if new_value <= value + tol * (1 + value):
            reason = "no improvement"
            break
        f, plan, value = new, new_plan, new_value
        values.append(value)
    sym = l1_distance(f, best_fit_ball(f))
    return OptimizeTrace(f, value, values, reason, sym, iterates)


@dataclass
class EnergyCurve:
    """Points ``(m, E_h(m))`` with per-point metadata and the monotonicity checks."""

    points: list[dict]
    e_increasing: bool
    e_min_increment: float
    splits: list[dict]

    @property
    def masses(self) -> np.ndarray:
        return np.array([p["m"] for p in self.points])

    @property
    def energies(self) -> np.ndarray:
        return np.array([p["E"] for p in self.points])

    def as_dict(self) -> dict:
        return {"points": self.points, "e_increasing": self.e_increasing,
                "e_min_increment": self.e_min_increment, "splits": self.splits}


def _curve_point(args):
    m, c, grid, tol = args
    t0 = time.perf_counter()
    trace = maximize_shape(m, c, grid, init="ball", tol=tol)
    return {"m": m, "E": trace.value, "e": trace.value / m,
            "runtime": time.perf_counter() - t0, "iterations": trace.iterations}


def energy_curve(ms, c: CostSpec, spacing: float, dim: int, tol: float = 1e-8,
                 grid: GridSpec | None = None, workers: int = 1) -> EnergyCurve:
    """Estimate ``E_h(m)`` by :func:`maximize_shape` from the ball for each ``m``.

    All points share one grid sized for the largest mass. Also checks that
    ``e(m) = E(m)/m`` increases and that ``E(a) + E(b) < E(a + b)`` for every
    pair of listed masses whose sum is listed. Points are independent and are
    spread over ``workers`` processes when ``workers > 1``.
    """
    ms = sorted(float(m) for m in ms)
    if len(set(ms)) != len(ms) or ms[0] <= 0:
        raise ValueError("masses must be positive and distinct")
    grid = grid or grid_for_mass(ms[-1], spacing, dim)
    jobs = [(m, c, grid, tol) for m in ms]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
            points = list(pool.map(_curve_point, jobs))
    else:
        points = [_curve_point(job) for job in jobs]
    es = [p["e"] for p in points]
    inc = [b - a for a, b in zip(es[:-1], es[1:])]
    energy = {p["m"]: p["E"] for p in points}
    splits = []
    for i, a in enumerate(ms):
        for b in ms[i:]:
            total = a + b
            match = next((m for m in ms if abs(m - total) <= 1e-12 * total), None)
            if match is not None:
                margin = energy[match] - energy[a] - energy[b]
                splits.append({"m": match, "parts": [a, b], "margin": margin,
                               "strict": margin > 10 * tol * (1 + energy[match])})
    return EnergyCurve(points, all(x > 0 for x in inc), min(inc) if inc else math.inf, splits)


def _kbar(c: CostSpec, r: float, d: int) -> float:
    return c.max_within(r, d)


def concentration_radius(c: CostSpec, m: float, energy: float, d: int) -> float:
    """Largest ``r`` with ``max_{|z| <= sqrt(d) r} k(z) <= E / (4m)`` (bisection)."""
    level = energy / (4 * m)
    lo, hi = 0.0, 1.0
    while _kbar(c, math.sqrt(d) * hi, d) <= level and hi < 1e9:
        lo, hi = hi, 2 * hi
    for _ in range(80):
        mid = (lo + hi) / 2
        if _kbar(c, math.sqrt(d) * mid, d) <= level:
            lo = mid
        else:
            hi = mid
    return lo


@dataclass
class CubeResult:
    found: bool
    corner: tuple | None
    side: float
    fill: float
    r0: float
    energy: float
    value: float | None = None
    certified_low: bool | None = None

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def concentration_cube(f: DensityField, m: float, c: CostSpec, energy: float | None = None) -> CubeResult:
    """Search the cube partition of side ``r0(m)`` for a cube at least half full.

    ``energy`` defaults to the value of the discrete ball of mass ``m``. If no
    cube qualifies, ``Upsilon(f)`` is computed and ``certified_low`` records
    whether it is below ``E/2``.
    """
    grid = f.grid
    d = grid.dim
    if energy is None:
        energy = solve_exterior(ball_density(m, grid), c)[1]
    r0 = concentration_radius(c, m, energy, d)
    side_cells = max(1, int(math.floor(r0 / grid.spacing + 1e-12)))
    pad = [(0, (-n) % side_cells) for n in grid.shape]
    vals = np.pad(f.values, pad)
    shape = [x for n in vals.shape for x in (n // side_cells, side_cells)]
    sums = vals.reshape(shape).sum(axis=tuple(range(1, 2 * d, 2)))
    fill = sums / side_cells ** d
    best = np.unravel_index(np.argmax(fill), fill.shape)
    side = side_cells * grid.spacing
    if fill[best] >= 0.5:
        corner = tuple(o - grid.spacing / 2 + b * side for o, b in zip(grid.origin, best))
        return CubeResult(True, corner, side, float(fill[best]), r0, energy)
    value = solve_exterior(f, c)[1]
    return CubeResult(False, None, side, float(fill[best]), r0, energy, value, value < energy / 2)


@dataclass
class TightnessReport:
    epsilon: float
    energy: float
    value: float
    bound: float
    proof_radius: float
    proof_outside: float
    empirical_radius: float
    empirical_outside: float
    center: tuple
    construction: dict

    @property
    def holds(self) -> bool:
        return self.proof_outside <= self.bound + 1e-12 and self.empirical_outside <= self.bound + 1e-12

    def as_dict(self) -> dict:
        out = dict(self.__dict__)
        out["holds"] = self.holds
        return out


def _best_ball_mass(f: DensityField, radius: float) -> tuple[float, tuple]:
    grid = f.grid
    total = mass(f)
    n = int(math.ceil(radius / grid.spacing))
    if any(n >= s for s in grid.shape) and radius >= grid.spacing * math.sqrt(sum(s * s for s in grid.shape)):
        return total, tuple(0.0 for _ in grid.shape)
    n = min(n, max(grid.shape))
    offs = np.arange(-n, n + 1) * grid.spacing
    mesh = np.meshgrid(*([offs] * grid.dim), indexing="ij")
    kernel = (np.sqrt(sum(m_ ** 2 for m_ in mesh)) <= radius).astype(float)
    conv = fftconvolve(f.values, kernel, mode="same") * grid.cell_volume
    idx = np.unravel_index(np.argmax(conv), conv.shape)
    center = tuple(o + i * grid.spacing for o, i in zip(grid.origin, idx))
    return min(float(conv[idx]), total), center


def tightness_report(f: DensityField, m: float, c: CostSpec, energy: float | None = None,
                     empirical_radius: float | None = None) -> TightnessReport:
    """Mass outside the best ball of radius ``R*`` against ``(2m/E) epsilon``.

    ``R*`` follows the construction in the tightness argument: support radius
    ``R``, cube side ``r_j = 2^-j r0`` and count ``N = floor(2^(jd+3) m / r_j^d)``
    give ``R* = (4R + 2 sqrt(d) r_j)(N + 1)``. This is far larger than any desk
    grid, so an empirical radius (ball radius plus two cells) is reported too.
    """
    grid = f.grid
    d = grid.dim
    if energy is None:
        energy = solve_exterior(ball_density(m, grid), c)[1]
    value = solve_exterior(f, c)[1]
    eps = max(energy - value, 0.0)
    bound = 2 * m / energy * eps if energy > 0 else math.inf
    r_sup = support_radius(c, m, d)
    r0 = concentration_radius(c, m, energy, d)
    j = 0
    while _kbar(c, math.sqrt(d) * r0 / 2 ** j, d) > energy / (4 * m) and j < 60:
        j += 1
    rj = r0 / 2 ** j
    n_cubes = int(math.floor(2 ** (j * d + 3) * m / rj ** d)) if rj > 0 else 0
    r_star = (4 * r_sup + 2 * math.sqrt(d) * rj) * (n_cubes + 1)
    total = mass(f)
    inside_p, center = _best_ball_mass(f, r_star)
    if empirical_radius is None:
        empirical_radius = (m / unit_ball_volume(d)) ** (1 / d) + 2 * grid.spacing
    inside_e, center_e = _best_ball_mass(f, empirical_radius)
    return TightnessReport(
        eps, energy, value, bound, r_star, max(total - inside_p, 0.0), empirical_radius,
        max(total - inside_e, 0.0), center_e,
        {"R": r_sup, "r0": r0, "j": j, "r_j": rj, "N": n_cubes},
    )


def adaptive_simpson(func, a: float, b: float, tol: float = 1e-9, max_depth: int = 50) -> float:
    """Adaptive Simpson quadrature with absolute tolerance ``tol``."""

    def simpson(fa, fm, fb, a_, b_):
        return (b_ - a_) / 6 * (fa + 4 * fm + fb)

    fa, fb, fm = func(a), func(b), func((a + b) / 2)
    whole = simpson(fa, fm, fb, a, b)
    stack = [(a, b, fa, fm, fb, whole, tol, 0)]
    total = 0.0
    while stack:
        a_, b_, fa_, fm_, fb_, s, t, depth = stack.pop()
        m_ = (a_ + b_) / 2
        lm, rm = (a_ + m_) / 2, (m_ + b_) / 2
        flm, frm = func(lm), func(rm)
        left = simpson(fa_, flm, fm_, a_, m_)
        right = simpson(fm_, frm, fb_, m_, b_)
        if depth >= max_depth or abs(left + right - s) <= 15 * t:
            total += left + right + (left + right - s) / 15
        else:
            stack.append((a_, m_, fa_, flm, fm_, left, t / 2, depth + 1))
            stack.append((m_, b_, fm_, frm, fb_, right, t / 2, depth + 1))
    return total


def radial_ball_value(c: CostSpec, d: int, R: float, tol: float = 1e-9, max_depth: int = 50) -> float:
    """Continuum value of the ball of radius ``R`` under the radial monotone map.

    ``Upsilon(B_R) = d w_d int_0^R k((R^d + r^d)^(1/d) - r) r^(d-1) dr``.
    The integrand is evaluated through ``R (1 + u^d)^(1/d) - R u`` with
    ``u = r / R``, which avoids cancellation for small ``r``.
    """
    if not c.radial:
        raise ValueError("radial_ball_value needs a radial cost")
    if not R > 0:
        raise ValueError("R must be positive")
    surface = d * unit_ball_volume(d)

    def integrand(u):
        disp = R * ((1 + u ** d) ** (1 / d) - u)
        return float(c.profile(disp)) * u ** (d - 1)

    return surface * R ** d * adaptive_simpson(integrand, 0.0, 1.0, tol / (surface * R ** d), max_depth)
