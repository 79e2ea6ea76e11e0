"""Property suites and acceptance criteria with machine-readable results.

Every check is a function ``check(seed, tol) -> PropertyResult``. Results are
deterministic for a fixed seed; wall-clock times are kept apart in
``Report.timing`` so that the rest of the report compares byte for byte.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import oracle
from .domain import Ball, CostSpec, DensityField, GridSpec, ShapeUnion, l1_distance, mass, rasterize, support_radius
from .dual import c_transform, duality_gap, maximal_potential, project_P
from .optimize import (
    ball_density,
    bathtub,
    concentration_cube,
    energy_curve,
    maximize_shape,
    radial_ball_value,
    tightness_report,
)
from .optimize import _random_init
from .primal import plan_marginals, saturation_report, solve_exterior
from .rearrange import (
    LevelSet,
    brunn_minkowski_check,
    ctransform_rearrangement_check,
    hardy_littlewood_check,
)

__all__ = ["PropertyResult", "Report", "verify_suite", "QUICK", "FULL", "CRITERIA", "run_check"]


@dataclass
class PropertyResult:
    name: str
    passed: bool
    metric: float
    tolerance: float
    details: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"name": self.name, "passed": bool(self.passed), "metric": _num(self.metric),
                "tolerance": _num(self.tolerance), "details": _plain(self.details)}

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        # + 0.0 turns -0.0 into 0.0
        return f"[{status}] {self.name}: metric={self.metric + 0.0:.6g} tolerance={self.tolerance:.6g}"


@dataclass
class Report:
    level: str
    seed: int
    results: list[PropertyResult]
    timing: dict

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    def as_dict(self, with_timing: bool = True) -> dict:
        out = {"level": self.level, "seed": self.seed, "passed": self.passed,
               "properties": [r.as_dict() for r in self.results]}
        if with_timing:
            out["timing"] = dict(self.timing)
        return out


def _num(x):
    x = float(x) + 0.0
    return x if math.isfinite(x) else repr(x)


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _num(obj)
    return obj


# ---------------------------------------------------------------- instance makers


def random_small_field(rng, max_cells=100, levels=4):
    """Random dyadic field on a 1-D or 2-D grid with at most ``max_cells`` cells and mass below half the volume."""
    if rng.random() < 0.4:
        grid = GridSpec.centered((int(rng.integers(2, max_cells + 1)),), float(rng.choice([0.125, 0.25, 0.5])))
    else:
        side = int(math.isqrt(max_cells))
        grid = GridSpec.centered((int(rng.integers(2, side + 1)), int(rng.integers(2, side + 1))),
                                 float(rng.choice([0.125, 0.25])))
    vals = rng.integers(0, levels + 1, grid.shape) / levels
    vals *= rng.random(grid.shape) < rng.uniform(0.2, 0.6)
    while vals.sum() > grid.size / 2:
        vals[np.unravel_index(int(np.argmax(vals)), grid.shape)] -= 1 / levels
    return DensityField(grid, vals)


def random_indicator(rng, grid, discs=3, r_range=(0.3, 0.7), extent=1.0):
    pts = grid.centers()
    mask = np.zeros(grid.size, dtype=bool)
    for _ in range(discs):
        center = rng.uniform(-extent, extent, grid.dim)
        mask |= np.linalg.norm(pts - center, axis=1) < rng.uniform(*r_range)
    return DensityField(grid, mask.reshape(grid.shape).astype(float))


def nested_indicator_pair(rng, grid):
    """``f1 <= f2`` indicators: f2 a union of discs, f1 with a disc or random cells removed."""
    f2 = random_indicator(rng, grid, r_range=(0.25, 0.5), extent=0.5)
    pts = grid.centers()
    if rng.random() < 0.5:
        keep = np.linalg.norm(pts - rng.uniform(-0.6, 0.6, grid.dim), axis=1) > rng.uniform(0.2, 0.4)
    else:
        keep = rng.random(grid.size) < 0.8
    f1 = DensityField(grid, f2.values * keep.reshape(grid.shape))
    return f1, f2


def random_compact_psi(rng, grid, support=1.0, depth=1.0):
    """Nonpositive dyadic field supported in a random blob."""
    pts = grid.centers()
    center = rng.uniform(-0.3, 0.3, grid.dim)
    r = np.linalg.norm(pts - center, axis=1)
    bumps = rng.random(grid.size) * np.clip(1 - r / support, 0, None)
    psi = -np.round(depth * bumps * 16) / 16
    return psi.reshape(grid.shape)


def competitor_fields(m, grid, rng, count=50):
    """Equal-mass competitors of the ball: ellipses, squares, two balls, wavy discs, rings,
    balls with noisy boundaries and random noise fields."""
    pts = grid.centers()
    x, y = pts[:, 0], pts[:, 1]
    r = np.hypot(x, y)
    theta = np.arctan2(y, x)
    rho = math.sqrt(m / math.pi)
    out = []
    for k in range(count):
        kind = k % 6
        if kind == 0:
            a = rng.uniform(1.05, 1.6)
            score = -np.hypot(x / a, y * a)
        elif kind == 1:
            t = rng.uniform(0, math.pi / 2)
            score = -np.maximum(np.abs(x * math.cos(t) + y * math.sin(t)), np.abs(-x * math.sin(t) + y * math.cos(t)))
        elif kind == 2:
            sep = rng.uniform(0.4, 0.75)
            score = -np.minimum(np.hypot(x - sep, y), np.hypot(x + sep, y))
        elif kind == 3:
            amp, freq = rng.uniform(0.05, 0.2), int(rng.integers(3, 8))
            score = -r / (1 + amp * np.sin(freq * theta + rng.uniform(0, 2 * math.pi)))
        elif kind == 4:
            hole = rng.uniform(0.1, 0.4) * rho
            score = -np.abs(r - (hole + math.hypot(hole, rho)) / 2)
        elif k % 12 == 5:
            out.append(_random_init(m, grid, rng))
            continue
        else:
            score = -r + rng.normal(0.0, rng.uniform(0.5, 3.0) * grid.spacing, grid.size)
        score = score + rng.uniform(-1e-3, 1e-3, grid.size) * grid.spacing
        out.append(bathtub(score, m, grid))
    return out


# --------------------------------------------------------------------- properties


def _result(name, metric, tol, passed=None, **details):
    if passed is None:
        passed = metric <= tol
    return PropertyResult(name, bool(passed), float(metric), float(tol), details)


def check_oracle_equivalence(seed=0, tol=0.0, count=200, max_cells=100):
    """Exact optimal value agreement with the rational LP after shared quantization."""
    rng = np.random.default_rng(seed)
    worst = 0
    mismatches = 0
    for _ in range(count):
        f = random_small_field(rng, max_cells)
        c = CostSpec.power(float(rng.choice([1.0, 2.0])))
        plan, _ = solve_exterior(f, c)
        _, _, units = oracle.brute_lp(f, c)
        diff = abs(int(units) - int(plan.value_units))
        worst = max(worst, diff)
        mismatches += diff > tol
    return _result("oracle_equivalence", worst, tol, mismatches == 0, instances=count, mismatches=mismatches)


def check_duality_gap(seed=0, tol=1e-6, count=20, side=10):
    rng = np.random.default_rng(seed)
    grid = GridSpec.centered((side, side), 0.25)
    worst = 0.0
    for _ in range(count):
        vals = rng.integers(0, 5, grid.shape) / 4 * (rng.random(grid.shape) < 0.5)
        f = DensityField(grid, vals)
        c = CostSpec.power(float(rng.choice([1.0, 2.0])))
        value = solve_exterior(f, c)[1]
        worst = max(worst, abs(duality_gap(f, c)) / (1 + value))
    return _result("duality_gap", worst, tol, instances=count)


def check_saturation(seed=0, tol=0.95, count=20, side=32):
    rng = np.random.default_rng(seed)
    grid = GridSpec.centered((side, side), 1 / 8)
    c = CostSpec.power(1.0)
    fractions = []
    for _ in range(count):
        f = random_indicator(rng, grid, extent=0.6)
        plan, _ = solve_exterior(f, c)
        fractions.append(saturation_report(f, plan, c).fraction)
    worst = min(fractions)
    return _result("saturation", worst, tol, worst >= tol, instances=count, mean=float(np.mean(fractions)))


def _annulus_error(d, h):
    c = CostSpec.power(1.0)
    grid = GridSpec.covering(2 ** (1 / d) + 0.25, h, d)
    f = rasterize(Ball((0.0,) * d, 1.0), grid)
    plan, _ = solve_exterior(f, c)
    g = plan_marginals(plan)[1]
    r = grid.norms()
    target = ((r >= 1.0) & (r < 2 ** (1 / d))).astype(float)
    return l1_distance(g, DensityField(grid, target)) / mass(f)


def check_annulus(seed=0, tol=0.05, h=1 / 32, dims=(1, 2)):
    errors = {d: _annulus_error(d, h) for d in dims}
    return _result("annulus_destination", max(errors.values()), tol, **{f"d{d}": e for d, e in errors.items()})


def _ball_value(d, h, c):
    grid = GridSpec.covering(2 ** (1 / d) + 0.25, h, d)
    return solve_exterior(rasterize(Ball((0.0,) * d, 1.0), grid), c)[1]


def check_radial_value(seed=0, tol=0.05, h=1 / 32):
    c = CostSpec.power(1.0)
    exact = radial_ball_value(c, 2, 1.0)
    fine = abs(_ball_value(2, h, c) - exact) / exact
    coarse = abs(_ball_value(2, 2 * h, c) - exact) / exact
    one_d = abs(_ball_value(1, 0.05, c) - 2.0)
    ok = fine <= tol and fine < coarse and one_d <= 2 * 0.05
    return _result("radial_value_convergence", fine, tol, ok, coarse_error=coarse,
                   continuum=exact, d1_error=one_d, d1_tolerance=0.1)


def check_ball_dominance(seed=0, tol=1e-9, count=50, side=64, h=1 / 16):
    rng = np.random.default_rng(seed)
    grid = GridSpec.centered((side, side), h)
    c = CostSpec.power(1.0)
    m = math.pi
    ball_value = solve_exterior(ball_density(m, grid), c)[1]
    best = -math.inf
    losers = 0
    for f in competitor_fields(m, grid, rng, count):
        v = solve_exterior(f, c)[1]
        best = max(best, v)
        losers += v > ball_value + tol * (1 + ball_value)
    excess = (best - ball_value) / (1 + ball_value)
    return _result("ball_dominance", excess, tol, losers == 0, ball=ball_value, best_competitor=best,
                   competitors=count, beaten_by=losers)


def check_fixed_point(seed=0, tol=0.10, inits=5, side=64, h=1 / 16):
    grid = GridSpec.centered((side, side), h)
    c = CostSpec.power(1.0)
    m = math.pi
    diffs, reasons = [], []
    for k in range(inits):
        trace = maximize_shape(m, c, grid, init="random", seed=seed + k)
        diffs.append(trace.symmetric_difference / m)
        reasons.append(trace.reason)
    return _result("fixed_point_recovery", max(diffs), tol, relative_differences=diffs, reasons=reasons)


def check_energy_curve(seed=0, tol=0.02, h=1 / 32, masses=(1, 2, 3, 4, 5), solver_tol=1e-8):
    c = CostSpec.power(1.0)
    curve = energy_curve(masses, c, h, 1, tol=solver_tol)
    energy = dict(zip(curve.masses.tolist(), curve.energies.tolist()))
    scaling = max(abs(energy[2 * m] / energy[m] / 4 - 1) for m in energy if 2 * m in energy)
    split = next(s for s in curve.splits if s["parts"] == [1.0, 1.0])
    ok = curve.e_increasing and split["strict"] and scaling <= tol
    return _result("energy_curve", scaling, tol, ok, e_increasing=curve.e_increasing,
                   e_min_increment=curve.e_min_increment, split_margin=split["margin"],
                   energies=[energy[m] for m in sorted(energy)])


def check_dual_calculus(seed=0, tol=1e-6, fields=100, pairs=20):
    rng = np.random.default_rng(seed)
    grid = GridSpec.centered((12, 12), 0.125)
    c = CostSpec.power(1.0)
    idem = dominated = lattice = 0
    for _ in range(fields):
        phi = rng.integers(-16, 17, grid.shape) / 16
        p = project_P(phi, grid, c)
        idem += not np.array_equal(project_P(p, grid, c), p)
        back = c_transform(c_transform(phi, grid, c), grid, c, "reverse")
        dominated += not np.all(back >= phi)
        phi2 = rng.integers(-16, 17, grid.shape) / 16
        lhs = c_transform(np.maximum(phi, phi2), grid, c)
        rhs = np.minimum(c_transform(phi, grid, c), c_transform(phi2, grid, c))
        lattice += not np.array_equal(lhs, rhs)
    grid2 = GridSpec.centered((24, 24), 1 / 8)
    worst = math.inf
    for _ in range(pairs):
        f1, f2 = nested_indicator_pair(rng, grid2)
        f1 = _dyadic_blur(f1, rng)
        f2 = DensityField(grid2, np.maximum(f1.values, f2.values))
        psi1 = maximal_potential(f1, c).psi
        psi2 = maximal_potential(f2, c).psi
        worst = min(worst, float(np.min(psi1 - psi2)))
    ok = idem == 0 and dominated == 0 and lattice == 0 and worst >= -tol
    return _result("dual_calculus", -worst, tol, ok, idempotence_failures=idem,
                   cc_bar_failures=dominated, lattice_failures=lattice, min_psi_difference=worst)


def _dyadic_blur(f, rng):
    vals = f.values * rng.integers(1, 5, f.grid.shape) / 4
    return DensityField(f.grid, vals)


def check_marginal_monotonicity(seed=0, tol=1e-6, pairs=20, side=32):
    """Pointwise ``f1 + g1 <= f2 + g2 + tol`` on nested indicator pairs.

    Violations are also located against the maximal potential of ``f2``: a
    cell with ``psi2 = 0`` is a tie cell where the discrete second marginal
    is not pinned down.
    """
    rng = np.random.default_rng(seed)
    grid = GridSpec.centered((side, side), 1 / 8)
    c = CostSpec.power(1.0)
    worst = -math.inf
    bad_pairs = bad_cells = on_ties = 0
    for _ in range(pairs):
        f1, f2 = nested_indicator_pair(rng, grid)
        g1 = plan_marginals(solve_exterior(f1, c)[0])[1].values
        g2 = plan_marginals(solve_exterior(f2, c)[0])[1].values
        excess = f1.values + g1 - f2.values - g2
        worst = max(worst, float(np.max(excess)))
        bad = excess > tol
        if bad.any():
            bad_pairs += 1
            bad_cells += int(bad.sum())
            on_ties += int((maximal_potential(f2, c).psi[bad] == 0).sum())
    return _result("marginal_monotonicity", max(worst, 0.0), tol, pairs=pairs, violating_pairs=bad_pairs,
                   violating_cells=bad_cells, violating_cells_on_tie_set=on_ties)


def check_rearrangement(seed=0, tol=0.0, fields=50, hl_cases=100, side=32):
    rng = np.random.default_rng(seed)
    grid = GridSpec.centered((side, side), 1 / 8)
    c = CostSpec.power(1.0)
    worst = math.inf
    volume_fail = 0
    pointwise_fail = 0
    for _ in range(fields):
        psi = random_compact_psi(rng, grid, support=rng.uniform(0.5, 1.5), depth=rng.uniform(0.2, 1.0))
        rep = ctransform_rearrangement_check(psi, grid, c)
        worst = min(worst, rep.margin + rep.details["tolerance"])
        pointwise_fail += rep.margin < -rep.details["tolerance"]
        volume_fail += rep.details["volume_margin_cells"] < 0
    hl_fail = 0
    small = GridSpec.centered((8, 8), 0.25)
    for _ in range(hl_cases):
        f = DensityField(small, rng.random(small.shape) * (rng.random(small.shape) < 0.6))
        xi = rng.normal(size=small.shape)
        hl_fail += not hardy_littlewood_check(f, xi).passed
    bm_grid = GridSpec.centered((64, 64), 1 / 16)
    ball = LevelSet(bm_grid, rasterize(Ball((0.0, 0.0), 1.0), bm_grid).values > 0)
    others = []
    for _ in range(5):
        parts = tuple(Ball(tuple(rng.uniform(-0.8, 0.8, 2)), float(rng.uniform(0.3, 0.6))) for _ in range(3))
        others.append(LevelSet(bm_grid, rasterize(ShapeUnion(parts), bm_grid).values > 0))
    others.append(LevelSet(bm_grid, (np.abs(bm_grid.centers()[:, 0]) < 1.2) & (np.abs(bm_grid.centers()[:, 1]) < 0.6)))
    bm_fail = 0
    for s in (0.125, 0.25, 0.5):
        bm_fail += not brunn_minkowski_check(ball, s, others).passed
        for o in others:
            bm_fail += not brunn_minkowski_check(o, s).passed
    ok = pointwise_fail == 0 and volume_fail == 0 and hl_fail == 0 and bm_fail == 0
    return _result("rearrangement_inequalities", -min(worst, 0.0), tol, ok,
                   pointwise_failures=pointwise_fail, volume_failures=volume_fail,
                   hardy_littlewood_failures=hl_fail, brunn_minkowski_failures=bm_fail,
                   worst_slack_after_tolerance=worst)


def check_diagnostics(seed=0, tol=0.0, side=64, h=1 / 16):
    rng = np.random.default_rng(seed)
    grid = GridSpec.centered((side, side), h)
    c = CostSpec.power(1.0)
    m = math.pi
    ball = ball_density(m, grid)
    energy = solve_exterior(ball, c)[1]
    maximizer = maximize_shape(m, c, grid, init="random", seed=seed).density
    wobbly = bathtub(-grid.norms().ravel() * (1 + 0.05 * rng.standard_normal(grid.size)), m, grid)
    cube_fail = sum(not concentration_cube(f, m, c, energy).found for f in (ball, maximizer, wobbly))

    teleported = ball.values * 0.95
    corner = (grid.norms((1.6, 1.6)) < 0.35)
    teleported = teleported + corner * (0.05 * m / grid.cell_volume / corner.sum())
    two_balls = np.maximum(ball_density(m / 2, grid, (-1.0, 0.0)).values, ball_density(m / 2, grid, (1.0, 0.0)).values)
    fields = {"teleported": teleported, "two_balls": two_balls, "maximizer": maximizer.values}
    tight = {}
    tight_fail = 0
    for name, vals in fields.items():
        f = DensityField(grid, np.clip(vals, 0, 1))
        f = DensityField(grid, f.values * m / mass(f))
        rep = tightness_report(f, m, c, energy)
        tight[name] = {"outside": rep.empirical_outside, "bound": rep.bound, "holds": rep.holds}
        tight_fail += not rep.holds
    return _result("diagnostics", cube_fail + tight_fail, tol, cube_failures=cube_fail, tightness=tight)


# quick-level invariants


def check_value_monotonicity(seed=0, tol=1e-12, count=20):
    """Monotonicity and superadditivity of the value on random dyadic pairs."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        f = random_small_field(rng, 64)
        c = CostSpec.power(float(rng.choice([1.0, 2.0])))
        split = rng.random(f.grid.shape) < 0.5
        f1 = DensityField(f.grid, f.values * split)
        f2 = DensityField(f.grid, f.values * ~split)
        v, v1, v2 = (solve_exterior(x, c)[1] for x in (f, f1, f2))
        worst = max(worst, v1 + v2 - v, v1 - v, v2 - v)
    return _result("value_monotone_superadditive", worst, tol, instances=count)


def check_additivity_at_distance(seed=0, tol=1e-9):
    c = CostSpec.power(1.0)
    grid = GridSpec.centered((160,), 1 / 16)
    m = 1.0
    reach = support_radius(c, m, 1)
    x = grid.centers()[:, 0]
    left = (np.abs(x + 2.5) < 0.5).astype(float)
    gap = 2 * reach + grid.spacing
    right = (np.abs(x - (-2.0 + gap + 0.5)) < 0.5).astype(float)
    v = solve_exterior(DensityField(grid, left + right), c)[1]
    v1 = solve_exterior(DensityField(grid, left), c)[1]
    v2 = solve_exterior(DensityField(grid, right), c)[1]
    return _result("additivity_at_distance", abs(v - v1 - v2) / (1 + v), tol, gap=gap)


def check_lipschitz(seed=0, tol=1.0, count=10):
    """``|U(f1) - U(f2)| <= C |f1 - f2|_1`` with ``C = 2 max_{|z| <= R} k``; the metric is the worst ratio to the bound."""
    rng = np.random.default_rng(seed)
    c = CostSpec.power(1.0)
    grid = GridSpec.centered((16, 16), 1 / 8)
    worst = 0.0
    for _ in range(count):
        f1 = random_indicator(rng, grid, discs=2, r_range=(0.2, 0.4), extent=0.4)
        noise = (rng.random(grid.shape) < 0.05) * rng.integers(0, 5, grid.shape) / 4
        f2 = DensityField(grid, np.clip(f1.values + noise, 0, 1))
        m = max(mass(f1), mass(f2))
        lip = 2 * c.max_within(support_radius(c, m, 2), 2)
        dist = l1_distance(f1, f2)
        if dist > 0:
            diff = abs(solve_exterior(f1, c)[1] - solve_exterior(f2, c)[1])
            worst = max(worst, diff / (lip * dist))
    return _result("lipschitz", worst, tol, instances=count)


def check_scaling(seed=0, tol=1e-6):
    c = CostSpec.power(1.0)
    g1 = GridSpec.centered((48, 48), 1 / 16)
    g2 = GridSpec.centered((48, 48), 1 / 8)
    f = rasterize(Ball((0.0, 0.0), 0.9), g1)
    v1 = solve_exterior(f, c)[1]
    v2 = solve_exterior(DensityField(g2, f.values), c)[1]
    return _result("scaling", abs(v2 / v1 - 2 ** 3), tol * 8, ratio=v2 / v1)


def check_bathtub_enumeration(seed=0, tol=1e-12, count=100):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        n = int(rng.integers(2, 11))
        grid = GridSpec.centered((n,), 1.0)
        xi = np.round(rng.normal(size=n) * 4) / 4
        m = int(rng.integers(0, 2 * n + 1)) / 2
        f = bathtub(xi, m, grid)
        worst = max(worst, abs(float(np.sum(f.flat * xi)) - oracle.exhaustive_bathtub(xi, m)))
    return _result("bathtub_enumeration", worst, tol, instances=count)


def check_monotone_1d(seed=0, tol=0.01):
    c = CostSpec.power(2.0)
    grid = GridSpec.centered((192,), 1 / 64)
    x = grid.centers()[:, 0]
    f = DensityField(grid, 0.75 * (np.abs(x) < 1))
    value = solve_exterior(f, c)[1]
    exact = oracle.monotone_1d(0.75, -1, 1, c)
    return _result("monotone_1d_oracle", abs(value - exact) / exact, tol, value=value, exact=exact)


def check_ball_value_1d(seed=0, tol=0.1):
    c = CostSpec.power(1.0)
    value = _ball_value(1, 0.05, c)
    return _result("ball_value_1d", abs(value - 2.0), tol, value=value)


CRITERIA = {
    1: ("C01_oracle_equivalence", check_oracle_equivalence),
    2: ("C02_zero_duality_gap", check_duality_gap),
    3: ("C03_saturation", check_saturation),
    4: ("C04_annulus_destination", check_annulus),
    5: ("C05_radial_value_convergence", check_radial_value),
    6: ("C06_ball_dominance", check_ball_dominance),
    7: ("C07_fixed_point_recovery", check_fixed_point),
    8: ("C08_energy_curve", check_energy_curve),
    9: ("C09_dual_calculus", check_dual_calculus),
    10: ("C10_marginal_monotonicity", check_marginal_monotonicity),
    11: ("C11_rearrangement", check_rearrangement),
    12: ("C12_diagnostics", check_diagnostics),
}

QUICK = {
    "oracle_equivalence": (check_oracle_equivalence, {"count": 40, "max_cells": 64}),
    "duality_gap": (check_duality_gap, {"count": 3, "side": 8}),
    "saturation": (check_saturation, {"count": 2, "side": 24}),
    "ball_value_1d": (check_ball_value_1d, {}),
    "monotone_1d_oracle": (check_monotone_1d, {}),
    "dual_calculus": (check_dual_calculus, {"fields": 10, "pairs": 3}),
    "marginal_monotonicity": (check_marginal_monotonicity, {"pairs": 3}),
    "value_monotone_superadditive": (check_value_monotonicity, {"count": 8}),
    "additivity_at_distance": (check_additivity_at_distance, {}),
    "lipschitz": (check_lipschitz, {"count": 4}),
    "scaling": (check_scaling, {}),
    "bathtub_enumeration": (check_bathtub_enumeration, {"count": 30}),
    "rearrangement_inequalities": (check_rearrangement, {"fields": 5, "hl_cases": 20, "side": 16}),
}

FULL = {
    **{name: (fn, {}) for name, fn in CRITERIA.values()},
    **{name: spec for name, spec in QUICK.items() if name in (
        "ball_value_1d", "monotone_1d_oracle", "value_monotone_superadditive",
        "additivity_at_distance", "lipschitz", "scaling", "bathtub_enumeration")},
}


def run_check(name: str, fn, kwargs: dict, seed: int, tolerances: dict | None = None) -> PropertyResult:
    kwargs = dict(kwargs)
    if tolerances and name in tolerances:
        kwargs["tol"] = tolerances[name]
    res = fn(seed=seed, **kwargs)
    res.name = name
    return res


def verify_suite(level: str = "quick", seed: int = 0, tolerances: dict | None = None,
                 only: list[str] | None = None) -> Report:
    """Run the ``quick`` or ``full`` suite; ``tolerances`` overrides per-property thresholds."""
    if level not in ("quick", "full"):
        raise ValueError("level must be 'quick' or 'full'")
    suite = QUICK if level == "quick" else FULL
    if tolerances:
        unknown = set(tolerances) - set(suite)
        if unknown:
            raise ValueError(f"unknown properties in tolerances: {sorted(unknown)}")
    results, timing = [], {}
    for name, (fn, kwargs) in suite.items():
        if only and name not in only:
            continue
        t0 = time.perf_counter()
        results.append(run_check(name, fn, kwargs, seed, tolerances))
        timing[name] = time.perf_counter() - t0
    return Report(level, seed, results, timing)
