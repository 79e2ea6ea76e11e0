import math

import numpy as np
import pytest
from scipy import integrate

from exterior_ot.domain import Ball, CostSpec, DensityField, GridSpec, mass, rasterize
from exterior_ot.optimize import (
    adaptive_simpson,
    ball_density,
    bathtub,
    best_fit_ball,
    concentration_cube,
    energy_curve,
    grid_for_mass,
    maximize_shape,
    radial_ball_value,
    tightness_report,
)
from exterior_ot.primal import solve_exterior


def test_bathtub_tie_goes_to_lowest_index():
    grid = GridSpec.centered((4,), 1.0)
    np.testing.assert_array_equal(bathtub([3, 2, 2, 1], 2.0, grid).flat, [1, 1, 0, 0])


def test_bathtub_plateau_is_prefix():
    grid = GridSpec.centered((6,), 1.0)
    np.testing.assert_array_equal(bathtub(np.ones(6), 3.0, grid).flat, [1, 1, 1, 0, 0, 0])


def test_bathtub_fractional_cell_and_exact_mass():
    grid = GridSpec.centered((5,), 0.5)
    f = bathtub([1, 5, 3, 4, 2], 0.8, grid)
    np.testing.assert_allclose(f.flat, [0, 1, 0, 0.6, 0])
    assert mass(f) == pytest.approx(0.8)


def test_bathtub_rejects_bad_mass():
    grid = GridSpec.centered((4,), 1.0)
    with pytest.raises(ValueError):
        bathtub(np.ones(4), 5.0, grid)
    with pytest.raises(ValueError):
        bathtub(np.ones(3), 1.0, grid)


def test_ball_density_has_exact_mass():
    grid = GridSpec.centered((40, 40), 1 / 16)
    f = ball_density(math.pi, grid)
    assert mass(f) == pytest.approx(math.pi, abs=1e-12)
    assert mass(best_fit_ball(f)) == pytest.approx(math.pi, rel=0.05)


def test_ball_is_fixed_point(linear_cost):
    grid = grid_for_mass(math.pi, 1 / 16, 2)
    trace = maximize_shape(math.pi, linear_cost, grid, init="ball")
    assert trace.iterations <= 1
    assert trace.value - trace.values[0] <= 1e-8 * (1 + trace.value)


def test_close_intervals_merge(linear_cost):
    grid = GridSpec.covering(4, 1 / 16, 1)
    x = grid.centers().ravel()
    f = DensityField(grid, (np.abs(np.abs(x) - 0.75) < 0.5).astype(float))
    trace = maximize_shape(2.0, linear_cost, grid, init=f)
    assert trace.value > trace.values[0]
    support = np.flatnonzero(trace.density.flat > 0)
    assert np.all(np.diff(support) == 1)
    assert abs(support.size * grid.spacing - 2.0) <= 0.1 * 2.0


def test_maximize_shape_rejects_bad_init(linear_cost):
    grid = GridSpec.centered((16,), 0.25)
    with pytest.raises(ValueError):
        maximize_shape(1.0, linear_cost, grid, init="square")
    with pytest.raises(ValueError):
        maximize_shape(1.0, linear_cost, grid, init=DensityField.zeros(grid))


def test_energy_curve_1d(linear_cost):
    curve = energy_curve([1, 2, 3, 4], linear_cost, 1 / 32, 1, tol=1e-8)
    assert curve.e_increasing and curve.e_min_increment > 10 * 1e-8
    np.testing.assert_allclose(curve.energies, np.array([1, 2, 3, 4]) ** 2 / 2, rtol=1e-6)
    split = next(s for s in curve.splits if s["m"] == 2 and s["parts"] == [1, 1])
    assert split["strict"]


def test_energy_curve_rejects_repeated_mass(linear_cost):
    with pytest.raises(ValueError):
        energy_curve([1, 1], linear_cost, 0.1, 1)


@pytest.fixture(scope="module")
def disc():
    c = CostSpec.power(1.0)
    grid = GridSpec.covering(2.2, 1 / 16, 2)
    f = ball_density(math.pi, grid)
    return c, grid, f, solve_exterior(f, c)[1]


def test_cube_found_for_ball(disc):
    c, _, f, energy = disc
    res = concentration_cube(f, math.pi, c, energy)
    assert res.found and res.fill >= 0.5


def test_spread_density_has_no_cube(disc):
    c, grid, _, energy = disc
    spread = DensityField(grid, np.full(grid.shape, math.pi / grid.total_volume))
    res = concentration_cube(spread, math.pi, c, energy)
    assert not res.found and res.certified_low and res.value < energy / 2


def test_tightness_of_maximizer(disc):
    c, _, f, energy = disc
    rep = tightness_report(f, math.pi, c, energy)
    assert rep.epsilon == 0.0 and rep.empirical_outside <= 1e-12 and rep.holds


def test_tightness_with_teleported_mass(disc):
    c, grid, f, energy = disc
    vals = f.values.copy()
    moved = 0.05 * math.pi / grid.cell_volume
    order = np.argsort(-grid.norms().ravel(), kind="stable")
    flat = vals.ravel()
    # take mass off the ball edge and drop it in the far corners
    src = np.flatnonzero(flat > 0)[: int(round(moved))]
    flat[src] = 0.0
    flat[order[: src.size]] = 1.0
    g = DensityField(grid, flat.reshape(grid.shape))
    rep = tightness_report(g, mass(g), c, energy)
    assert rep.epsilon > 0 and rep.holds
    assert rep.empirical_outside <= rep.bound


def test_tightness_two_far_balls():
    c = CostSpec.power(1.0)
    grid = GridSpec.centered((64, 32), 1 / 16)
    f = rasterize(Ball((-1.2, 0.0), 0.6), grid)
    f = DensityField(grid, np.maximum(f.values, rasterize(Ball((1.2, 0.0), 0.6), grid).values))
    energy = solve_exterior(ball_density(mass(f), grid), c)[1]
    rep = tightness_report(f, mass(f), c, energy)
    assert rep.epsilon > 0.1 * energy and rep.holds


def test_radial_value_examples(linear_cost):
    assert radial_ball_value(linear_cost, 1, 1.0) == pytest.approx(2.0, abs=1e-12)
    exact = 2 * math.pi * integrate.quad(lambda r: (math.hypot(1, r) - r) * r, 0, 1, epsabs=1e-13)[0]
    assert radial_ball_value(linear_cost, 2, 1.0) == pytest.approx(exact, abs=1e-9)
    assert radial_ball_value(linear_cost, 2, 1.0) == pytest.approx(1.735053712758269, abs=1e-9)
    small = [radial_ball_value(linear_cost, d, 1e-4) / (math.pi ** (d / 2) / math.gamma(d / 2 + 1) * 1e-4 ** d)
             for d in (1, 2, 3)]
    assert max(small) < 1e-3


def test_radial_value_rejects_bad_input(linear_cost):
    with pytest.raises(ValueError):
        radial_ball_value(linear_cost, 2, 0.0)
    with pytest.raises(ValueError):
        radial_ball_value(CostSpec.anisotropic(1.0, [[1, 0]], [1.0]), 2, 1.0)


def test_adaptive_simpson_polynomial_and_kink():
    assert adaptive_simpson(lambda x: x ** 3, 0.0, 2.0) == pytest.approx(4.0, abs=1e-12)
    assert adaptive_simpson(abs, -1.0, 2.0, tol=1e-10) == pytest.approx(2.5, abs=1e-9)
