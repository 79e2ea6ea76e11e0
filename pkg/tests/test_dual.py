import numpy as np
import pytest

from exterior_ot import _kernel
from exterior_ot.domain import Ball, CostSpec, DensityField, GridSpec, rasterize
from exterior_ot.dual import (
    PotentialPair,
    c_transform,
    dual_from_plan,
    duality_gap,
    kantorovich_objective,
    maximal_potential,
    project_P,
    slackness_report,
)
from exterior_ot.primal import plan_marginals, solve_exterior
from exterior_ot.verify import nested_indicator_pair, random_small_field

ANISO = CostSpec.anisotropic(1.0, [[1, 0], [0, 1], [-1, 0], [0, -1]], [2.0, 1.0, 1.5, 1.0])


def _dense_transform(xi, grid, c, reverse=False):
    n = grid.size
    i, j = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    # k[y, x] = k(y - x), or k(x - y) when reversed
    k = _kernel.pair_costs(grid, c, j.ravel(), i.ravel()).reshape(n, n)
    if reverse:
        k = k.T
    return np.min(k - xi.ravel()[None, :], axis=1).reshape(grid.shape)


def test_transform_of_zero_is_zero(linear_cost):
    grid = GridSpec.centered((7, 5), 0.5)
    np.testing.assert_array_equal(c_transform(np.zeros(grid.shape), grid, linear_cost), 0.0)


@pytest.mark.parametrize("cost", [CostSpec.power(1.0), CostSpec.power(2.0), ANISO])
@pytest.mark.parametrize("direction", ["forward", "reverse"])
def test_transform_matches_dense_minimum(cost, direction):
    rng = np.random.default_rng(3)
    grid = GridSpec.centered((6, 7), 0.25)
    xi = rng.normal(size=grid.shape)
    xi[rng.random(grid.shape) < 0.3] = -np.inf
    got = c_transform(xi, grid, cost, direction)
    np.testing.assert_array_equal(got, _dense_transform(xi, grid, cost, direction == "reverse"))


def test_transform_rejects_unknown_direction(linear_cost):
    grid = GridSpec.centered((3,), 1.0)
    with pytest.raises(ValueError):
        c_transform(np.zeros(3), grid, linear_cost, "sideways")


@pytest.mark.parametrize("cost", [CostSpec.power(1.0), ANISO])
def test_projection_is_idempotent(cost):
    rng = np.random.default_rng(11)
    grid = GridSpec.centered((9, 9), 0.25)
    phi = rng.uniform(-1, 1, grid.shape)
    once = project_P(phi, grid, cost)
    np.testing.assert_array_equal(project_P(once, grid, cost), once)


def test_zero_density_duals(linear_cost):
    f = DensityField.zeros(GridSpec.centered((6,), 0.5))
    plan, _ = solve_exterior(f, linear_cost)
    pair = dual_from_plan(f, plan, linear_cost)
    assert pair.objective(f) == 0.0
    np.testing.assert_array_equal(maximal_potential(f, linear_cost).psi, 0.0)
    assert duality_gap(f, linear_cost) == 0.0


def test_interval_dual_value(linear_cost):
    f = rasterize(Ball((0.0,), 1.0), GridSpec.covering(2.5, 0.05, 1))
    plan, value = solve_exterior(f, linear_cost)
    pair = dual_from_plan(f, plan, linear_cost)
    assert pair.objective(f) == pytest.approx(value, abs=1e-6)
    assert pair.violation() == 0.0 and pair.is_canonical()


def test_duality_gap_random_fields(linear_cost):
    rng = np.random.default_rng(5)
    for _ in range(20):
        grid = GridSpec.centered((10, 10), 0.25)
        vals = rng.choice([0, 0.5, 1.0], grid.size, p=[0.6, 0.2, 0.2])
        f = DensityField(grid, vals)
        value = solve_exterior(f, linear_cost)[1]
        assert abs(duality_gap(f, linear_cost)) <= 1e-6 * (1 + value)


def test_duality_gap_ball(quadratic_cost):
    f = rasterize(Ball((0.0, 0.0), 1.0), GridSpec.covering(1.6, 1 / 16, 2))
    value = solve_exterior(f, quadratic_cost)[1]
    assert abs(duality_gap(f, quadratic_cost)) <= 1e-6 * (1 + value)


def test_objective_ignores_infinite_potentials_off_support():
    grid = GridSpec.centered((3,), 1.0)
    f = DensityField(grid, [0.0, 1.0, 0.0])
    phi = np.array([-np.inf, 2.0, -np.inf])
    psi = np.array([-1.0, -np.inf, -1.0])
    assert kantorovich_objective(f, phi, psi) == 0.0


def test_maximal_potential_methods_agree():
    rng = np.random.default_rng(2)
    for cost in (CostSpec.power(1.0), CostSpec.power(2.0)):
        for _ in range(6):
            f = random_small_field(rng, max_cells=100)
            a = maximal_potential(f, cost, method="dijkstra")
            b = maximal_potential(f, cost, method="sweep")
            np.testing.assert_array_equal(a.psi, b.psi)
            np.testing.assert_array_equal(a.phi, b.phi)


def test_maximal_potential_dominates_other_optimal_duals(linear_cost):
    grid = GridSpec.centered((16, 16), 0.125)
    f = rasterize(Ball((0.0, 0.0), 0.5), grid)
    plan, value = solve_exterior(f, linear_cost)
    top = maximal_potential(f, linear_cost, plan)
    other = dual_from_plan(f, plan, linear_cost)
    assert top.objective(f) == pytest.approx(value, abs=1e-9)
    assert np.all(top.psi >= other.psi)


def test_maximal_potential_monotone_in_density(linear_cost):
    rng = np.random.default_rng(9)
    grid = GridSpec.centered((20, 20), 0.1)
    for _ in range(4):
        f1, f2 = nested_indicator_pair(rng, grid)
        assert np.all(f1.flat <= f2.flat)
        p1 = maximal_potential(f1, linear_cost).psi
        p2 = maximal_potential(f2, linear_cost).psi
        assert np.all(p1 >= p2 - 1e-6)


def test_maximal_potential_rejects_unknown_method(linear_cost):
    f = DensityField.zeros(GridSpec.centered((4,), 1.0))
    with pytest.raises(ValueError):
        maximal_potential(f, linear_cost, method="simplex")


def test_slackness_zero_density(linear_cost):
    f = DensityField.zeros(GridSpec.centered((8,), 0.5))
    plan, _ = solve_exterior(f, linear_cost)
    rep = slackness_report(f, plan, maximal_potential(f, linear_cost, plan))
    np.testing.assert_array_equal(rep.chi, 0.0)
    assert rep.saturation_violation == 0.0 and rep.empty_violation == 0.0


def test_slackness_interval(linear_cost):
    grid = GridSpec.covering(2.5, 0.05, 1)
    f = rasterize(Ball((0.0,), 1.0), grid)
    plan, _ = solve_exterior(f, linear_cost)
    rep = slackness_report(f, plan, maximal_potential(f, linear_cost, plan))
    x = grid.centers().ravel()
    inner = np.abs(x) < 2 - 2 * grid.spacing
    outer = np.abs(x) > 2 + 2 * grid.spacing
    assert np.all(rep.negative.ravel()[inner]) and not np.any(rep.negative.ravel()[outer])
    _, g = plan_marginals(plan)
    np.testing.assert_allclose((f.flat + g.flat)[rep.negative.ravel()], 1.0)


def test_slackness_random_fields(linear_cost):
    rng = np.random.default_rng(4)
    for _ in range(5):
        grid = GridSpec.centered((10, 10), 0.25)
        f = DensityField(grid, rng.choice([0, 0.5, 1.0], grid.size, p=[0.6, 0.2, 0.2]))
        plan, _ = solve_exterior(f, linear_cost)
        rep = slackness_report(f, plan, maximal_potential(f, linear_cost, plan))
        assert rep.saturation_violation <= 0.05 and rep.empty_violation <= 0.05


def test_pair_violation_detects_infeasible_pair(linear_cost):
    grid = GridSpec.centered((4,), 1.0)
    pair = PotentialPair(np.full(grid.shape, 5.0), np.zeros(grid.shape), grid, linear_cost)
    assert pair.violation() == 5.0
