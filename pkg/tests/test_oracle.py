import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from exterior_ot.domain import Ball, CostSpec, Cube, DensityField, GridSpec, rasterize
from exterior_ot.optimize import bathtub, radial_ball_value
from exterior_ot.oracle import (
    OracleSizeError,
    brute_lp,
    exhaustive_bathtub,
    monotone_1d,
    rational_simplex,
    unimodular_simplex,
)
from exterior_ot.primal import solve_exterior


def test_brute_lp_zero(linear_cost):
    f = DensityField.zeros(GridSpec.centered((6,), 0.5))
    assert brute_lp(f, linear_cost) == (0.0, {}, 0)


def test_brute_lp_interval_matches_radial_value(linear_cost):
    grid = GridSpec.covering(2.5, 0.25, 1)
    f = rasterize(Ball((0.0,), 1.0), grid)
    value, plan, _ = brute_lp(f, linear_cost)
    assert abs(value - radial_ball_value(linear_cost, 1, 1.0)) <= grid.spacing
    assert sum(plan.values()) == pytest.approx(2.0)


def test_brute_lp_size_limit(linear_cost):
    with pytest.raises(OracleSizeError):
        brute_lp(DensityField.zeros(GridSpec.centered((20, 20), 0.5)), linear_cost)


def test_monotone_interval_values():
    assert monotone_1d(1.0, -1.0, 1.0, CostSpec.power(1.0)) == pytest.approx(2.0, abs=1e-9)
    # s(r) = 1 + r, so every point moves exactly distance 1
    assert monotone_1d(1.0, -1.0, 1.0, CostSpec.power(2.0)) == pytest.approx(2.0, abs=1e-9)
    assert monotone_1d(0.5, -1.0, 1.0, CostSpec.power(2.0)) == 0.0


def test_monotone_three_quarter_level_frozen():
    assert monotone_1d(0.75, -1.0, 1.0, CostSpec.power(2.0)) == pytest.approx(5 / 12, abs=1e-9)


def test_monotone_against_brute_lp(quadratic_cost):
    grid = GridSpec.covering(1.75, 1 / 16, 1)
    f = DensityField(grid, 0.75 * rasterize(Cube((-1.0,), 2.0), grid).values)
    lp_value, _, _ = brute_lp(f, quadratic_cost)
    assert lp_value == pytest.approx(monotone_1d(0.75, -1.0, 1.0, quadratic_cost), rel=0.01)
    half = DensityField(grid, 0.5 * rasterize(Cube((-1.0,), 2.0), grid).values)
    assert brute_lp(half, quadratic_cost)[0] == 0.0


def test_monotone_refuses_nonconvex_cost():
    with pytest.raises(ValueError):
        monotone_1d(1.0, -1.0, 1.0, CostSpec.power(0.5))


def test_rational_simplex_small_lp():
    value, x = rational_simplex([[1, 1]], [3], [1, 2])
    assert value == 3 and x == [Fraction(3), Fraction(0)]
    with pytest.raises(ValueError):
        rational_simplex([[1, 1], [1, 1]], [3, 2], [1, 1])


def test_unimodular_simplex_rejects_non_unimodular_pivot():
    with pytest.raises(ArithmeticError):
        unimodular_simplex([[2, 1]], [3], [1, 1])


def _transportation(rng, ns, nt):
    supply = rng.integers(0, 6, ns)
    cap = rng.integers(0, 6, nt)
    cap[0] += max(0, supply.sum() - cap.sum())
    cost = rng.integers(0, 20, (ns, nt))
    cols = ns * nt + nt
    A = np.zeros((ns + nt, cols), dtype=np.int64)
    for i in range(ns):
        for j in range(nt):
            A[i, i * nt + j] = 1
            A[ns + j, i * nt + j] = 1
    for j in range(nt):
        A[ns + j, ns * nt + j] = 1
    return A, np.concatenate([supply, cap]), np.concatenate([cost.ravel(), np.zeros(nt, int)])


@given(st.integers(0, 10_000), st.integers(1, 4), st.integers(1, 5))
def test_unimodular_matches_rational(seed, ns, nt):
    A, b, cost = _transportation(np.random.default_rng(seed), ns, nt)
    exact, _ = rational_simplex(A.tolist(), b.tolist(), cost.tolist())
    value, x = unimodular_simplex(A, b, cost)
    assert Fraction(value) == exact
    np.testing.assert_array_equal(A @ x, b)
    assert np.all(x >= 0)


def test_exhaustive_bathtub_prefix():
    xi = np.array([5.0, 4.0, 3.0, 2.0, 1.0])
    assert exhaustive_bathtub(xi, 2.0) == 9.0
    assert exhaustive_bathtub(xi, 2.5) == 10.5


@given(st.lists(st.integers(0, 9), min_size=2, max_size=8), st.data())
def test_bathtub_matches_enumeration(values, data):
    xi = np.array(values, dtype=float)
    m = data.draw(st.integers(1, 2 * xi.size)) / 2
    grid = GridSpec.centered((xi.size,), 1.0)
    f = bathtub(xi, m, grid)
    assert math.fsum(f.flat * xi) == pytest.approx(exhaustive_bathtub(xi, m))


def test_exhaustive_bathtub_limits():
    with pytest.raises(OracleSizeError):
        exhaustive_bathtub(np.zeros(13), 1.0)
    with pytest.raises(ValueError):
        exhaustive_bathtub(np.zeros(4), 0.3)
    with pytest.raises(ValueError):
        exhaustive_bathtub(np.zeros(4), 5.0)


def test_brute_lp_agrees_with_solver_on_2d_instance(quadratic_cost):
    grid = GridSpec.centered((8, 8), 0.25)
    f = rasterize(Ball((0.0, 0.0), 0.45), grid)
    plan, value = solve_exterior(f, quadratic_cost)
    lp_value, _, units = brute_lp(f, quadratic_cost)
    assert units == plan.value_units and lp_value == value
