import math
import warnings

import numpy as np
import pytest

from exterior_ot.domain import (
    Annulus,
    Ball,
    CostSpec,
    Cube,
    DensityField,
    GridSpec,
    eval_cost,
    l1_distance,
    mass,
    rasterize,
    support_radius,
    unit_ball_volume,
    validate_hypotheses,
)


def test_unit_ball_volumes():
    assert unit_ball_volume(1) == pytest.approx(2.0)
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_grid_rejects_bad_input():
    with pytest.raises(ValueError):
        GridSpec((0,), 1.0)
    with pytest.raises(ValueError):
        GridSpec((4,), -1.0)
    with pytest.raises(ValueError):
        GridSpec((4, 4), 1.0, (0.0,))


def test_centered_grid_is_symmetric():
    g = GridSpec.centered((8,), 0.5)
    x = g.centers().ravel()
    assert x[0] == -1.75 and x[-1] == 1.75
    np.testing.assert_allclose(x, -x[::-1])


def test_density_values_are_checked():
    g = GridSpec.centered((3,), 1.0)
    with pytest.raises(ValueError):
        DensityField(g, [0.0, 1.5, 0.0])
    with pytest.raises(ValueError):
        DensityField(g, [0.0, np.nan, 0.0])


def test_rasterize_ball_1d():
    g = GridSpec.centered((8,), 0.5)
    f = rasterize(Ball((0.0,), 1.0), g)
    np.testing.assert_array_equal(f.flat, [0, 0, 1, 1, 1, 1, 0, 0])
    assert mass(f) == 2.0


def test_rasterize_ball_2d_mass():
    g = GridSpec.covering(1.25, 1 / 32, 2)
    assert abs(mass(rasterize(Ball((0.0, 0.0), 1.0), g)) - math.pi) <= 0.05 * math.pi


def test_rasterize_annulus_mass():
    g = GridSpec.covering(1.6, 1 / 32, 2)
    f = rasterize(Annulus((0.0, 0.0), 1.0, math.sqrt(2)), g)
    assert abs(mass(f) - math.pi) <= 0.05 * math.pi


def test_rasterize_rejects_shape_outside_grid():
    g = GridSpec.centered((8,), 0.25)
    with pytest.raises(ValueError, match="exceeds grid extent"):
        rasterize(Ball((0.0,), 2.0), g)


def test_mass_examples():
    g = GridSpec.centered((4,), 1.0)
    assert mass(DensityField.zeros(g)) == 0.0
    assert mass(DensityField(g, np.ones(4))) == 4.0


def test_l1_examples():
    g2 = GridSpec.centered((2,), 1.0)
    f = DensityField(g2, [1.0, 0.0])
    assert l1_distance(f, f) == 0.0
    assert l1_distance(f, DensityField(g2, [0.0, 1.0])) == 2.0
    g = GridSpec((12,), 0.25, (-0.875,))
    a = rasterize(Cube((0.0,), 1.0), g)
    b = rasterize(Cube((0.5,), 1.0), g)
    assert l1_distance(a, b) == pytest.approx(1.0)


def test_l1_requires_same_grid():
    with pytest.raises(ValueError):
        l1_distance(DensityField.zeros(GridSpec((2,), 1.0)), DensityField.zeros(GridSpec((3,), 1.0)))


def test_eval_cost_examples():
    c = CostSpec.power(2.0)
    assert eval_cost(c, [0.0, 0.0]) == 0.0
    assert eval_cost(c, [3.0, 0.0]) == pytest.approx(9.0)
    aniso = CostSpec.anisotropic(1.0, [[1, 0], [0, 1], [-1, 0], [0, -1]], [2.0, 1.0, 1.0, 1.0])
    assert eval_cost(aniso, [1.0, 0.0]) == pytest.approx(2.0)


def test_table_cost_extends_linearly():
    c = CostSpec.table([0, 1, 2], [0, 1, 3])
    np.testing.assert_allclose(c.profile([0.5, 1.5, 3.0]), [0.5, 2.0, 5.0])


def test_capped_cost_is_infinite_beyond_cap():
    c = CostSpec.power(1.0, cap=1.0)
    out = c.evaluate_capped(np.array([[0.5], [2.0]]))
    assert out[0] == 0.5 and math.isinf(out[1])


def test_hypotheses_examples():
    assert validate_hypotheses(CostSpec.power(1.0)).passed
    flat = validate_hypotheses(CostSpec.table([0, 1, 2, 3], [0, 1, 1, 2]))
    assert not flat.passed and any("H3" in v for v in flat.violations)
    aniso = CostSpec.anisotropic(1.0, [[1, 0], [0, 1], [-1, 0], [0, -1]], [2.0, 1.0, 1.5, 1.0])
    assert validate_hypotheses(aniso).passed


def test_support_radius_linear_1d():
    # rho = 3, M = k(3) = 3, so R sits one sampling step above 3
    r = support_radius(CostSpec.power(1.0), 1.0, 1)
    assert 3.0 < r <= 3.0 + 1e-2


def test_support_radius_is_monotone_in_mass():
    c = CostSpec.power(2.0)
    rs = [support_radius(c, m, 2) for m in (0.5, 1.0, 2.0, 4.0)]
    assert all(a <= b for a, b in zip(rs, rs[1:]))


def test_support_radius_reports_cap():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        r = support_radius(CostSpec.power(1.0, cap=2.0), 1.0, 1)
    assert r == 2.0 and caught


def test_support_radius_needs_positive_mass():
    with pytest.raises(ValueError):
        support_radius(CostSpec.power(1.0), 0.0, 1)
