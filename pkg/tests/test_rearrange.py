import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from exterior_ot.domain import Ball, CostSpec, DensityField, GridSpec, ShapeUnion, rasterize
from exterior_ot.rearrange import (
    LevelSet,
    RadialProfile,
    brunn_minkowski_check,
    ctransform_rearrangement_check,
    decreasing_rearrangement,
    erode,
    hardy_littlewood_check,
    increasing_rearrangement,
    radial_order,
)
from exterior_ot.verify import random_compact_psi

GRID = GridSpec.centered((9, 9), 0.25)


def test_indicator_rearranges_to_discrete_ball():
    vals = np.zeros(GRID.size)
    vals[[0, 7, 20, 44, 80]] = 1
    _, out = decreasing_rearrangement(vals, GRID)
    order, _ = radial_order(GRID)
    expected = np.zeros(GRID.size)
    expected[order[:5]] = 1
    np.testing.assert_array_equal(out.ravel(), expected)


def test_radial_decreasing_field_is_fixed():
    phi = np.exp(-GRID.norms() ** 2)
    prof, out = decreasing_rearrangement(phi, GRID)
    np.testing.assert_array_equal(out, phi)
    assert np.all(np.diff(prof.values) < 0)


def test_increasing_rearrangement_examples():
    np.testing.assert_array_equal(increasing_rearrangement(np.zeros(GRID.shape), GRID)[1], 0.0)
    psi = np.zeros(GRID.size)
    psi[[3, 4, 5, 70]] = -1
    _, out = increasing_rearrangement(psi, GRID)
    order, _ = radial_order(GRID)
    assert set(np.flatnonzero(out.ravel() == -1)) == set(order[:4])


def test_rearrangements_reject_wrong_sign():
    with pytest.raises(ValueError):
        decreasing_rearrangement(-np.ones(GRID.shape), GRID)
    with pytest.raises(ValueError):
        increasing_rearrangement(np.ones(GRID.shape), GRID)


@given(arrays(np.float64, GRID.size, elements=st.floats(0, 10, allow_nan=False)))
def test_rearrangement_is_equimeasurable(phi):
    prof, out = decreasing_rearrangement(phi, GRID)
    np.testing.assert_array_equal(np.sort(out.ravel()), np.sort(phi))
    # values never increase outward
    order, _ = radial_order(GRID)
    assert np.all(np.diff(out.ravel()[order]) <= 0)
    assert isinstance(prof, RadialProfile)


def test_erosion_examples():
    grid = GridSpec.covering(1.5, 0.05, 1)
    ball = LevelSet(grid, rasterize(Ball((0.0,), 1.0), grid).values > 0)
    assert np.array_equal(erode(ball, 0.0).mask, ball.mask)
    half = erode(ball, 0.5)
    x = grid.centers().ravel()[half.mask.ravel()]
    assert abs(x.max() - 0.5) <= grid.spacing and abs(x.min() + 0.5) <= grid.spacing
    assert erode(ball, 1.5).count == 0
    with pytest.raises(ValueError):
        erode(ball, -1.0)


def test_transform_rearrangement_zero_field():
    rep = ctransform_rearrangement_check(np.zeros(GRID.shape), GRID, CostSpec.power(1.0))
    assert rep.passed and rep.margin == 0.0


def test_transform_rearrangement_random_fields():
    rng = np.random.default_rng(1)
    grid = GridSpec.centered((24, 24), 1 / 12)
    for cost in (CostSpec.power(1.0), CostSpec.power(2.0)):
        for _ in range(3):
            rep = ctransform_rearrangement_check(random_compact_psi(rng, grid), grid, cost)
            assert rep.passed, rep.details


def test_transform_rearrangement_needs_radial_cost():
    aniso = CostSpec.anisotropic(1.0, [[1, 0], [0, 1]], [1.0, 2.0])
    with pytest.raises(ValueError):
        ctransform_rearrangement_check(np.zeros(GRID.shape), GRID, aniso)


def test_hardy_littlewood_aligned_and_shifted():
    grid = GridSpec.centered((32, 32), 1 / 16)
    f = rasterize(Ball((0.0, 0.0), 0.5), grid)
    xi = np.exp(-grid.norms())
    aligned = hardy_littlewood_check(f, xi)
    assert aligned.passed and aligned.margin == pytest.approx(0.0, abs=1e-12)
    shifted = rasterize(Ball((0.4, 0.0), 0.5), grid).values
    strict = hardy_littlewood_check(f, shifted)
    assert strict.passed and strict.margin > 0


@given(st.integers(0, 2 ** 32 - 1))
def test_hardy_littlewood_never_violated(seed):
    rng = np.random.default_rng(seed)
    grid = GridSpec.centered((12, 12), 0.125)
    f = DensityField(grid, rng.random(grid.shape))
    assert hardy_littlewood_check(f, rng.normal(size=grid.shape)).passed


def test_brunn_minkowski_ball_and_rectangle():
    grid = GridSpec.centered((48, 48), 1 / 16)
    ball = LevelSet(grid, rasterize(Ball((0.0, 0.0), 1.0), grid).values > 0)
    rep = brunn_minkowski_check(ball, 0.25)
    assert rep.passed and abs(rep.margin) <= 2 * grid.spacing
    x, y = grid.centers().T
    thin = LevelSet(grid, ((np.abs(x) < 1.25) & (np.abs(y) < 0.1)).reshape(grid.shape))
    rep = brunn_minkowski_check(thin, 0.2)
    assert rep.details["eroded_volume"] == 0.0 and rep.margin > 0 and rep.passed


def test_ball_erodes_to_most_cells():
    grid = GridSpec.centered((48, 48), 1 / 16)
    ball = LevelSet(grid, rasterize(Ball((0.0, 0.0), 1.0), grid).values > 0)
    rng = np.random.default_rng(0)
    others = []
    for _ in range(5):
        parts = tuple(Ball(tuple(rng.uniform(-0.6, 0.6, 2)), rng.uniform(0.3, 0.6)) for _ in range(3))
        others.append(LevelSet(grid, rasterize(ShapeUnion(parts), grid).values > 0))
    for s in (0.125, 0.25, 0.5):
        assert brunn_minkowski_check(ball, s, others).passed


def test_level_set_superlevel_volume():
    vals = np.arange(GRID.size, dtype=float)
    level = LevelSet.superlevel(vals, GRID, 40.5)
    assert level.count == 40 and level.volume == pytest.approx(40 * GRID.cell_volume)
