import math

import numpy as np
import pytest

from core.grid.grid import make_grid
from core.varexp.exponent import ExponentField, derived_exponents
from core.varexp.spaces import (
    default_t_levels,
    gradient_marcinkiewicz_bound,
    gradient_modular,
    luxemburg_norm,
    marcinkiewicz_bound,
    modular,
)


@pytest.fixture
def square():
    return make_grid(2, 17)


def test_modular_of_constants(square):
    assert modular(square.full(1.0), ExponentField.constant(square, 1.7)) == pytest.approx(1.0)
    assert modular(square.full(2.0), ExponentField.constant(square, 3.0)) == pytest.approx(8.0)
    assert modular(square.zeros(), ExponentField.constant(square, 3.0)) == 0.0


@pytest.mark.parametrize("c", [0.3, 1.0, 7.5])
def test_luxemburg_norm_of_constant(square, c):
    assert luxemburg_norm(square.full(c), ExponentField.constant(square, 2.0)) == pytest.approx(c, rel=1e-9)


def test_luxemburg_norm_of_one_is_one(square):
    p = ExponentField.affine(square, 1.3, 1.0)
    assert luxemburg_norm(square.full(1.0), p) == pytest.approx(1.0, rel=1e-9)
    assert luxemburg_norm(square.zeros(), p) == 0.0


def test_luxemburg_norm_matches_lebesgue_norm_for_constant_exponent():
    grid = make_grid(1, 101)
    v = grid.zeros().with_values(grid.coordinates[0])
    expected = float(np.sum(grid.weights * v.values ** 3)) ** (1.0 / 3.0)
    assert luxemburg_norm(v, ExponentField.constant(grid, 3.0)) == pytest.approx(expected, rel=1e-9)


def test_luxemburg_norm_with_piecewise_exponent():
    grid = make_grid(1, 101)
    left = grid.coordinates[0] < 0.5
    v = grid.zeros().with_values(np.where(left, 2.0, 0.0))
    p = ExponentField(grid, np.where(left, 2.0, 4.0))
    # rho(v / lambda) = 4 meas(left) / lambda^2 = 1, meas(left) -> 1/2 gives sqrt(2)
    expected = math.sqrt(4.0 * float(np.sum(grid.weights[left])))
    assert luxemburg_norm(v, p) == pytest.approx(expected, rel=1e-9)
    assert expected == pytest.approx(math.sqrt(2.0), abs=0.02)


def test_luxemburg_norm_rejects_bad_tolerance(square):
    with pytest.raises(ValueError):
        luxemburg_norm(square.full(1.0), ExponentField.constant(square, 2.0), tol=0.0)


def test_marcinkiewicz_bound_of_zero(square):
    assert marcinkiewicz_bound(square.zeros(), ExponentField.constant(square, 2.0)) == 0.0


def test_marcinkiewicz_bound_of_constant(square):
    levels = [0.25, 0.5, 0.75, 1.5, 2.0]
    bound = marcinkiewicz_bound(square.full(1.0), ExponentField.constant(square, 2.0), levels)
    assert bound == pytest.approx(0.75 ** 2)


def test_marcinkiewicz_bound_of_singular_samples():
    grid = make_grid(2, 65)
    x, y = grid.coordinates
    radius = np.maximum(np.sqrt((x - 0.5) ** 2 + (y - 0.5) ** 2), grid.h_min / 4)
    u = grid.zeros().with_values(radius ** -0.5)
    q0 = derived_exponents(ExponentField.constant(grid, 1.8)).q0
    bound = marcinkiewicz_bound(u, q0)
    assert math.isfinite(bound) and bound > 0.0


def test_marcinkiewicz_levels_must_increase(square):
    with pytest.raises(ValueError):
        marcinkiewicz_bound(square.full(1.0), ExponentField.constant(square, 2.0), [1.0, 0.5])


def test_default_levels():
    np.testing.assert_array_equal(default_t_levels(np.zeros(4)), [1.0])
    levels = default_t_levels(np.array([-2.0, 1.0]), count=5)
    assert levels[0] == pytest.approx(2e-3)
    assert levels[-1] == pytest.approx(2.0)
    assert np.all(np.diff(levels) > 0)


def test_gradient_modular_of_unit_slope():
    grid = make_grid(1, 33)
    u = grid.zeros().with_values(grid.coordinates[0])
    assert gradient_modular(u, ExponentField.constant(grid, 2.0)) == pytest.approx(1.0)


def test_gradient_marcinkiewicz_bound_of_unit_slope():
    grid = make_grid(1, 33)
    u = grid.zeros().with_values(grid.coordinates[0])
    p = ExponentField.constant(grid, 2.0)
    q = ExponentField.constant(grid, 3.0)
    # |g|^r = 1 everywhere, so only levels below 1 count, each with total face weight 1
    assert gradient_marcinkiewicz_bound(u, p, q, [0.5, 0.9, 1.5]) == pytest.approx(0.9 ** 3)


@pytest.mark.parametrize("seed", range(10))
def test_luxemburg_norm_is_homogeneous_and_normalizing(square, seed):
    rng = np.random.default_rng(seed)
    p = ExponentField.affine(square, 1.3 + 0.05 * seed, 0.6)
    v = square.zeros().with_values(rng.standard_normal(square.n) * 10.0 ** rng.uniform(-2, 2))
    norm = luxemburg_norm(v, p)

    for lam in (-3.0, 0.25, 40.0):
        assert luxemburg_norm(v.with_values(lam * v.values), p) == pytest.approx(abs(lam) * norm, rel=1e-8)
    assert modular(v.with_values(v.values / norm), p) == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_marcinkiewicz_bound_is_monotone_under_domination(square, seed):
    rng = np.random.default_rng(seed)
    q = ExponentField.affine(square, 1.2, 0.5)
    v = square.zeros().with_values(rng.standard_normal(square.n))
    u = v.with_values(v.values * rng.uniform(-1.0, 1.0, size=square.n))
    levels = np.geomspace(1e-3, 5.0, 40)
    assert marcinkiewicz_bound(u, q, levels) <= marcinkiewicz_bound(v, q, levels)
