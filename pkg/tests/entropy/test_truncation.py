import numpy as np
import pytest

from core.entropy.truncation import approximate_data, truncate
from core.grid.grid import integrate, make_grid


def test_truncation_clips_both_signs():
    grid = make_grid(1, 3)
    clipped = truncate(grid.zeros().with_values([3.0, -5.0, 0.5]), 2.0)
    assert clipped.values.tolist() == [2.0, -2.0, 0.5]
    assert truncate(grid.full(0.5), 1.0).values.tolist() == [0.5, 0.5, 0.5]


def test_truncation_keeps_bounded_fields(grid_2d):
    values = np.random.default_rng(0).uniform(-1.0, 1.0, grid_2d.n)
    field = grid_2d.zeros().with_values(values)
    np.testing.assert_array_equal(truncate(field, 1.0).values, values)


@pytest.mark.parametrize("t", [0.0, -1.0])
def test_truncation_level_must_be_positive(grid_1d, t):
    with pytest.raises(ValueError):
        truncate(grid_1d.zeros(), t)


def test_bounded_data_are_unchanged(grid_1d):
    f = grid_1d.zeros().with_values(np.sin(7 * grid_1d.coordinates[0]))
    np.testing.assert_array_equal(approximate_data(f, 1.0).values, f.values)


def test_singular_data_are_clipped_and_converge_in_l1():
    grid = make_grid(2, 33)
    x, y = grid.coordinates
    radius = np.maximum(np.sqrt((x - 0.5) ** 2 + (y - 0.5) ** 2), grid.h_min / 4)
    f = grid.zeros().with_values(radius ** -1.5)

    assert approximate_data(f, 10.0).max_abs() == 10.0
    distances = [integrate(f.with_values(np.abs(f.values - approximate_data(f, n).values))) for n in (1, 2, 4, 8, 16)]
    assert all(b <= a for a, b in zip(distances, distances[1:]))
