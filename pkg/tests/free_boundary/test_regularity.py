import numpy as np
import pytest

from core.free_boundary.regularity import holder_modulus
from core.grid.grid import make_grid


def test_modulus_of_linear_field():
    grid = make_grid(1, 17)
    u = grid.zeros().with_values(2.0 * grid.coordinates[0])
    rows = holder_modulus(u, [0.5, 1.0])
    assert rows[0] == (0.5, pytest.approx(2.0 * grid.h[0] ** 0.5))
    assert rows[1] == (1.0, pytest.approx(2.0))


def test_modulus_grows_as_alpha_increases(analytic_report):
    moduli = [modulus for _, modulus in holder_modulus(analytic_report.u, [0.25, 0.5, 1.0])]
    assert moduli == sorted(moduli)


def test_modulus_uses_every_axis():
    grid = make_grid(2, [5, 9])
    u = grid.zeros().with_values(grid.coordinates[1])
    assert holder_modulus(u, [1.0])[0][1] == pytest.approx(1.0)


@pytest.mark.parametrize("alpha", [0.0, 1.5])
def test_alpha_range(grid_1d, alpha):
    with pytest.raises(ValueError):
        holder_modulus(grid_1d.zeros(), [alpha])
