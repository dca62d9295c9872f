import math

import numpy as np
import pytest

from core.entropy.approximation import in_measure_distance, run_approximation_chain
from core.grid.grid import make_grid
from core.operator.flux import p_laplacian
from core.varexp.exponent import ExponentField


@pytest.fixture(scope="module")
def singular_setup():
    grid = make_grid(2, 17)
    x, y = grid.coordinates
    radius = np.maximum(np.sqrt((x - 0.5) ** 2 + (y - 0.5) ** 2), grid.h_min / 4)
    spec = p_laplacian(ExponentField.constant(grid, 1.8), delta=1e-8)
    return spec, grid.zeros().with_values(radius ** -1.5), grid.full(-0.1)


def test_in_measure_distance(grid_2d):
    u = grid_2d.full(0.3)
    assert in_measure_distance(u, u, 1e-2) == 0.0
    assert in_measure_distance(u.with_values(u.values + 2e-2), u, 1e-2) == pytest.approx(1.0)
    with pytest.raises(ValueError):
        in_measure_distance(u, u, 0.0)


def test_bounded_data_make_the_chain_constant(laplacian):
    problem = laplacian(33, -8.0, -0.1)
    chain = run_approximation_chain(problem.spec, problem.f, problem.psi, [2, 4, 8, 16])
    np.testing.assert_array_equal(chain.data[2].values, chain.data[3].values)
    np.testing.assert_allclose(chain.reports[2].u.values, chain.reports[3].u.values, atol=1e-12)
    assert chain.distances()[-1] == 0.0
    # sup p >= N in 1D: the modular diagnostics are not defined
    assert all(math.isnan(row.modular_u) for row in chain.rows)


def test_singular_chain_rows(singular_setup):
    spec, f, psi = singular_setup
    chain = run_approximation_chain(spec, f, psi, [2, 4, 8, 16], s=1e-2)
    assert chain.levels == [2.0, 4.0, 8.0, 16.0]
    assert chain.rows[0].in_measure is None
    assert len(chain.distances()) == 3
    for row in chain.rows:
        assert row.converged
        assert row.modular_u > 0 and math.isfinite(row.modular_grad)
        assert row.marcinkiewicz_m > 0 and math.isfinite(row.marcinkiewicz_grad_m)
    assert chain.data[0].max_abs() == 2.0


def test_workers_do_not_change_results(singular_setup):
    spec, f, psi = singular_setup
    serial = run_approximation_chain(spec, f, psi, [2, 4])
    threaded = run_approximation_chain(spec, f, psi, [2, 4], workers=2)
    for a, b in zip(serial.reports, threaded.reports):
        np.testing.assert_array_equal(a.u.values, b.u.values)


def test_levels_must_increase(singular_setup):
    spec, f, psi = singular_setup
    with pytest.raises(ValueError):
        run_approximation_chain(spec, f, psi, [4, 2])
