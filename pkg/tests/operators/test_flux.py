import numpy as np
import pytest

from core.grid.grid import make_grid
from core.operator.flux import (
    FluxError,
    FluxSpec,
    default_delta,
    energy_density,
    eval_flux,
    p_laplacian,
    scalar_flux,
    scalar_flux_derivative,
)
from core.varexp.exponent import ExponentField
from schema import FluxKind


@pytest.fixture
def square():
    return make_grid(2, 9)


def test_zero_gradient_without_regularization(square):
    spec = p_laplacian(ExponentField.constant(square, 1.5), delta=0.0)
    np.testing.assert_array_equal(eval_flux(spec, [0.5, 0.5], [0.0, 0.0]), [0.0, 0.0])


@pytest.mark.parametrize("delta", [0.0, 1e-3, 0.7])
def test_quadratic_growth_is_identity(square, delta):
    spec = p_laplacian(ExponentField.constant(square, 2.0), delta=delta)
    np.testing.assert_allclose(eval_flux(spec, [0.2, 0.9], [1.5, -2.0]), [1.5, -2.0])


def test_cubic_growth(square):
    spec = p_laplacian(ExponentField.constant(square, 3.0), delta=0.0)
    np.testing.assert_allclose(eval_flux(spec, [0.5, 0.5], [2.0, 0.0]), [4.0, 0.0])


def test_eval_flux_rejects_wrong_dimension(square):
    spec = p_laplacian(ExponentField.constant(square, 2.0))
    with pytest.raises(FluxError):
        eval_flux(spec, [0.5, 0.5], [1.0])


def test_default_delta_follows_extent():
    assert default_delta(make_grid(1, 5, 2.0)) == pytest.approx(2e-8)


def test_spec_validation(square):
    p = ExponentField.constant(square, 2.0)
    with pytest.raises(FluxError):
        FluxSpec(FluxKind.P_LAPLACIAN, p, delta=-1.0)
    with pytest.raises(FluxError):
        FluxSpec(FluxKind.P_LAPLACIAN, p, delta=0.0, alpha=0.0)
    with pytest.raises(FluxError):
        FluxSpec(FluxKind.PERTURBED_P_LAPLACIAN, p, delta=0.0, j=square.full(-1.0))


def test_j_only_counts_for_the_perturbed_kind(square):
    p = ExponentField.constant(square, 2.0)
    perturbed = FluxSpec(FluxKind.PERTURBED_P_LAPLACIAN, p, delta=0.0, j=square.full(0.5))
    np.testing.assert_allclose(perturbed.j_values(), 0.5)
    np.testing.assert_allclose(p_laplacian(p).j_values(), 0.0)


def test_matches_compares_values(square):
    a = p_laplacian(ExponentField.constant(square, 1.8), delta=1e-6)
    b = p_laplacian(ExponentField.constant(square, 1.8), delta=1e-6)
    c = p_laplacian(ExponentField.constant(square, 1.9), delta=1e-6)
    assert a.matches(b)
    assert not a.matches(c)
    assert not a.matches(a.with_exponent(c.p))


def test_energy_density_derivative_is_the_flux():
    r = np.array([0.01, 0.3, 1.7])
    p = np.array([1.4, 2.0, 3.1])
    delta = 1e-2
    step = 1e-6
    derivative = (energy_density(r + step, p, delta) - energy_density(r - step, p, delta)) / (2 * step)
    np.testing.assert_allclose(derivative, scalar_flux(r, p, delta), rtol=1e-6)


def test_flux_derivative_matches_difference_quotient():
    g = np.array([-1.2, 0.05, 0.8])
    p = np.array([1.6, 2.0, 2.7])
    delta = 1e-2
    step = 1e-7
    quotient = (scalar_flux(g + step, p, delta) - scalar_flux(g - step, p, delta)) / (2 * step)
    np.testing.assert_allclose(scalar_flux_derivative(g, p, delta), quotient, rtol=1e-5)


def test_flux_derivative_floor_keeps_it_finite():
    assert np.isinf(scalar_flux_derivative(np.array([0.0]), np.array([1.5]), 0.0))[0]
    assert np.isfinite(scalar_flux_derivative(np.array([0.0]), np.array([1.5]), 0.0, floor=1e-12))[0]
