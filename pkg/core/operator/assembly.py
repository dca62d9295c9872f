import logging
from dataclasses import dataclass
from typing import List, Tuple

import numpy as np
from scipy import sparse

from core.grid.grid import Grid, ScalarField, VectorField, divergence, face_weight, gradient
from core.operator.flux import FluxSpec, energy_density, scalar_flux, scalar_flux_derivative

logger = logging.getLogger("assembly")


@dataclass(frozen=True)
class OperatorOutput:
    """Au at the nodes (zero on the boundary) and the face flux it came from"""
    au: ScalarField
    flux: VectorField


def _check(spec: FluxSpec, u: ScalarField):
    if spec.grid != u.grid:
        raise ValueError("Flux specification and field live on different grids")


def face_fluxes(spec: FluxSpec, u: ScalarField) -> VectorField:
    """Per face: the flux of the axis difference quotient with the face-averaged exponent"""
    _check(spec, u)
    grad = gradient(u)
    components = tuple(
        scalar_flux(component, spec.p.face_values(axis), spec.delta)
        for axis, component in enumerate(grad.components)
    )
    return VectorField(u.grid, components)


def apply_a(spec: FluxSpec, u: ScalarField) -> OperatorOutput:
    """Au = -div a(x, grad u) at interior nodes"""
    flux = face_fluxes(spec, u)
    au = divergence(flux)
    return OperatorOutput(au=au.with_values(-au.values), flux=flux)


def discrete_energy(spec: FluxSpec, u: ScalarField, f: ScalarField) -> float:
    """
    E(u) = sum_f w_f Phi(p_f, |g_f|) - sum_i h^dim f_i u_i over interior nodes.

    Its partial derivative in an interior value u_i is h^dim (Au - f)_i.
    """
    _check(spec, u)
    grid = u.grid
    weight = face_weight(grid)
    grad = gradient(u)
    energy = 0.0
    for axis, component in enumerate(grad.components):
        energy += weight * float(np.sum(energy_density(np.abs(component), spec.p.face_values(axis), spec.delta)))
    interior = grid.interior_mask
    energy -= grid.cell_volume * float(np.sum(f.values[interior] * u.values[interior]))
    return energy


def face_pairs(grid: Grid) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Flat node indices (lower, upper) of every face, one pair of arrays per axis"""
    index = np.arange(grid.size).reshape(grid.n)
    pairs = []
    for axis in range(grid.dim):
        lower = [slice(None)] * grid.dim
        upper = [slice(None)] * grid.dim
        lower[axis] = slice(None, -1)
        upper[axis] = slice(1, None)
        pairs.append((index[tuple(lower)].ravel(), index[tuple(upper)].ravel()))
    return pairs


def interior_indices(grid: Grid) -> np.ndarray:
    return np.flatnonzero(grid.interior_mask.ravel())


def jacobian(spec: FluxSpec, u: ScalarField, floor: float = 0.0) -> sparse.csr_matrix:
    """
    d(Au)/du restricted to interior unknowns (ordered as :func:`interior_indices`).

    Each face contributes c_f (e_j - e_i)(e_j - e_i)^T with c_f = a'(g_f) / h_axis^2.
    """
    _check(spec, u)
    grid = u.grid
    grad = gradient(u)

    rows, cols, data = [], [], []
    for axis, (lower, upper) in enumerate(face_pairs(grid)):
        slope = scalar_flux_derivative(grad.components[axis].ravel(), spec.p.face_values(axis).ravel(), spec.delta, floor)
        c = slope / grid.h[axis] ** 2
        rows += [lower, upper, lower, upper]
        cols += [lower, upper, upper, lower]
        data += [c, c, -c, -c]

    full = sparse.coo_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(grid.size, grid.size),
    ).tocsr()
    interior = interior_indices(grid)
    return full[interior][:, interior]
