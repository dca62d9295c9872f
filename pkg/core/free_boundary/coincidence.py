import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy import ndimage

from core.grid.grid import Grid, RegionMask, ScalarField
from core.operator.assembly import apply_a
from core.operator.flux import FluxSpec
from core.solver.problem import ObstacleProblem
from core.solver.vi_solver import default_tolerance

logger = logging.getLogger("coincidence")

# free-boundary collars extend this many grid steps from the contact edge
COLLAR_WIDTH = 2


def default_eps(grid: Grid, tol: float) -> float:
    return max(10.0 * tol, grid.h_min ** 2)


def coincidence_set(
    u: ScalarField,
    psi: ScalarField,
    eps: Optional[float] = None,
    tol: Optional[float] = None,
) -> RegionMask:
    """
    Interior nodes with u - psi <= eps.

    Without ``eps`` the threshold is max(10 tol, h^2), ``tol`` defaulting to the
    solver tolerance of zero data.
    """
    if u.grid != psi.grid:
        raise ValueError("Solution and obstacle live on different grids")
    if eps is None:
        eps = default_eps(u.grid, 1e-10 if tol is None else tol)
    if eps < 0:
        raise ValueError(f"eps must be nonnegative, got {eps}")
    return RegionMask(u.grid, u.grid.interior_mask & (u.values - psi.values <= eps))


def _cross(dim: int) -> np.ndarray:
    return ndimage.generate_binary_structure(dim, 1)


def free_boundary_collar(contact: RegionMask, width: int = COLLAR_WIDTH) -> RegionMask:
    """Interior nodes within ``width`` axis steps of an edge between contact and non-contact nodes"""
    grid = contact.grid
    interior = grid.interior_mask
    inside = contact.mask & interior
    outside = interior & ~contact.mask
    structure = _cross(grid.dim)

    edge = (inside & ndimage.binary_dilation(outside, structure)) | (outside & ndimage.binary_dilation(inside, structure))
    if not np.any(edge):
        return RegionMask.empty(grid)
    collar = ndimage.binary_dilation(edge, structure, iterations=width)
    return RegionMask(grid, collar & interior)


def strict_interior(contact: RegionMask, width: int = COLLAR_WIDTH) -> RegionMask:
    """Interior nodes outside the free-boundary collar"""
    return RegionMask.interior(contact.grid).minus(free_boundary_collar(contact, width))


def xi_field(problem: ObstacleProblem, u: ScalarField) -> ScalarField:
    """xi = f - Au at interior nodes, zero on the boundary"""
    au = apply_a(problem.spec, u).au.values
    values = problem.f.values - au
    values[problem.grid.boundary_mask] = 0.0
    return u.with_values(values)


@dataclass(frozen=True)
class BetaReconstruction:
    beta: ScalarField
    contact: RegionMask
    strict_residual: float
    strict_nodes: int


def reconstruct_beta(
    problem: ObstacleProblem,
    u: ScalarField,
    eps: Optional[float] = None,
    tol: Optional[float] = None,
) -> BetaReconstruction:
    """
    beta = -(A psi - f)^+ on the coincidence set, 0 elsewhere, with the
    residual sup|Au + beta - f| over interior nodes outside the 2h collar.
    """
    tol = default_tolerance(problem.f) if tol is None else tol
    contact = coincidence_set(u, problem.psi, eps, tol)
    a_psi = apply_a(problem.spec, problem.psi).au.values
    beta = np.where(contact.mask, -np.maximum(a_psi - problem.f.values, 0.0), 0.0)

    au = apply_a(problem.spec, u).au.values
    keep = strict_interior(contact).mask
    residual = float(np.max(np.abs(au + beta - problem.f.values)[keep])) if np.any(keep) else 0.0
    logger.debug(f"Strict-interior residual of Au + beta = f: {residual:.3e} over {int(np.count_nonzero(keep))} nodes")
    return BetaReconstruction(
        beta=u.with_values(beta),
        contact=contact,
        strict_residual=residual,
        strict_nodes=int(np.count_nonzero(keep)),
    )


def zero_obstacle_beta(problem: ObstacleProblem, u: ScalarField, eps: Optional[float] = None) -> ScalarField:
    """-f^- on {u = 0}, the discontinuity term for the zero obstacle"""
    if np.any(problem.psi.values != 0.0):
        raise ValueError("The zero-obstacle form needs psi = 0")
    contact = coincidence_set(u, problem.psi, eps, default_tolerance(problem.f))
    return u.with_values(np.where(contact.mask, -np.maximum(-problem.f.values, 0.0), 0.0))


def locality_check(spec: FluxSpec, w1: ScalarField, w2: ScalarField, eps: float = 0.0) -> float:
    """sup|Aw1 - Aw2| over interior nodes whose whole stencil lies in {|w1 - w2| <= eps}"""
    if w1.grid != w2.grid:
        raise ValueError("Fields live on different grids")
    grid = w1.grid
    agree = np.abs(w1.values - w2.values) <= eps
    stencil_inside = ndimage.binary_erosion(agree, _cross(grid.dim), border_value=1) & grid.interior_mask
    if not np.any(stencil_inside):
        return 0.0
    difference = apply_a(spec, w1).au.values - apply_a(spec, w2).au.values
    return float(np.max(np.abs(difference[stencil_inside])))
