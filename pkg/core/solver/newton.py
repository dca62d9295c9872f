import logging
from typing import Optional, Tuple

import numpy as np
from scipy import sparse
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import spsolve

from core.grid.grid import ScalarField, make_grid
from core.operator.assembly import apply_a, discrete_energy, interior_indices, jacobian
from core.operator.flux import FluxSpec
from core.solver.problem import ObstacleProblem
from core.varexp.exponent import ExponentField

logger = logging.getLogger("newton")

MIN_NEWTON_STEPS = 100
MAX_LINE_SEARCH = 40
ARMIJO = 1e-4
# coarsest grid used for sequencing, per axis
MIN_SEQUENCE_NODES = 33


def _residual(problem: ObstacleProblem, u: np.ndarray, interior: np.ndarray) -> Tuple[np.ndarray, float]:
    """Interior (Au - f) and the complementarity residual"""
    au = apply_a(problem.spec, ScalarField(problem.grid, u)).au.values.ravel()
    r = au[interior] - problem.f.values.ravel()[interior]
    gap = u[interior] - problem.psi.values.ravel()[interior]
    return r, float(np.max(np.abs(np.minimum(gap, r)))) if r.size else 0.0


def max_newton_steps(problem: ObstacleProblem) -> int:
    """Step cap; grows with the longest grid axis"""
    return max(MIN_NEWTON_STEPS, max(problem.grid.n))


def active_set(r: np.ndarray, diagonal: np.ndarray, gap: np.ndarray) -> np.ndarray:
    """
    Primal-dual active set: nodes whose diagonal Newton update u - r / c
    would land below the obstacle, i.e. r - c (u - psi) > 0.
    """
    return r - diagonal * gap > 0.0


def coarsen(problem: ObstacleProblem) -> Optional[ObstacleProblem]:
    """Every other node of every axis, or None when the grid is too small or does not halve"""
    grid = problem.grid
    if any(n <= MIN_SEQUENCE_NODES or (n - 1) % 2 for n in grid.n):
        return None
    coarse = make_grid(grid.dim, [(n - 1) // 2 + 1 for n in grid.n], list(grid.extent))
    take = tuple(slice(None, None, 2) for _ in range(grid.dim))

    spec = problem.spec
    j = None if spec.j is None else ScalarField(coarse, spec.j.values[take])
    coarse_spec = FluxSpec(
        spec.kind, ExponentField(coarse, spec.p.values[take]), spec.delta, j, spec.alpha, spec.gamma,
    )
    f = ScalarField(coarse, problem.f.values[take])
    psi = ScalarField(coarse, problem.psi.values[take])
    return ObstacleProblem(coarse_spec, f, psi)


def prolong(coarse: ObstacleProblem, u: np.ndarray, problem: ObstacleProblem) -> np.ndarray:
    """Multilinear interpolation of a coarse iterate, projected onto u >= psi with zero boundary values"""
    interpolator = RegularGridInterpolator(
        coarse.grid.axes, u.reshape(coarse.grid.n), bounds_error=False, fill_value=None,
    )
    points = np.stack([c.ravel() for c in problem.grid.coordinates], axis=-1)
    fine = np.maximum(interpolator(points), problem.psi.values.ravel())
    fine[problem.grid.boundary_mask.ravel()] = 0.0
    return fine


def _start(problem: ObstacleProblem) -> np.ndarray:
    u = np.maximum(problem.psi.values, 0.0)
    u[problem.grid.boundary_mask] = 0.0
    return u.ravel()


def newton_warm_start(
    problem: ObstacleProblem,
    u0: np.ndarray,
    tol: float,
    sequence: bool = False,
) -> Tuple[np.ndarray, int, float]:
    """
    Primal-dual active-set Newton on the bound-constrained discrete energy.

    Active nodes are pinned to psi; the Newton system on the free nodes,
    including the coupling to the pinned values, is solved with a sparse
    direct solver and the result projected onto u >= psi. A full step is
    taken when it lowers the complementarity residual or the energy,
    otherwise the step is halved under an Armijo energy test. Stops at
    residual <= tol / 10, when no step is accepted, or when the active set
    repeats without progress.

    With ``sequence`` set, the problem is first solved on the grid with every
    other node (recursively) and the interpolated result replaces ``u0``. The
    contact front then starts within a few nodes of its final position, and the
    active set, which releases contact only at the front, needs few steps.
    Steps on all levels are counted.
    """
    grid = problem.grid
    steps = 0
    if sequence:
        coarse = coarsen(problem)
        if coarse is not None:
            u_coarse, steps, coarse_residual = newton_warm_start(coarse, _start(coarse), tol, sequence=True)
            logger.debug(f"Coarse level n={coarse.grid.n}: {steps} steps, residual {coarse_residual:.3e}")
            u0 = prolong(coarse, u_coarse, problem)
    interior = interior_indices(grid)
    psi = problem.psi.values.ravel()[interior]
    scale = problem.scale
    # keeps a'(g) finite where g = delta = 0 and p < 2
    floor = (1e-12 * scale / max(grid.extent)) ** 2
    limit = max_newton_steps(problem)

    u = np.array(u0, dtype=float).ravel()
    r, residual = _residual(problem, u, interior)
    energy = discrete_energy(problem.spec, ScalarField(grid, u), problem.f)

    start_steps = steps
    previous = None
    while residual > 0.1 * tol and steps - start_steps < limit:
        gap = u[interior] - psi
        hessian = jacobian(problem.spec, ScalarField(grid, u), floor).tocsr()
        active = active_set(r, hessian.diagonal(), gap)
        free = ~active

        direction = np.zeros(interior.size)
        direction[active] = -gap[active]
        if np.any(free):
            h_free = hessian[free][:, free]
            diagonal = h_free.diagonal()
            shift = 1e-12 * float(np.max(np.abs(diagonal))) if diagonal.size else 0.0
            h_free = h_free + shift * sparse.identity(h_free.shape[0], format="csr")
            rhs = -r[free]
            if np.any(active):
                rhs -= hessian[free][:, active] @ direction[active]
            direction[free] = spsolve(h_free.tocsc(), rhs)
        if not np.all(np.isfinite(direction)):
            logger.warning(f"Newton direction not finite at step {steps}, handing over to sweeps")
            break

        slope = grid.cell_volume * float(np.dot(r, direction))
        accepted = False
        alpha = 1.0
        for attempt in range(MAX_LINE_SEARCH):
            trial = u.copy()
            trial[interior] = np.maximum(u[interior] + alpha * direction, psi)
            trial_r, trial_residual = _residual(problem, trial, interior)
            trial_energy = discrete_energy(problem.spec, ScalarField(grid, trial), problem.f)
            if not np.isfinite(trial_residual):
                alpha *= 0.5
                continue
            if attempt == 0 and (trial_residual < residual or trial_energy < energy):
                accepted = True
                break
            decrease = trial_energy <= energy + ARMIJO * alpha * min(slope, 0.0)
            if trial_residual <= 0.5 * residual or (decrease and trial_energy < energy):
                accepted = True
                break
            alpha *= 0.5

        if not accepted:
            logger.debug(f"Newton line search stalled at step {steps}, residual {residual:.3e}")
            break

        stalled = previous is not None and np.array_equal(active, previous) and trial_residual >= residual
        u, r, residual, energy = trial, trial_r, trial_residual, trial_energy
        previous = active
        steps += 1
        logger.debug(f"Newton step {steps}: alpha {alpha:.3g}, active {int(np.sum(active))}, residual {residual:.3e}")
        if stalled:
            logger.debug(f"Active set unchanged without progress at step {steps}")
            break

    return u, steps, residual
