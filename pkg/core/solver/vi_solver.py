import logging
import time
from typing import Optional, Union

import numpy as np

from core.grid.grid import ScalarField
from core.operator.assembly import apply_a
from core.operator.flux import FluxSpec
from core.solver.newton import newton_warm_start
from core.solver.pgs import ProjectedGaussSeidel
from core.solver.problem import ObstacleProblem, SolveReport, SolverDivergenceError
from schema import SolverMethod

logger = logging.getLogger("vi_solver")

DEFAULT_MAX_ITER = 1_000_000
# psi for unconstrained solves sits this many multiples of (1 + sup|f|) below zero
UNCONSTRAINED_DEPTH = 1e30


def default_tolerance(f: ScalarField) -> float:
    return 1e-10 * (1.0 + f.max_abs())


def complementarity_residual(problem: ObstacleProblem, u: ScalarField) -> float:
    """max over interior nodes of |min(u - psi, Au - f)|"""
    au = apply_a(problem.spec, u).au.values
    interior = problem.grid.interior_mask
    gap = u.values[interior] - problem.psi.values[interior]
    r = au[interior] - problem.f.values[interior]
    return float(np.max(np.abs(np.minimum(gap, r))))


def _initial_iterate(problem: ObstacleProblem, initial: Optional[ScalarField]) -> np.ndarray:
    if initial is None:
        u = np.maximum(problem.psi.values, 0.0)
    else:
        if initial.grid != problem.grid:
            raise ValueError("Initial iterate lives on a different grid")
        u = np.maximum(initial.values, problem.psi.values)
    u = np.array(u, dtype=float)
    u[problem.grid.boundary_mask] = 0.0
    return u.ravel()


def solve_vi(
    problem: ObstacleProblem,
    tol: Optional[float] = None,
    max_iter: int = DEFAULT_MAX_ITER,
    method: Union[SolverMethod, str] = SolverMethod.NEWTON_PGS,
    initial: Optional[ScalarField] = None,
) -> SolveReport:
    """
    Solve u >= psi, Au - f >= 0, (u - psi)(Au - f) = 0 at interior nodes, u = 0 on the boundary.

    Convergence is declared when the complementarity residual is <= ``tol`` after
    a symmetric projected Gauss-Seidel sweep; ``max_iter`` bounds the number of
    sweeps. The newton-pgs method runs an active-set Newton warm start first.
    """
    method = SolverMethod(method)
    tol = default_tolerance(problem.f) if tol is None else tol
    if tol <= 0:
        raise ValueError(f"Tolerance must be positive, got {tol}")
    if max_iter < 1:
        raise ValueError(f"max_iter must be at least 1, got {max_iter}")

    grid = problem.grid
    start = time.perf_counter()
    logger.info(f"Solving obstacle problem on grid n={grid.n} with {method.value}, tol {tol:.3e}")

    u = _initial_iterate(problem, initial)
    newton_steps = 0
    newton_residual = None
    if method == SolverMethod.NEWTON_PGS:
        u, newton_steps, newton_residual = newton_warm_start(problem, u, tol, sequence=initial is None)
        logger.debug(f"Newton warm start: {newton_steps} steps, residual {newton_residual:.3e}")

    pgs = ProjectedGaussSeidel(problem, tol)
    values = u.tolist()
    residual = np.inf
    sweeps = 0
    for sweeps in range(1, max_iter + 1):
        pgs.symmetric_sweep(values, sweeps)
        residual = complementarity_residual(problem, ScalarField(grid, np.array(values)))
        if np.isnan(residual):
            logger.error(f"Residual became NaN at sweep {sweeps}")
            raise SolverDivergenceError("NaN residual", sweeps, -1)
        if residual <= tol:
            break
        if sweeps % 1000 == 0:
            logger.debug(f"Sweep {sweeps}: residual {residual:.3e}")

    converged = residual <= tol
    u_field = ScalarField(grid, np.array(values))
    au = apply_a(problem.spec, u_field).au
    wall_time = time.perf_counter() - start

    if converged:
        logger.info(f"Converged after {sweeps} sweeps ({newton_steps} Newton steps), residual {residual:.3e}, {wall_time:.2f}s")
    else:
        logger.warning(f"No convergence after {sweeps} sweeps: residual {residual:.3e} > tol {tol:.3e}")

    return SolveReport(
        u=u_field,
        au=au,
        iterations=sweeps,
        complementarity_residual=float(residual),
        converged=bool(converged),
        wall_time=wall_time,
        tol=tol,
        newton_steps=newton_steps,
        diagnostics={"method": method.value, "newton_residual": newton_residual},
    )


def unconstrained_problem(spec: FluxSpec, f: ScalarField) -> ObstacleProblem:
    """An obstacle far below any attainable value"""
    depth = UNCONSTRAINED_DEPTH * (1.0 + f.max_abs())
    return ObstacleProblem(spec, f, f.grid.full(-depth))


def solve_unconstrained(
    spec: FluxSpec,
    f: ScalarField,
    tol: Optional[float] = None,
    max_iter: int = DEFAULT_MAX_ITER,
    method: Union[SolverMethod, str] = SolverMethod.NEWTON_PGS,
    initial: Optional[ScalarField] = None,
) -> SolveReport:
    """Au = f with u = 0 on the boundary; the residual reported is sup|Au - f|"""
    return solve_vi(unconstrained_problem(spec, f), tol, max_iter, method, initial)
