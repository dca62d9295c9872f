import logging
import math
from typing import Optional, Tuple

import numpy as np

from core.grid.grid import ScalarField
from core.solver.pgs import build_stencil
from core.solver.problem import ObstacleProblem, SolverDivergenceError

logger = logging.getLogger("lcp")


def default_omega(problem: ObstacleProblem) -> float:
    """Optimal SOR factor of the model Laplacian, 2 / (1 + sin(pi h))"""
    return 2.0 / (1.0 + math.sin(math.pi * problem.grid.h_min / max(problem.grid.extent)))


def projected_sor(
    problem: ObstacleProblem,
    omega: Optional[float] = None,
    tol: float = 1e-13,
    max_sweeps: int = 100_000,
) -> Tuple[ScalarField, int]:
    """
    Projected SOR for the linear complementarity problem of p = 2:
    u >= psi, -Lap_h u - f >= 0 and their product vanishing.

    Stops when a sweep moves no value by more than ``tol``.
    """
    spec = problem.spec
    if not (spec.p.is_constant() and spec.p.p_min == 2.0):
        raise ValueError("Projected SOR is only defined for the constant exponent p = 2")
    omega = default_omega(problem) if omega is None else omega
    if not 0.0 < omega < 2.0:
        raise ValueError(f"omega must lie in (0, 2), got {omega}")

    stencil = build_stencil(problem)
    f = problem.f.values.ravel().tolist()
    psi = problem.psi.values.ravel().tolist()
    u = np.maximum(problem.psi.values, 0.0).ravel()
    u[problem.grid.boundary_mask.ravel()] = 0.0
    u = u.tolist()

    for sweep in range(1, max_sweeps + 1):
        change = 0.0
        for node, terms in stencil:
            diagonal = 0.0
            rhs = f[node]
            for lower, upper, inv_h, _, _ in terms:
                weight = inv_h * inv_h
                diagonal += 2.0 * weight
                rhs += (u[lower] + u[upper]) * weight
            value = max(u[node] + omega * (rhs / diagonal - u[node]), psi[node])
            if not math.isfinite(value):
                raise SolverDivergenceError("Non-finite SOR iterate", sweep, node)
            change = max(change, abs(value - u[node]))
            u[node] = value
        if change <= tol:
            logger.debug(f"Projected SOR converged after {sweep} sweeps")
            return ScalarField(problem.grid, np.array(u)), sweep

    logger.warning(f"Projected SOR stopped at {max_sweeps} sweeps")
    return ScalarField(problem.grid, np.array(u)), max_sweeps
