import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from core.entropy.truncation import approximate_data
from core.grid.grid import RegionMask, ScalarField, measure
from core.operator.flux import FluxSpec
from core.solver.problem import ObstacleProblem, SolveReport
from core.solver.vi_solver import DEFAULT_MAX_ITER, solve_vi
from core.varexp.exponent import derived_exponents, scaled
from core.varexp.spaces import (
    default_t_levels,
    gradient_levels,
    gradient_marcinkiewicz_bound,
    gradient_modular,
    marcinkiewicz_bound,
    modular,
)
from schema import ChainRow, SolverMethod

logger = logging.getLogger("approximation")

# modulars and Marcinkiewicz bounds are taken strictly below q0 and q1
EXPONENT_SAFETY = 0.95


def in_measure_distance(u: ScalarField, v: ScalarField, s: float) -> float:
    """meas{|u - v| > s}"""
    if not s > 0:
        raise ValueError(f"Threshold must be positive, got {s}")
    if u.grid != v.grid:
        raise ValueError("Fields live on different grids")
    return measure(RegionMask(u.grid, np.abs(u.values - v.values) > s))


@dataclass(frozen=True)
class ApproximationChain:
    levels: List[float]
    data: List[ScalarField]
    reports: List[SolveReport]
    rows: List[ChainRow]
    s: float

    def distances(self) -> List[float]:
        """In-measure distances between consecutive levels"""
        return [row.in_measure for row in self.rows[1:]]


def run_approximation_chain(
    spec: FluxSpec,
    f: ScalarField,
    psi: ScalarField,
    n_levels: Sequence[float],
    s: float = 1e-2,
    tol: Optional[float] = None,
    max_iter: int = DEFAULT_MAX_ITER,
    method: SolverMethod = SolverMethod.NEWTON_PGS,
    t_levels: Optional[Sequence[float]] = None,
    workers: int = 1,
) -> ApproximationChain:
    """
    Solve the obstacle problem with data T_n(f) for every n and record
    convergence in measure along the chain together with the modular and
    Marcinkiewicz diagnostics at 0.95 q0 (for u) and 0.95 q1 (for grad u).
    """
    levels = [float(n) for n in n_levels]
    if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
        raise ValueError("Chain levels must be a non-empty increasing sequence")

    data = [approximate_data(f, n) for n in levels]
    problems = [ObstacleProblem(spec, f_n, psi) for f_n in data]

    def solve(problem: ObstacleProblem) -> SolveReport:
        return solve_vi(problem, tol=tol, max_iter=max_iter, method=method)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            reports = list(executor.map(solve, problems))
    else:
        reports = [solve(problem) for problem in problems]

    for n, report in zip(levels, reports):
        if not report.converged:
            logger.warning(f"Chain level n={n:g} did not converge (residual {report.complementarity_residual:.3e})")

    p = spec.p
    if p.p_max < p.N:
        derived = derived_exponents(p)
        q0 = scaled(derived.q0, EXPONENT_SAFETY)
        q1 = scaled(derived.q1, EXPONENT_SAFETY)
    else:
        logger.warning(f"sup p = {p.p_max:.4g} >= N = {p.N}: modular diagnostics skipped")
        q0 = q1 = None

    last = reports[-1].u
    levels_u = default_t_levels(last.values) if t_levels is None else t_levels
    levels_grad = gradient_levels(last, p, q0) if q0 is not None else None

    rows = []
    for index, (n, report) in enumerate(zip(levels, reports)):
        u = report.u
        distance = in_measure_distance(u, reports[index - 1].u, s) if index > 0 else None
        if q0 is not None:
            modular_u = modular(u, q0)
            modular_grad = gradient_modular(u, q1)
            bound = marcinkiewicz_bound(u, q0, levels_u)
            grad_bound = gradient_marcinkiewicz_bound(u, p, q0, levels_grad)
        else:
            modular_u = modular_grad = bound = grad_bound = math.nan
        rows.append(ChainRow(
            n=n,
            iterations=report.iterations,
            residual=report.complementarity_residual,
            converged=report.converged,
            in_measure=distance,
            modular_u=modular_u,
            modular_grad=modular_grad,
            marcinkiewicz_m=bound,
            marcinkiewicz_grad_m=grad_bound,
        ))
        logger.info(f"Chain level n={n:g}: in-measure {distance}, M = {bound:.4g}")

    return ApproximationChain(levels=levels, data=data, reports=reports, rows=rows, s=s)
