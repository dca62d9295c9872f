import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np

from core.entropy.approximation import in_measure_distance
from core.free_boundary.coincidence import coincidence_set, xi_field
from core.grid.grid import RegionMask, ScalarField, integrate, measure, symmetric_difference
from core.operator.assembly import apply_a
from core.operator.flux import FluxSpec
from core.solver.problem import ObstacleProblem, SolveReport
from core.solver.vi_solver import solve_vi
from schema import ChiRow

logger = logging.getLogger("stability")


class NonDegeneracyError(ValueError):
    """Raised when f - A psi <= -lambda fails somewhere in the declared region"""

    def __init__(self, problem_index: int, node: int, value: float, lam: float):
        super().__init__(
            f"Problem {problem_index}: f - A psi = {value:.6g} > -lambda = {-lam:.6g} at node {node}"
        )
        self.problem_index = problem_index
        self.node = node
        self.value = value


@dataclass(frozen=True)
class StabilityReport:
    xi1: ScalarField
    xi2: ScalarField
    l1_data_distance: float
    l1_xi_distance: float
    passed: bool
    region: Optional[RegionMask] = None
    lam: Optional[float] = None
    sym_diff_measure: Optional[float] = None
    bound: Optional[float] = None
    reports: List[SolveReport] = field(default_factory=list)

    def summary(self) -> Dict[str, Any]:
        return {
            "l1_data_distance": self.l1_data_distance,
            "l1_xi_distance": self.l1_xi_distance,
            "lambda": self.lam,
            "sym_diff_measure": self.sym_diff_measure,
            "bound": self.bound,
            "passed": self.passed,
        }


def _l1(v: ScalarField) -> float:
    return integrate(v.with_values(np.abs(v.values)))


def _check_pair(problem1: ObstacleProblem, problem2: ObstacleProblem):
    if problem1.grid != problem2.grid:
        raise ValueError("Problems live on different grids")
    if not problem1.spec.matches(problem2.spec):
        raise ValueError("Problems must share the flux specification")
    if not np.array_equal(problem1.psi.values, problem2.psi.values):
        raise ValueError("Problems must share the obstacle")


def _solve_pair(problem1, problem2, solve_options):
    return solve_vi(problem1, **solve_options), solve_vi(problem2, **solve_options)


def contraction_check(
    problem1: ObstacleProblem,
    problem2: ObstacleProblem,
    tol: float = 1e-8,
    **solve_options,
) -> StabilityReport:
    """|xi1 - xi2|_1 <= |f1 - f2|_1 + tol for two data sets sharing psi"""
    _check_pair(problem1, problem2)
    report1, report2 = _solve_pair(problem1, problem2, solve_options)
    xi1 = xi_field(problem1, report1.u)
    xi2 = xi_field(problem2, report2.u)
    data_distance = _l1(problem1.f.with_values(problem1.f.values - problem2.f.values))
    xi_distance = _l1(xi1.with_values(xi1.values - xi2.values))
    passed = xi_distance <= data_distance + tol
    logger.info(f"Contraction: |xi1 - xi2|_1 = {xi_distance:.6g}, |f1 - f2|_1 = {data_distance:.6g}")
    return StabilityReport(
        xi1=xi1,
        xi2=xi2,
        l1_data_distance=data_distance,
        l1_xi_distance=xi_distance,
        passed=passed,
        reports=[report1, report2],
    )


def verify_non_degeneracy(problems: Sequence[ObstacleProblem], region: RegionMask, lam: float):
    """Raise with a witness node unless f_i - A psi <= -lambda on region for every problem"""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    for index, problem in enumerate(problems, start=1):
        a_psi = apply_a(problem.spec, problem.psi).au.values
        gap = (problem.f.values - a_psi).ravel()
        nodes = np.flatnonzero((region.mask & problem.grid.interior_mask).ravel())
        if nodes.size == 0:
            continue
        worst = nodes[int(np.argmax(gap[nodes]))]
        if gap[worst] > -lam:
            raise NonDegeneracyError(index, int(worst), float(gap[worst]), lam)


def stability_check(
    problem1: ObstacleProblem,
    problem2: ObstacleProblem,
    region: RegionMask,
    lam: float,
    tol: float = 1e-8,
    eps: Optional[float] = None,
    **solve_options,
) -> StabilityReport:
    """meas((I1 xor I2) within D) <= |f1 - f2|_1 / lambda, after verifying non-degeneracy on D"""
    _check_pair(problem1, problem2)
    verify_non_degeneracy([problem1, problem2], region, lam)

    report1, report2 = _solve_pair(problem1, problem2, solve_options)
    contact1 = coincidence_set(report1.u, problem1.psi, eps, report1.tol)
    contact2 = coincidence_set(report2.u, problem2.psi, eps, report2.tol)
    sym_diff = measure(symmetric_difference(contact1, contact2) & region)

    xi1 = xi_field(problem1, report1.u)
    xi2 = xi_field(problem2, report2.u)
    data_distance = _l1(problem1.f.with_values(problem1.f.values - problem2.f.values))
    bound = data_distance / lam
    passed = sym_diff <= bound + tol
    logger.info(f"Stability: meas(I1 xor I2) = {sym_diff:.6g}, bound {bound:.6g}")
    return StabilityReport(
        xi1=xi1,
        xi2=xi2,
        l1_data_distance=data_distance,
        l1_xi_distance=_l1(xi1.with_values(xi1.values - xi2.values)),
        passed=passed,
        region=region,
        lam=lam,
        sym_diff_measure=sym_diff,
        bound=bound,
        reports=[report1, report2],
    )


@dataclass(frozen=True)
class ProblemFamily:
    """Parameterized data and obstacles (f_n, psi_n) converging to (f, psi)"""
    spec: FluxSpec
    f: ScalarField
    psi: ScalarField
    f_at: Callable[[int], ScalarField]
    psi_at: Callable[[int], ScalarField]

    def limit(self) -> ObstacleProblem:
        return ObstacleProblem(self.spec, self.f, self.psi)

    def member(self, level: int) -> ObstacleProblem:
        return ObstacleProblem(self.spec, self.f_at(level), self.psi_at(level))


def obstacle_family(spec: FluxSpec, f: ScalarField, psi: ScalarField, perturbation: ScalarField) -> ProblemFamily:
    """psi_n = psi + perturbation / n with fixed data"""
    return ProblemFamily(
        spec=spec,
        f=f,
        psi=psi,
        f_at=lambda level: f,
        psi_at=lambda level: psi.with_values(psi.values + perturbation.values / level),
    )


def degenerate_nodes(problem: ObstacleProblem, eta: float) -> RegionMask:
    """Interior nodes where |A psi - f| < eta"""
    a_psi = apply_a(problem.spec, problem.psi).au.values
    return RegionMask(problem.grid, problem.grid.interior_mask & (np.abs(a_psi - problem.f.values) < eta))


def chi_convergence(
    family: ProblemFamily,
    levels: Sequence[int],
    q: float = 1.0,
    eta: float = 1e-6,
    s: float = 1e-2,
    eps: Optional[float] = None,
    **solve_options,
) -> List[ChiRow]:
    """
    |chi_{u_n = psi_n} - chi_{u = psi}|_q per level, which equals
    meas(I_n xor I)^(1/q) for characteristic functions.
    """
    if q < 1:
        raise ValueError(f"q must be at least 1, got {q}")

    limit_problem = family.limit()
    degenerate = degenerate_nodes(limit_problem, eta)
    if not degenerate.is_empty():
        logger.warning(f"{degenerate.count()} degenerate nodes with |A psi - f| < {eta:g}; hypotheses unmet")

    limit = solve_vi(limit_problem, **solve_options)
    limit_contact = coincidence_set(limit.u, limit_problem.psi, eps, limit.tol)

    rows = []
    for level in levels:
        problem = family.member(level)
        report = solve_vi(problem, **solve_options)
        contact = coincidence_set(report.u, problem.psi, eps, report.tol)
        sym_diff = measure(symmetric_difference(contact, limit_contact))
        indicator = contact.mask.astype(float) - limit_contact.mask.astype(float)
        distance = integrate(report.u.with_values(np.abs(indicator) ** q)) ** (1.0 / q)
        rows.append(ChiRow(
            level=int(level),
            distance=distance,
            sym_diff_measure=sym_diff,
            in_measure_to_limit=in_measure_distance(report.u, limit.u, s),
            degenerate_nodes=degenerate.count(),
            converged=report.converged and limit.converged,
        ))
        logger.info(f"chi convergence level {level}: distance {distance:.4g}")
    return rows
