import logging
from typing import Optional

import numpy as np

from core.free_boundary.coincidence import coincidence_set, free_boundary_collar
from core.grid.grid import ScalarField
from core.operator.assembly import apply_a
from core.solver.problem import ObstacleProblem
from core.solver.vi_solver import default_tolerance
from core.varexp.exponent import validate_exponent
from schema import ExponentReport, LSReport

logger = logging.getLogger("lewy_stampacchia")


def default_ls_tolerance(problem: ObstacleProblem) -> float:
    """1e-6 (1 + sup|f|) + delta^(p_min - 1) * scale"""
    spec = problem.spec
    return 1e-6 * (1.0 + problem.f_sup) + spec.delta ** (spec.p.p_min - 1.0) * problem.scale


def _positive_max(values: np.ndarray) -> float:
    return max(0.0, float(np.max(values))) if values.size else 0.0


def lewy_stampacchia_check(
    problem: ObstacleProblem,
    u: ScalarField,
    tol: Optional[float] = None,
    exclude_collar: bool = True,
    eps: Optional[float] = None,
    exponent_report: Optional[ExponentReport] = None,
) -> LSReport:
    """
    f <= Au <= f + (A psi - f)^+ at interior nodes.

    Nodes in the free-boundary collar are left out of the pass decision when
    ``exclude_collar`` is set; their violations are reported separately.
    """
    tol = default_ls_tolerance(problem) if tol is None else tol
    grid = problem.grid
    f = problem.f.values
    au = apply_a(problem.spec, u).au.values
    a_psi = apply_a(problem.spec, problem.psi).au.values

    lower = f - au
    upper = au - f - np.maximum(a_psi - f, 0.0)

    interior = grid.interior_mask
    if exclude_collar:
        contact = coincidence_set(u, problem.psi, eps, default_tolerance(problem.f))
        collar = free_boundary_collar(contact).mask
    else:
        collar = np.zeros(grid.n, dtype=bool)
    kept = interior & ~collar

    report_exponent = validate_exponent(problem.spec.p) if exponent_report is None else exponent_report
    report = LSReport(
        lower_violation=_positive_max(lower[kept]),
        upper_violation=_positive_max(upper[kept]),
        tolerance=tol,
        collar_lower_violation=_positive_max(lower[collar]),
        collar_upper_violation=_positive_max(upper[collar]),
        excluded_nodes=int(np.count_nonzero(collar)),
        in_hypotheses=report_exponent.in_hypotheses,
    )
    if not report.in_hypotheses:
        logger.info("Exponent outside the regime of the two-sided bound; report is advisory")
    logger.info(
        f"Lewy-Stampacchia: lower {report.lower_violation:.3e}, upper {report.upper_violation:.3e}, tol {tol:.3e}"
    )
    return report
