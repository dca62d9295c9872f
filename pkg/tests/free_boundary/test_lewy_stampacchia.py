import numpy as np

from core.free_boundary.lewy_stampacchia import default_ls_tolerance, lewy_stampacchia_check
from core.grid.grid import make_grid
from core.operator.flux import p_laplacian
from core.solver.problem import ObstacleProblem
from core.solver.vi_solver import solve_vi
from core.varexp.exponent import ExponentField


def test_obstacle_that_solves_its_own_problem():
    grid = make_grid(1, 33)
    x = grid.coordinates[0]
    spec = p_laplacian(ExponentField.constant(grid, 2.0), delta=0.0)
    problem = ObstacleProblem(spec, grid.zeros(), grid.zeros().with_values(0.25 - (x - 0.5) ** 2))
    report = solve_vi(problem)
    np.testing.assert_allclose(report.u.values, problem.psi.values, atol=1e-12)

    ls = lewy_stampacchia_check(problem, report.u)
    assert ls.passed
    assert ls.upper_violation <= ls.tolerance
    assert ls.excluded_nodes == 0


def test_bounds_with_zero_obstacle(laplacian):
    for f in (1.0, -1.0):
        problem = laplacian(33, f, 0.0)
        report = solve_vi(problem)
        ls = lewy_stampacchia_check(problem, report.u, exclude_collar=False)
        assert ls.lower_ok and ls.upper_ok


def test_bounds_hold_everywhere_on_analytic_case(analytic_problem, analytic_report):
    ls = lewy_stampacchia_check(analytic_problem, analytic_report.u, exclude_collar=False)
    assert ls.passed
    assert not ls.in_hypotheses


def test_collar_is_reported_separately(analytic_problem, analytic_report):
    ls = lewy_stampacchia_check(analytic_problem, analytic_report.u)
    assert ls.passed
    assert ls.excluded_nodes > 0
    assert ls.collar_lower_violation <= ls.tolerance


def test_variable_exponent_instance(variable_problem, variable_report):
    ls = lewy_stampacchia_check(variable_problem, variable_report.u)
    assert ls.in_hypotheses
    assert ls.passed


def test_default_tolerance(analytic_problem):
    # delta = 0 leaves only the data term
    assert default_ls_tolerance(analytic_problem) == 1e-6 * 9.0
