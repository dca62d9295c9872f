import math

import numpy as np
import pytest

from core.free_boundary.coincidence import coincidence_set
from core.grid.grid import make_grid
from core.operator.assembly import apply_a
from core.operator.flux import p_laplacian
from core.solver.newton import active_set, coarsen, max_newton_steps, newton_warm_start, prolong
from core.solver.problem import ObstacleProblem, ProblemError
from core.solver.vi_solver import complementarity_residual, default_tolerance, solve_unconstrained, solve_vi
from core.varexp.exponent import ExponentField
from schema import SolverMethod


def test_negative_data_rests_on_zero_obstacle(laplacian):
    problem = laplacian(33, -1.0, 0.0)
    report = solve_vi(problem)
    assert report.converged
    np.testing.assert_allclose(report.u.values, 0.0, atol=1e-12)
    contact = coincidence_set(report.u, problem.psi, tol=report.tol)
    np.testing.assert_array_equal(contact.mask, problem.grid.interior_mask)


def test_positive_data_leaves_zero_obstacle(laplacian):
    problem = laplacian(33, 1.0, 0.0)
    report = solve_vi(problem)
    x = problem.grid.coordinates[0]
    assert report.converged
    np.testing.assert_allclose(report.u.values, x * (1 - x) / 2, atol=1e-8)
    assert coincidence_set(report.u, problem.psi, tol=report.tol).is_empty()


def test_analytic_contact_interval(analytic_problem, analytic_report):
    a = math.sqrt(0.2 / 8)
    grid = analytic_problem.grid
    h = grid.h[0]
    contact = coincidence_set(analytic_report.u, analytic_problem.psi, tol=analytic_report.tol)
    nodes = grid.axes[0][contact.mask]
    assert analytic_report.converged
    assert nodes[0] == pytest.approx(a, abs=2 * h)
    assert nodes[-1] == pytest.approx(1 - a, abs=2 * h)

    # u = 4 (x - a)^2 - 0.1 off the contact set
    x = grid.axes[0]
    outside = x < a - 2 * h
    np.testing.assert_allclose(analytic_report.u.values[outside], 4 * (x[outside] - a) ** 2 - 0.1, atol=4 * h)


def test_solution_of_symmetric_problem_is_symmetric():
    grid = make_grid(1, 65)
    spec = p_laplacian(ExponentField.constant(grid, 1.6), delta=1e-8)
    report = solve_vi(ObstacleProblem(spec, grid.full(-8.0), grid.full(-0.1)))
    assert report.converged
    np.testing.assert_allclose(report.u.values, report.u.values[::-1], atol=1e-8)


def test_unconstrained_solves(laplacian):
    grid = make_grid(1, 33)
    spec = p_laplacian(ExponentField.constant(grid, 2.0), delta=0.0)
    x = grid.coordinates[0]

    report = solve_unconstrained(spec, grid.full(2.0))
    assert report.converged
    np.testing.assert_allclose(report.u.values, x * (1 - x), atol=1e-8)

    assert solve_unconstrained(spec, grid.zeros()).u.max_abs() == 0.0


def test_complementarity_residual_of_exact_solutions(laplacian):
    problem = laplacian(33, 1.0, 0.0)
    x = problem.grid.coordinates[0]
    exact = problem.grid.zeros().with_values(x * (1 - x) / 2)
    assert complementarity_residual(problem, exact) <= default_tolerance(problem.f)

    resting = laplacian(33, -1.0, 0.0)
    assert complementarity_residual(resting, resting.psi) == 0.0


def test_complementarity_residual_reports_obstacle_violation(laplacian):
    problem = laplacian(33, -1.0, 0.0)
    values = np.zeros(problem.grid.n)
    values[5] = -0.3
    assert complementarity_residual(problem, problem.grid.zeros().with_values(values)) >= 0.3


def test_residual_contract_on_variable_exponent(variable_problem, variable_report):
    assert variable_report.converged
    assert variable_report.complementarity_residual <= variable_report.tol
    u = variable_report.u.values
    assert np.all(u >= variable_problem.psi.values - 1e-14)
    assert np.all(u[variable_problem.grid.boundary_mask] == 0.0)
    au = apply_a(variable_problem.spec, variable_report.u).au.values
    interior = variable_problem.grid.interior_mask
    assert np.all(au[interior] - variable_problem.f.values[interior] >= -variable_report.tol)


def test_comparison_principle(variable_problem, variable_report):
    larger = variable_problem.with_f(variable_problem.f.with_values(variable_problem.f.values + 0.5))
    report = solve_vi(larger)
    assert report.converged
    assert np.all(variable_report.u.values <= report.u.values + 1e-8)


def test_two_initial_iterates_agree(variable_problem, variable_report):
    grid = variable_problem.grid
    x, y = grid.coordinates
    start = grid.zeros().with_values(0.2 * np.sin(np.pi * x) * np.sin(np.pi * y))
    report = solve_vi(variable_problem, initial=start)
    assert report.converged
    assert np.max(np.abs(report.u.values - variable_report.u.values)) <= 10 * variable_report.tol


def test_two_initial_iterates_agree_on_analytic_case(analytic_problem, analytic_report):
    report = solve_vi(analytic_problem, initial=analytic_problem.grid.full(0.3))
    assert np.max(np.abs(report.u.values - analytic_report.u.values)) <= 10 * analytic_report.tol


def test_sweeps_alone_converge(laplacian):
    problem = laplacian(33, -8.0, -0.1)
    report = solve_vi(problem, method=SolverMethod.PGS)
    assert report.converged
    assert report.newton_steps == 0
    reference = solve_vi(problem)
    np.testing.assert_allclose(report.u.values, reference.u.values, atol=1e-8)


def test_warm_start_is_reported(variable_report):
    assert variable_report.newton_steps > 0
    assert variable_report.diagnostics["method"] == "newton-pgs"
    assert set(variable_report.summary()) >= {"iterations", "complementarity_residual", "converged", "tol"}


def test_non_convergence_is_reported_not_raised(variable_problem):
    report = solve_vi(variable_problem, method="pgs", max_iter=1)
    assert not report.converged
    assert report.iterations == 1
    assert report.complementarity_residual > report.tol


def test_invalid_arguments(variable_problem, grid_1d):
    with pytest.raises(ValueError):
        solve_vi(variable_problem, tol=0.0)
    with pytest.raises(ValueError):
        solve_vi(variable_problem, max_iter=0)
    with pytest.raises(ValueError):
        solve_vi(variable_problem, initial=grid_1d.zeros())


def test_obstacle_must_be_nonpositive_on_boundary(grid_1d):
    spec = p_laplacian(ExponentField.constant(grid_1d, 2.0))
    with pytest.raises(ProblemError):
        ObstacleProblem(spec, grid_1d.zeros(), grid_1d.full(0.1))


def test_problem_parts_share_a_grid(grid_1d, grid_2d):
    spec = p_laplacian(ExponentField.constant(grid_1d, 2.0))
    with pytest.raises(ProblemError):
        ObstacleProblem(spec, grid_2d.zeros(), grid_1d.zeros())


def test_problem_scale(laplacian):
    problem = laplacian(17, -8.0, -0.1)
    assert problem.scale == pytest.approx(9.0)
    assert problem.f_sup == 8.0


def test_active_set_marks_nodes_whose_step_crosses_the_obstacle():
    r = np.array([8.0, 8.0, -1.0, 0.5])
    diagonal = np.full(4, 100.0)
    gap = np.array([0.0, 0.1, 0.0, 0.001])
    np.testing.assert_array_equal(active_set(r, diagonal, gap), [True, False, False, True])


@pytest.mark.parametrize("n", [129, 513])
def test_warm_start_steps_do_not_grow_with_grid(laplacian, n):
    problem = laplacian(n, -8.0, -0.1)
    u0 = np.zeros(problem.grid.size)
    u, steps, residual = newton_warm_start(problem, u0, default_tolerance(problem.f), sequence=True)
    assert steps <= 60
    assert residual <= default_tolerance(problem.f)
    assert np.all(u >= problem.psi.values.ravel())


def test_coarsen_keeps_every_other_node(laplacian):
    problem = laplacian(129, -8.0, -0.1)
    coarse = coarsen(problem)
    assert coarse.grid.n == (65,)
    assert coarse.grid.extent == problem.grid.extent
    np.testing.assert_array_equal(coarse.psi.values, problem.psi.values[::2])
    np.testing.assert_array_equal(coarse.spec.p.values, problem.spec.p.values[::2])


def test_coarsen_stops_at_small_or_odd_grids(laplacian):
    assert coarsen(laplacian(33, -8.0, -0.1)) is None
    assert coarsen(laplacian(100, -8.0, -0.1)) is None


def test_prolonged_start_is_admissible(laplacian):
    problem = laplacian(129, -8.0, -0.1)
    coarse = coarsen(problem)
    u_coarse, _, _ = newton_warm_start(coarse, np.zeros(coarse.grid.size), default_tolerance(coarse.f))
    u = prolong(coarse, u_coarse, problem)
    assert u.shape == (problem.grid.size,)
    assert np.all(u >= problem.psi.values.ravel())
    assert u[0] == 0.0 and u[-1] == 0.0
    np.testing.assert_allclose(u[::2], np.maximum(u_coarse, coarse.psi.values), atol=1e-12)


def test_warm_start_step_cap_scales_with_grid(laplacian):
    assert max_newton_steps(laplacian(33, -8.0, -0.1)) == 100
    assert max_newton_steps(laplacian(2049, -8.0, -0.1)) == 2049


def test_obstacle_comparison(laplacian):
    lower = solve_vi(laplacian(65, -8.0, -0.1))
    upper = solve_vi(laplacian(65, -8.0, -0.05))
    assert lower.converged and upper.converged
    assert np.all(lower.u.values <= upper.u.values + 1e-10)


def test_obstacle_comparison_on_variable_exponent(variable_problem, variable_report):
    raised = variable_problem.psi.with_values(variable_problem.psi.values + 0.02 * variable_problem.grid.interior_mask)
    report = solve_vi(ObstacleProblem(variable_problem.spec, variable_problem.f, raised))
    assert report.converged
    assert np.all(variable_report.u.values <= report.u.values + 1e-8)
