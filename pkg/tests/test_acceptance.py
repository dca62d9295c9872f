import csv
import math
import os

import numpy as np
import pytest

from core.free_boundary.coincidence import coincidence_set
from core.pipelines.runner import ExperimentRunner
from core.solver.vi_solver import solve_vi
from schema import ExitCode, PresetName

CONFIG_DIR = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "configs")

pytestmark = pytest.mark.slow


def _run(name, preset=None, out=None):
    return ExperimentRunner().run_file(os.path.join(CONFIG_DIR, name), out=out, preset=preset)


def _rows(path):
    with open(path, encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        header = [cell.split(" [")[0] for cell in next(reader)]
        return [dict(zip(header, row)) for row in reader]


@pytest.mark.parametrize(
    "name, preset",
    [
        ("analytic_1d.cfg", PresetName.LS_AUDIT),
        ("analytic_1d.cfg", PresetName.SOLVE),
        ("variable_2d.cfg", PresetName.LS_AUDIT),
        ("variable_2d.cfg", PresetName.EQUATION_AUDIT),
        ("variable_2d.cfg", PresetName.CONTRACTION),
        ("variable_2d.cfg", PresetName.EXPONENT_REPORT),
        ("variable_2d.cfg", PresetName.STRUCTURE_AUDIT),
        ("singular_chain.cfg", PresetName.CHAIN),
    ],
)
def test_configured_instances_pass(isolated_output, name, preset):
    outcome = _run(name, preset)
    assert outcome.exit_code == ExitCode.PASSED, [check for check in outcome.checks if not check.passed]


def test_analytic_coincidence_stability(isolated_output):
    outcome = _run("analytic_1d.cfg", PresetName.STABILITY)
    assert outcome.exit_code == ExitCode.PASSED
    row = _rows(os.path.join(outcome.out_dir, "stability.csv"))[0]
    analytic = 2 * (math.sqrt(0.2 / 8) - math.sqrt(0.2 / 9))
    assert float(row["sym_diff_measure"]) == pytest.approx(analytic, abs=2.0 / 1024)
    assert float(row["sym_diff_measure"]) <= 1.0 / 8.0


def test_manufactured_second_order(isolated_output):
    outcome = _run("manufactured.cfg")
    assert outcome.exit_code == ExitCode.PASSED
    orders = [float(row["order"]) for row in _rows(os.path.join(outcome.out_dir, "order.csv")) if row["order"]]
    assert len(orders) == 3
    assert min(orders) >= 1.8


def test_singular_chain_estimates(isolated_output):
    outcome = _run("singular_chain.cfg")
    rows = _rows(os.path.join(outcome.out_dir, "chain.csv"))
    distances = [float(row["in_measure"]) for row in rows[1:]]
    assert distances[-1] <= distances[0] / 3.0
    assert all(math.isfinite(float(row["modular_u"])) for row in rows)


def test_full_size_reruns_are_identical(isolated_output, tmp_path):
    first = _run("variable_2d.cfg", PresetName.LS_AUDIT, out=str(tmp_path / "a"))
    second = _run("variable_2d.cfg", PresetName.LS_AUDIT, out=str(tmp_path / "b"))
    for path in first.artifacts:
        twin = os.path.join(second.out_dir, os.path.basename(path))
        with open(path, "rb") as a, open(twin, "rb") as b:
            assert a.read() == b.read()


def test_analytic_oracle_at_full_resolution(laplacian):
    problem = laplacian(1025, -8.0, -0.1)
    report = solve_vi(problem)
    assert report.converged
    assert report.wall_time < 5.0

    a = math.sqrt(0.2 / 8)
    grid = problem.grid
    h = grid.h[0]
    x = grid.axes[0]
    contact = coincidence_set(report.u, problem.psi, tol=report.tol)
    nodes = x[contact.mask]
    assert nodes[0] == pytest.approx(a, abs=2 * h)
    assert nodes[-1] == pytest.approx(1 - a, abs=2 * h)

    exact = np.where((x >= a) & (x <= 1 - a), -0.1, -0.1 + 4 * np.minimum(x - a, 1 - a - x) ** 2)
    assert np.max(np.abs(report.u.values - exact)) <= 1e-3
