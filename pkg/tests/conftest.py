import textwrap

import numpy as np
import pytest

from core.grid.grid import make_grid
from core.operator.flux import p_laplacian
from core.solver.problem import ObstacleProblem
from core.solver.vi_solver import solve_vi
from core.varexp.exponent import ExponentField


def _laplacian_problem(n: int, f: float, psi: float, dim: int = 1) -> ObstacleProblem:
    grid = make_grid(dim, n)
    spec = p_laplacian(ExponentField.constant(grid, 2.0), delta=0.0)
    return ObstacleProblem(spec, grid.full(f), grid.full(psi))


@pytest.fixture(scope="session")
def laplacian():
    """Factory for p = 2, delta = 0 problems with constant f and psi"""
    return _laplacian_problem


@pytest.fixture
def grid_1d():
    return make_grid(1, 65)


@pytest.fixture
def grid_2d():
    return make_grid(2, 17)


@pytest.fixture(scope="session")
def analytic_problem():
    """1D, p = 2, f = -8, psi = -0.1 on 129 nodes"""
    return _laplacian_problem(129, -8.0, -0.1)


@pytest.fixture(scope="session")
def analytic_report(analytic_problem):
    return solve_vi(analytic_problem)


@pytest.fixture(scope="session")
def variable_problem():
    """2D, p = 1.5 + 0.4 x1, smooth obstacle below zero on the boundary, piecewise data"""
    grid = make_grid(2, 17)
    x, y = grid.coordinates
    p = ExponentField.affine(grid, 1.5, 0.4, axis=0)
    spec = p_laplacian(p, delta=1e-8)
    psi = grid.zeros().with_values(-0.05 + 0.15 * np.maximum(0.0, 1.0 - ((x - 0.5) ** 2 + (y - 0.5) ** 2) / 0.09))
    f = grid.zeros().with_values(np.where(x < 0.5, -2.0, 1.0))
    return ObstacleProblem(spec, f, psi)


@pytest.fixture(scope="session")
def variable_report(variable_problem):
    return solve_vi(variable_problem)


@pytest.fixture
def isolated_output(tmp_path, monkeypatch):
    """Output root in tmp_path and the run ledger disabled"""
    root = tmp_path / "output"
    monkeypatch.setenv("OBSTACLE_OUTPUT_DIR", str(root))
    monkeypatch.setenv("OBSTACLE_DATABASE_URL", "none")
    return root


@pytest.fixture
def write_config(tmp_path):
    """Write a config file from dedented text and return its path"""
    def _write(text: str, name: str = "experiment.cfg") -> str:
        path = tmp_path / name
        path.write_text(textwrap.dedent(text), encoding="utf-8")
        return str(path)
    return _write


ANALYTIC_CONFIG = """
    grid.dim = 1
    grid.n = 129
    exponent.kind = constant
    exponent.value = 2
    flux.delta = 0
    data.kind = constant
    data.value = -8
    obstacle.kind = constant
    obstacle.value = -0.1
    run.preset = ls-audit
    run.delta_f = -1
    run.lam = 8
"""


@pytest.fixture
def analytic_config(write_config):
    return write_config(ANALYTIC_CONFIG)
