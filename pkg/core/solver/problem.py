import logging
from dataclasses import dataclass, field
from typing import Any, Dict

import numpy as np

from core.grid.grid import Grid, ScalarField
from core.operator.flux import FluxSpec

logger = logging.getLogger("problem")


class ProblemError(ValueError):
    """Raised when an obstacle problem is inadmissible"""


class SolverDivergenceError(RuntimeError):
    """Raised when a sweep produces a non-finite value"""

    def __init__(self, message: str, sweep: int, node: int):
        super().__init__(f"{message} (sweep {sweep}, node {node})")
        self.sweep = sweep
        self.node = node


@dataclass(frozen=True)
class ObstacleProblem:
    """Flux, right-hand side f and obstacle psi on one grid"""
    spec: FluxSpec
    f: ScalarField
    psi: ScalarField

    def __post_init__(self):
        grid = self.spec.grid
        if self.f.grid != grid or self.psi.grid != grid:
            raise ProblemError("Flux, data and obstacle must share one grid")

        boundary = grid.boundary_mask
        violating = np.flatnonzero((self.psi.values > 0) & boundary)
        if violating.size:
            node = int(violating[0])
            raise ProblemError(
                f"Obstacle must be <= 0 on the boundary, got psi = {self.psi.values.ravel()[node]:.6g} at node {node}"
            )

    @property
    def grid(self) -> Grid:
        return self.spec.grid

    @property
    def f_sup(self) -> float:
        return self.f.max_abs()

    @property
    def scale(self) -> float:
        """1 + sup psi^+ + sup|f| diam^2"""
        diameter_sq = float(sum(length ** 2 for length in self.grid.extent))
        psi_plus = float(np.max(np.maximum(self.psi.values, 0.0)))
        return 1.0 + psi_plus + self.f_sup * diameter_sq

    def with_f(self, f: ScalarField) -> "ObstacleProblem":
        return ObstacleProblem(self.spec, f, self.psi)

    def with_psi(self, psi: ScalarField) -> "ObstacleProblem":
        return ObstacleProblem(self.spec, self.f, psi)


@dataclass(frozen=True)
class SolveReport:
    u: ScalarField
    au: ScalarField
    iterations: int
    complementarity_residual: float
    converged: bool
    wall_time: float
    tol: float
    newton_steps: int = 0
    diagnostics: Dict[str, Any] = field(default_factory=dict)

    def summary(self) -> Dict[str, Any]:
        return {
            "iterations": self.iterations,
            "newton_steps": self.newton_steps,
            "complementarity_residual": self.complementarity_residual,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "tol": self.tol,
        }
