import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from core.grid.grid import Grid, ScalarField, face_weight, gradient, integrate
from core.entropy.truncation import truncate_values
from core.operator.assembly import face_fluxes
from core.solver.problem import ObstacleProblem
from schema import EntropyCertificate

logger = logging.getLogger("certificate")


class InadmissibleTestFunctionError(ValueError):
    """Raised when a test function dips below the obstacle"""

    def __init__(self, index: int, node: int, shortfall: float):
        super().__init__(f"Test function {index} lies below the obstacle at node {node} by {shortfall:.3e}")
        self.index = index
        self.node = node


@dataclass(frozen=True)
class EntropyTestFunction:
    id: str
    phi: ScalarField


def smooth_bump(grid: Grid, center: Sequence[float], width: float, height: float) -> ScalarField:
    """
    height * exp(-|x - c|^2 / (2 width^2)) * prod_k 4 x_k (L_k - x_k) / L_k^2

    The product factor makes the bump vanish on the boundary.
    """
    radius_sq = np.zeros(grid.n)
    envelope = np.ones(grid.n)
    for axis, coordinate in enumerate(grid.coordinates):
        length = grid.extent[axis]
        radius_sq = radius_sq + (coordinate - center[axis]) ** 2
        envelope = envelope * 4.0 * coordinate * (length - coordinate) / length ** 2
    values = height * np.exp(-radius_sq / (2.0 * width ** 2)) * envelope
    values[grid.boundary_mask] = 0.0
    return ScalarField(grid, values)


def make_test_set(problem: ObstacleProblem, u: ScalarField, count: int, seed: int = 0) -> List[EntropyTestFunction]:
    """
    psi^+ followed by ``count`` seeded members cycling through
    max(psi, bump), max(psi, T_h(u) + eps bump) and max(psi, T_h(u) - eps bump).
    """
    if count < 1:
        raise ValueError(f"count must be at least 1, got {count}")

    grid = problem.grid
    psi = problem.psi.values
    rng = np.random.default_rng(seed)
    u_sup = u.max_abs()
    psi_plus_sup = float(np.max(np.maximum(psi, 0.0)))
    size = min(grid.extent)

    test_set = [EntropyTestFunction("psi_plus", problem.psi.with_values(np.maximum(psi, 0.0)))]
    for k in range(count):
        center = [rng.uniform(0.0, length) for length in grid.extent]
        width = rng.uniform(0.05, 0.3) * size
        height = rng.uniform(-1.0, 1.0) * (1.0 + u_sup)
        bump = smooth_bump(grid, center, width, abs(height)).values

        kind = k % 3
        if kind == 0:
            test_set.append(EntropyTestFunction(f"bump_{k}", u.with_values(np.maximum(psi, np.sign(height) * bump))))
            continue

        # level h >= sup psi^+ keeps T_h(u) >= psi
        level = psi_plus_sup + rng.uniform(0.3, 1.0) * max(u_sup, 1e-12)
        epsilon = rng.uniform(0.01, 0.2)
        truncated = truncate_values(u.values, level)
        sign = 1.0 if kind == 1 else -1.0
        name = "truncation_plus" if kind == 1 else "truncation_minus"
        phi = np.maximum(psi, truncated + sign * epsilon * bump)
        phi[grid.boundary_mask] = np.maximum(psi[grid.boundary_mask], 0.0)
        test_set.append(EntropyTestFunction(f"{name}_{k}", u.with_values(phi)))
    return test_set


def default_certificate_levels(problem: ObstacleProblem, u: ScalarField) -> List[float]:
    top = max(u.max_abs(), problem.psi.max_abs(), 1e-12)
    return [0.1 * top, 0.5 * top, top, 2.0 * top + 1.0]


def entropy_certify(
    problem: ObstacleProblem,
    u: ScalarField,
    test_set: Sequence[EntropyTestFunction],
    t_levels: Optional[Sequence[float]] = None,
) -> List[EntropyCertificate]:
    """
    For every test function phi and level t:
    lhs = sum over faces of w_f a(x, grad u) . grad T_t(phi - u),
    rhs = integral of f T_t(phi - u).
    """
    grid = problem.grid
    scale = problem.scale
    for index, test in enumerate(test_set):
        if test.phi.grid != grid:
            raise InadmissibleTestFunctionError(index, -1, float("nan"))
        shortfall = problem.psi.values - test.phi.values
        worst = int(np.argmax(shortfall))
        if shortfall.ravel()[worst] > 1e-14 * scale:
            raise InadmissibleTestFunctionError(index, worst, float(shortfall.ravel()[worst]))

    levels = default_certificate_levels(problem, u) if t_levels is None else list(t_levels)
    flux = face_fluxes(problem.spec, u)
    weight = face_weight(grid)

    certificates = []
    for test in test_set:
        difference = test.phi.values - u.values
        for t in levels:
            if not t > 0:
                raise ValueError(f"Truncation level must be positive, got {t}")
            w = u.with_values(truncate_values(difference, t))
            grad_w = gradient(w)
            lhs = weight * sum(
                float(np.sum(q * g)) for q, g in zip(flux.components, grad_w.components)
            )
            rhs = integrate(w.with_values(problem.f.values * w.values))
            certificates.append(EntropyCertificate(test_function_id=test.id, t=float(t), lhs=lhs, rhs=rhs))

    worst_margin = min(c.margin for c in certificates)
    logger.info(f"Entropy certificates: {len(certificates)} pairs, worst margin {worst_margin:.3e}")
    return certificates


def entropy_tolerance(problem: ObstacleProblem, t: float) -> float:
    """1e-6 (1 + |f|_1) (1 + t)"""
    l1 = integrate(problem.f.with_values(np.abs(problem.f.values)))
    return 1e-6 * (1.0 + l1) * (1.0 + t)
