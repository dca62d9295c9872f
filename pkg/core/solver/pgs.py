import logging
import math
from typing import List, Tuple

import numpy as np
from scipy.optimize import brentq

from core.operator.assembly import interior_indices
from core.solver.problem import ObstacleProblem, SolverDivergenceError

logger = logging.getLogger("pgs")

# (lower neighbour, upper neighbour, 1/h, (p_lower_face - 2)/2, (p_upper_face - 2)/2)
Term = Tuple[int, int, float, float, float]

MAX_BRACKET_DOUBLINGS = 200


def build_stencil(problem: ObstacleProblem) -> List[Tuple[int, List[Term]]]:
    """Neighbour indices, spacings and face exponents for every interior node"""
    grid = problem.grid
    strides = [int(np.prod(grid.n[axis + 1:])) for axis in range(grid.dim)]
    face_exponents = [problem.spec.p.face_values(axis).ravel() for axis in range(grid.dim)]
    face_index = [np.arange(int(np.prod(grid.face_shape(axis)))).reshape(grid.face_shape(axis)) for axis in range(grid.dim)]

    stencil = []
    for node in interior_indices(grid).tolist():
        position = np.unravel_index(node, grid.n)
        terms: List[Term] = []
        for axis in range(grid.dim):
            lower_face = list(position)
            lower_face[axis] -= 1
            upper_face = list(position)
            e_lower = (face_exponents[axis][face_index[axis][tuple(lower_face)]] - 2.0) / 2.0
            e_upper = (face_exponents[axis][face_index[axis][tuple(upper_face)]] - 2.0) / 2.0
            terms.append((node - strides[axis], node + strides[axis], 1.0 / grid.h[axis], float(e_lower), float(e_upper)))
        stencil.append((node, terms))
    return stencil


class ProjectedGaussSeidel:
    """
    Projected nonlinear Gauss-Seidel for the discrete obstacle problem.

    Each interior value is replaced by the root of its monotone local residual
    (neighbours frozen) projected onto [psi_i, inf). A symmetric sweep visits
    the interior nodes in lexicographic order and then in reverse.
    """

    def __init__(self, problem: ObstacleProblem, tol: float):
        """Initialize the sweep for a problem and residual tolerance"""
        self.problem = problem
        self.stencil = build_stencil(problem)
        self.f = problem.f.values.ravel().tolist()
        self.psi = problem.psi.values.ravel().tolist()
        self.delta_sq = problem.spec.delta ** 2
        self.linear = problem.spec.p.is_constant() and problem.spec.p.p_min == 2.0
        self.f_sup = problem.f_sup

        grid = problem.grid
        self.h_sq = grid.h_min ** 2
        self.xtol = max(1e-3 * tol * self.h_sq / (2 * grid.dim), 1e-300)
        self.rtol = 4.0 * np.finfo(float).eps
        self.logger = logging.getLogger("pgs")

    def symmetric_sweep(self, u: List[float], sweep: int):
        self.sweep(u, self.stencil, sweep)
        self.sweep(u, reversed(self.stencil), sweep)

    def sweep(self, u: List[float], order, sweep: int):
        """In-place projected sweep over ``order``"""
        solve = self._solve_linear if self.linear else self._solve_nonlinear
        for node, terms in order:
            value = solve(u, node, terms)
            if not math.isfinite(value):
                raise SolverDivergenceError("Non-finite iterate", sweep, node)
            u[node] = value

    def _solve_linear(self, u: List[float], node: int, terms: List[Term]) -> float:
        diagonal = 0.0
        rhs = self.f[node]
        for lower, upper, inv_h, _, _ in terms:
            weight = inv_h * inv_h
            diagonal += 2.0 * weight
            rhs += (u[lower] + u[upper]) * weight
        return max(rhs / diagonal, self.psi[node])

    def _solve_nonlinear(self, u: List[float], node: int, terms: List[Term]) -> float:
        f_node = self.f[node]
        delta_sq = self.delta_sq

        def residual(v: float) -> float:
            total = -f_node
            for lower, upper, inv_h, e_lower, e_upper in terms:
                g = (v - u[lower]) * inv_h
                s = g * g + delta_sq
                if s > 0.0:
                    total += g * s ** e_lower * inv_h
                g = (u[upper] - v) * inv_h
                s = g * g + delta_sq
                if s > 0.0:
                    total -= g * s ** e_upper * inv_h
            return total

        psi_node = self.psi[node]
        bound = abs(u[node]) + self.f_sup * self.h_sq + 1.0

        if psi_node > -bound:
            if residual(psi_node) >= 0.0:
                return psi_node
            lo = psi_node
        else:
            lo = -bound
            doublings = 0
            while residual(lo) > 0.0:
                lo *= 2.0
                doublings += 1
                if doublings > MAX_BRACKET_DOUBLINGS:
                    return math.nan

        hi = bound
        doublings = 0
        while residual(hi) < 0.0:
            hi *= 2.0
            doublings += 1
            if doublings > MAX_BRACKET_DOUBLINGS:
                return math.nan

        root = brentq(residual, lo, hi, xtol=self.xtol, rtol=self.rtol)
        return max(root, psi_node)
