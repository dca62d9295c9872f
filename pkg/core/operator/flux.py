import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from core.grid.grid import Grid, ScalarField
from core.varexp.exponent import ExponentField
from schema import FluxKind

logger = logging.getLogger("flux")

# delta defaults to this fraction of the largest domain extent
DEFAULT_DELTA_FACTOR = 1e-8


class FluxError(ValueError):
    """Raised when a flux specification violates its structure constraints"""


@dataclass(frozen=True, eq=False)
class FluxSpec:
    """
    Regularized p(x)-Laplacian flux a(x, xi) = (|xi|^2 + delta^2)^((p(x) - 2) / 2) xi.

    ``j`` is only meaningful for the perturbed kind, where it enters the growth
    bound |a(x, xi)| <= gamma (j(x) + |xi|^(p(x) - 1)); the flux itself is unchanged.
    """
    kind: FluxKind
    p: ExponentField
    delta: float
    j: Optional[ScalarField] = None
    alpha: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.delta) or self.delta < 0:
            raise FluxError(f"delta must be nonnegative, got {self.delta}")
        if self.alpha <= 0 or self.gamma <= 0:
            raise FluxError(f"alpha and gamma must be positive, got alpha={self.alpha}, gamma={self.gamma}")
        if self.j is not None:
            if self.j.grid != self.p.grid:
                raise FluxError("j and p live on different grids")
            if np.min(self.j.values) < 0:
                raise FluxError("j must be nonnegative at every node")
        if self.kind == FluxKind.P_LAPLACIAN and self.j is not None and np.any(self.j.values != 0):
            logger.warning("j is ignored by the plain pLaplacian kind")

    @property
    def grid(self) -> Grid:
        return self.p.grid

    def j_values(self) -> np.ndarray:
        if self.kind == FluxKind.PERTURBED_P_LAPLACIAN and self.j is not None:
            return self.j.values
        return np.zeros(self.grid.n)

    def matches(self, other: "FluxSpec") -> bool:
        """Same kind, constants, exponent values and j"""
        if self is other:
            return True
        same_j = (self.j is None and other.j is None) or (
            self.j is not None and other.j is not None and np.array_equal(self.j.values, other.j.values)
        )
        return (
            self.kind == other.kind
            and self.delta == other.delta
            and self.alpha == other.alpha
            and self.gamma == other.gamma
            and self.grid == other.grid
            and np.array_equal(self.p.values, other.p.values)
            and same_j
        )

    def with_exponent(self, p: ExponentField) -> "FluxSpec":
        return FluxSpec(self.kind, p, self.delta, self.j, self.alpha, self.gamma)


def default_delta(grid: Grid) -> float:
    return DEFAULT_DELTA_FACTOR * max(grid.extent)


def p_laplacian(p: ExponentField, delta: Optional[float] = None) -> FluxSpec:
    """Shorthand for the plain kind with unit structure constants"""
    return FluxSpec(
        kind=FluxKind.P_LAPLACIAN,
        p=p,
        delta=default_delta(p.grid) if delta is None else delta,
    )


def scalar_flux(g: np.ndarray, p: np.ndarray, delta: float) -> np.ndarray:
    """(g^2 + delta^2)^((p - 2) / 2) g, with value 0 where g = delta = 0"""
    g = np.asarray(g, dtype=float)
    s = g * g + delta * delta
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(s > 0, s ** ((np.asarray(p) - 2.0) / 2.0) * g, 0.0)
    return value


def scalar_flux_derivative(g: np.ndarray, p: np.ndarray, delta: float, floor: float = 0.0) -> np.ndarray:
    """
    d/dg of :func:`scalar_flux`: (g^2 + delta^2)^((p - 2) / 2) (1 + (p - 2) g^2 / (g^2 + delta^2)).

    ``floor`` bounds g^2 + delta^2 from below so the value stays finite for p < 2.
    """
    g = np.asarray(g, dtype=float)
    p = np.asarray(p, dtype=float)
    s = np.maximum(g * g + delta * delta, floor)
    with np.errstate(divide="ignore", invalid="ignore"):
        value = np.where(s > 0, s ** ((p - 2.0) / 2.0) * (1.0 + (p - 2.0) * g * g / np.where(s > 0, s, 1.0)), 0.0)
        singular = np.where(p < 2.0, np.inf, np.where(p == 2.0, 1.0, 0.0))
    return np.where(s > 0, value, singular)


def energy_density(r: np.ndarray, p: np.ndarray, delta: float) -> np.ndarray:
    """Phi(p, r) = ((r^2 + delta^2)^(p / 2) - delta^p) / p, so that dPhi/dr = scalar_flux(r)"""
    r = np.asarray(r, dtype=float)
    p = np.asarray(p, dtype=float)
    return ((r * r + delta * delta) ** (p / 2.0) - delta ** p) / p


def flux_vectors(p_values: np.ndarray, xi: np.ndarray, delta: float) -> np.ndarray:
    """Row-wise a(x, xi) for an (m, dim) array of gradients and m exponent values"""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    s = np.sum(xi * xi, axis=1) + delta * delta
    with np.errstate(divide="ignore", invalid="ignore"):
        factor = np.where(s > 0, s ** ((np.asarray(p_values) - 2.0) / 2.0), 0.0)
    return factor[:, None] * xi


def axis_flux_vectors(p_values: np.ndarray, xi: np.ndarray, delta: float) -> np.ndarray:
    """Row-wise sum_k scalar_flux(xi_k) e_k, the flux the face assembly applies axis by axis"""
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    return scalar_flux(xi, np.asarray(p_values, dtype=float)[:, None], delta)


def eval_flux(spec: FluxSpec, x: Sequence[float], xi: Sequence[float]) -> np.ndarray:
    """a(x, xi) at a physical point, the exponent interpolated from the nodes"""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.size != spec.grid.dim:
        raise FluxError(f"xi must have {spec.grid.dim} components, got {xi.size}")
    if not np.all(np.isfinite(xi)):
        raise FluxError("xi must be finite")
    p_value = spec.p.value_at(x)
    return flux_vectors(np.array([p_value]), xi[None, :], spec.delta)[0]
