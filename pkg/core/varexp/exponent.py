import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator

from core.grid.grid import Grid, ScalarField
from schema import ExponentReport

logger = logging.getLogger("exponent")

# Node pairs beyond this count are subsampled when estimating the log-Hölder constant
MAX_HOLDER_PAIRS = 1_000_000


class ExponentError(ValueError):
    """Raised when an exponent field violates its bounds"""


@dataclass(frozen=True, eq=False)
class ExponentField:
    """
    Nodal samples of a variable exponent.

    ``lower`` is the exclusive lower bound enforced at construction: 1 for a
    growth exponent p(.), 0 for derived exponents such as q0 and q1.
    """
    grid: Grid
    values: np.ndarray
    lower: float = 1.0

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.size == 1:
            values = np.full(self.grid.n, float(values.ravel()[0]))
        values = values.reshape(self.grid.n)
        if not np.all(np.isfinite(values)):
            raise ExponentError("Exponent values must be finite")
        if np.min(values) <= self.lower:
            raise ExponentError(
                f"Exponent must exceed {self.lower} everywhere, got minimum {np.min(values):.6g}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ExponentField":
        return cls(grid, np.full(grid.n, float(value)))

    @classmethod
    def affine(cls, grid: Grid, base: float, slope: float, axis: int = 0) -> "ExponentField":
        """p(x) = base + slope * x_axis"""
        return cls(grid, base + slope * grid.coordinates[axis])

    @property
    def N(self) -> int:
        return self.grid.dim

    @property
    def p_min(self) -> float:
        return float(np.min(self.values))

    @property
    def p_max(self) -> float:
        return float(np.max(self.values))

    def is_constant(self) -> bool:
        return self.p_min == self.p_max

    def as_field(self) -> ScalarField:
        return ScalarField(self.grid, self.values)

    def face_values(self, axis: int) -> np.ndarray:
        """Arithmetic mean of the two node exponents adjacent to each face"""
        upper = [slice(None)] * self.grid.dim
        lower = [slice(None)] * self.grid.dim
        upper[axis] = slice(1, None)
        lower[axis] = slice(None, -1)
        return 0.5 * (self.values[tuple(upper)] + self.values[tuple(lower)])

    @cached_property
    def _interpolator(self) -> RegularGridInterpolator:
        return RegularGridInterpolator(self.grid.axes, self.values, method="linear")

    def value_at(self, x: Sequence[float]) -> float:
        """Piecewise-linear interpolation of the exponent at a physical point"""
        point = np.atleast_1d(np.asarray(x, dtype=float)).reshape(1, self.grid.dim)
        return float(self._interpolator(point)[0])


@dataclass(frozen=True, eq=False)
class DerivedExponents:
    p_star: ExponentField
    p_conj: ExponentField
    q0: ExponentField
    q1: ExponentField


def conjugate(values: np.ndarray) -> np.ndarray:
    return values / (values - 1.0)


def log_holder_constant(p: ExponentField, max_pairs: int = MAX_HOLDER_PAIRS) -> float:
    """
    Discrete sup of |p(x) - p(y)| * (-ln|x - y|) over node pairs with |x - y| < 1/2.

    All pairs are used when there are at most ``max_pairs`` of them; otherwise
    every axis-neighbour pair plus a fixed-seed random sample is used.
    """
    points = np.stack([c.ravel() for c in p.grid.coordinates], axis=1)
    values = p.values.ravel()
    count = values.size
    total_pairs = count * (count - 1) // 2

    if total_pairs <= max_pairs:
        first, second = np.triu_indices(count, k=1)
    else:
        rng = np.random.default_rng(0)
        first = rng.integers(0, count, size=max_pairs)
        second = rng.integers(0, count, size=max_pairs)
        keep = first != second
        first, second = first[keep], second[keep]

        # Neighbour pairs carry the sharpest modulus for smooth exponents
        index = np.arange(count).reshape(p.grid.n)
        for axis in range(p.grid.dim):
            lower = [slice(None)] * p.grid.dim
            upper = [slice(None)] * p.grid.dim
            lower[axis] = slice(None, -1)
            upper[axis] = slice(1, None)
            first = np.concatenate([first, index[tuple(lower)].ravel()])
            second = np.concatenate([second, index[tuple(upper)].ravel()])

    constant = 0.0
    chunk = 250_000
    for start in range(0, first.size, chunk):
        a = first[start:start + chunk]
        b = second[start:start + chunk]
        distance = np.linalg.norm(points[a] - points[b], axis=1)
        close = distance < 0.5
        if not np.any(close):
            continue
        modulus = np.abs(values[a][close] - values[b][close]) * (-np.log(distance[close]))
        constant = max(constant, float(np.max(modulus)))
    return constant


def validate_exponent(p: ExponentField) -> ExponentReport:
    """Report (not reject) the log-Hölder constant, the bounds and the regime flags"""
    N = p.N
    p_min, p_max = p.p_min, p.p_max
    bounds_ok = 1.0 < p_min and p_max < N

    # min over nodes of N p'(x) / (N - p(x)) against sup p' = p_min'
    values = p.values
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(values < N, N * conjugate(values) / (N - values), -np.inf)
    conjugate_condition_ok = bool(np.min(ratio) > p_min / (p_min - 1.0) + 1e-12)

    w11_regime = p_min > 2.0 - 1.0 / N
    ls_regime = False
    if p_max < N:
        derived = derived_exponents(p)
        ls_regime = bool(np.min(derived.q1.values - (values - 1.0)) > 0.0)

    report = ExponentReport(
        N=N,
        p_min=p_min,
        p_max=p_max,
        log_holder_constant=log_holder_constant(p),
        bounds_ok=bounds_ok,
        conjugate_condition_ok=conjugate_condition_ok,
        w11_regime=w11_regime,
        ls_regime=ls_regime,
    )
    logger.debug(f"Exponent report: {report}")
    return report


def derived_exponents(p: ExponentField) -> DerivedExponents:
    """p*, p', q0 = p* / sup p', q1 = q0 p / (q0 + 1), evaluated nodewise"""
    N = p.N
    if p.p_max >= N:
        raise ExponentError(f"Derived exponents need sup p < N, got sup p = {p.p_max:.6g}, N = {N}")

    values = p.values
    p_star = N * values / (N - values)
    p_conj = conjugate(values)
    q0 = p_star / float(np.max(p_conj))
    q1 = q0 * values / (q0 + 1.0)

    grid = p.grid
    return DerivedExponents(
        p_star=ExponentField(grid, p_star, lower=0.0),
        p_conj=ExponentField(grid, p_conj, lower=0.0),
        q0=ExponentField(grid, q0, lower=0.0),
        q1=ExponentField(grid, q1, lower=0.0),
    )


def scaled(q: ExponentField, factor: float) -> ExponentField:
    """The exponent factor * q(.) (e.g. 0.95 * q0 strictly below q0)"""
    return ExponentField(q.grid, factor * q.values, lower=0.0)
