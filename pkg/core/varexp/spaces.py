import logging
from typing import Optional, Sequence

import numpy as np

from core.grid.grid import ScalarField, RegionMask, face_weight, gradient, integrate
from core.varexp.exponent import ExponentField

logger = logging.getLogger("spaces")

DEFAULT_NORM_TOL = 1e-10
DEFAULT_LEVEL_COUNT = 64


def _check_grid(v: ScalarField, p: ExponentField):
    if v.grid != p.grid:
        raise ValueError("Field and exponent live on different grids")


def modular(v: ScalarField, p: ExponentField) -> float:
    """rho(v) = integral of |v|^p(x) by the trapezoid rule"""
    _check_grid(v, p)
    return integrate(v.with_values(np.abs(v.values) ** p.values))


def luxemburg_norm(v: ScalarField, p: ExponentField, tol: float = DEFAULT_NORM_TOL) -> float:
    """
    Smallest lambda with rho(v / lambda) <= 1.

    The bracket [lo, hi] is grown geometrically around max|v| until
    rho(v / hi) <= 1 <= rho(v / lo), then bisected until hi - lo <= tol * lo.
    The midpoint of the final bracket is returned.
    """
    if tol <= 0:
        raise ValueError(f"Bisection tolerance must be positive, got {tol}")
    _check_grid(v, p)

    magnitude = np.abs(v.values)
    if not np.any(magnitude > 0):
        return 0.0

    weights = v.grid.weights
    exponents = p.values

    def rho(lam: float) -> float:
        return float(np.sum((magnitude / lam) ** exponents * weights))

    lo = hi = float(np.max(magnitude))
    while rho(hi) > 1.0:
        hi *= 2.0
    while rho(lo) < 1.0:
        lo *= 0.5

    iterations = 0
    while hi - lo > tol * lo:
        mid = 0.5 * (lo + hi)
        if rho(mid) > 1.0:
            lo = mid
        else:
            hi = mid
        iterations += 1

    logger.debug(f"Luxemburg norm bracket [{lo:.12g}, {hi:.12g}] after {iterations} bisections")
    return 0.5 * (lo + hi)


def default_t_levels(values: np.ndarray, count: int = DEFAULT_LEVEL_COUNT) -> np.ndarray:
    """Logarithmic levels spanning [1e-3 * max|values|, max|values|]"""
    top = float(np.max(np.abs(values))) if np.size(values) else 0.0
    if top <= 0.0:
        return np.array([1.0])
    return np.geomspace(1e-3 * top, top, count)


def _check_levels(t_levels: Sequence[float]) -> np.ndarray:
    levels = np.asarray(t_levels, dtype=float)
    if levels.ndim != 1 or levels.size == 0:
        raise ValueError("Levels must be a non-empty sequence")
    if np.any(levels <= 0) or np.any(np.diff(levels) <= 0) or not np.all(np.isfinite(levels)):
        raise ValueError("Levels must be finite, positive and strictly increasing")
    return levels


def marcinkiewicz_bound(
    u: ScalarField,
    q: ExponentField,
    t_levels: Optional[Sequence[float]] = None,
) -> float:
    """M = max over t of the integral of t^q(x) over {|u| > t}"""
    _check_grid(u, q)
    levels = _check_levels(default_t_levels(u.values) if t_levels is None else t_levels)

    magnitude = np.abs(u.values)
    bound = 0.0
    for t in levels:
        region = RegionMask(u.grid, magnitude > t)
        if region.is_empty():
            continue
        bound = max(bound, integrate(u.with_values(t ** q.values), region))
    return bound


def _face_magnitudes(u: ScalarField):
    return [np.abs(component) for component in gradient(u).components]


def gradient_modular(u: ScalarField, q: ExponentField) -> float:
    """Sum over faces of w_f |g_f|^q_f, with g_f the face difference quotient"""
    _check_grid(u, q)
    weight = face_weight(u.grid)
    total = 0.0
    for axis, magnitude in enumerate(_face_magnitudes(u)):
        total += float(np.sum(magnitude ** q.face_values(axis))) * weight
    return total


def gradient_marcinkiewicz_bound(
    u: ScalarField,
    p: ExponentField,
    q: ExponentField,
    t_levels: Optional[Sequence[float]] = None,
) -> float:
    """
    Weak-Lebesgue bound for |grad u|^(p / (q + 1)) in the q-scale:
    M = max over t of sum over faces of w_f t^q_f [ |g_f|^r_f > t ], r = p / (q + 1).
    """
    _check_grid(u, p)
    _check_grid(u, q)
    weight = face_weight(u.grid)

    powered = []
    face_q = []
    for axis, magnitude in enumerate(_face_magnitudes(u)):
        r = p.face_values(axis) / (q.face_values(axis) + 1.0)
        powered.append(magnitude ** r)
        face_q.append(q.face_values(axis))

    if t_levels is None:
        t_levels = gradient_levels(u, p, q)
    levels = _check_levels(t_levels)

    bound = 0.0
    for t in levels:
        total = 0.0
        for values, exponents in zip(powered, face_q):
            above = values > t
            if np.any(above):
                total += float(np.sum(t ** exponents[above])) * weight
        bound = max(bound, total)
    return bound


def gradient_levels(
    u: ScalarField,
    p: ExponentField,
    q: ExponentField,
    count: int = DEFAULT_LEVEL_COUNT,
) -> np.ndarray:
    """Default levels for :func:`gradient_marcinkiewicz_bound` built from |g_f|^(p / (q + 1))"""
    powered = [
        magnitude ** (p.face_values(axis) / (q.face_values(axis) + 1.0))
        for axis, magnitude in enumerate(_face_magnitudes(u))
    ]
    return default_t_levels(np.concatenate([values.ravel() for values in powered]), count)
