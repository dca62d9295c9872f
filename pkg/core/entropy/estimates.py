import logging
from dataclasses import dataclass
from typing import List, Sequence, Tuple

import numpy as np

from core.grid.grid import ScalarField, face_weight, gradient
from core.operator.flux import FluxSpec

logger = logging.getLogger("estimates")


@dataclass(frozen=True)
class AffineFit:
    """Least-squares line energy ~ slope * t + intercept over a level table"""
    slope: float
    intercept: float
    max_residual: float


def truncation_energy(spec: FluxSpec, u: ScalarField, t_levels: Sequence[float]) -> List[Tuple[float, float]]:
    """
    (t, sum of w_f |g_f|^p_f over faces inside {|u| <= t}) per level.

    A face counts only when both of its nodes satisfy |u| <= t.
    """
    levels = np.asarray(t_levels, dtype=float)
    if np.any(np.diff(levels) <= 0):
        raise ValueError("Levels must be strictly increasing")
    if spec.grid != u.grid:
        raise ValueError("Flux specification and field live on different grids")

    grid = u.grid
    weight = face_weight(grid)
    magnitude = np.abs(u.values)
    grad = gradient(u)

    # per face: max of the two node magnitudes and |g|^p
    face_level = []
    face_energy = []
    for axis, component in enumerate(grad.components):
        upper = [slice(None)] * grid.dim
        lower = [slice(None)] * grid.dim
        upper[axis] = slice(1, None)
        lower[axis] = slice(None, -1)
        face_level.append(np.maximum(magnitude[tuple(upper)], magnitude[tuple(lower)]))
        face_energy.append(np.abs(component) ** spec.p.face_values(axis))

    table = []
    for t in levels:
        energy = 0.0
        for level, density in zip(face_level, face_energy):
            energy += weight * float(np.sum(density[level <= t]))
        table.append((float(t), energy))
    return table


def affine_fit(table: Sequence[Tuple[float, float]]) -> AffineFit:
    """Fit energy against t; a finite slope is the affine growth the estimate allows"""
    if len(table) < 2:
        raise ValueError("An affine fit needs at least two levels")
    t = np.array([row[0] for row in table])
    energy = np.array([row[1] for row in table])
    slope, intercept = np.polyfit(t, energy, 1)
    residual = float(np.max(np.abs(energy - (slope * t + intercept))))
    logger.debug(f"Affine fit of truncation energy: slope {slope:.4g}, intercept {intercept:.4g}")
    return AffineFit(slope=float(slope), intercept=float(intercept), max_residual=residual)
