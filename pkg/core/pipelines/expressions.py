import logging
from typing import List, Optional

import numpy as np

from core.grid.field_io import read_field
from core.grid.grid import Grid, ScalarField, make_grid
from core.operator.flux import FluxSpec, default_delta
from core.pipelines.config import ConfigError
from core.solver.problem import ObstacleProblem
from core.varexp.exponent import ExponentField
from schema import (
    ExperimentConfig,
    ExponentBlock,
    ExponentKind,
    ExpressionBlock,
    ExpressionKind,
    FluxBlock,
    FluxKind,
    GridBlock,
)

logger = logging.getLogger("expressions")

# radial singularities are evaluated no closer than this fraction of h_min
RADIAL_CLIP = 0.25


def build_grid(block: GridBlock, n: Optional[List[int]] = None) -> Grid:
    return make_grid(block.dim, list(n or block.n), list(block.extent))


def _center(block: ExpressionBlock, grid: Grid, key: str) -> List[float]:
    if block.center is None:
        return list(grid.center())
    if len(block.center) != grid.dim:
        raise ConfigError(f"{key}.center", f"needs {grid.dim} coordinates, got {len(block.center)}")
    return [float(c) for c in block.center]


def _check_axis(axis: int, grid: Grid, key: str):
    if axis >= grid.dim:
        raise ConfigError(f"{key}.axis", f"axis {axis} does not exist on a {grid.dim}D grid")


def _read_matching(path: str, grid: Grid, key: str) -> np.ndarray:
    field = read_field(path)
    if field.grid != grid:
        raise ConfigError(f"{key}.path", f"field file grid n={field.grid.n} does not match the configured grid n={grid.n}")
    return np.array(field.values)


def build_field(block: ExpressionBlock, grid: Grid, key: str) -> ScalarField:
    """Nodal values of a built-in expression or a field file"""
    coordinates = grid.coordinates
    kind = block.kind

    if kind == ExpressionKind.CONSTANT:
        values = np.full(grid.n, block.value)
    elif kind == ExpressionKind.AFFINE:
        _check_axis(block.axis, grid, key)
        values = block.value + block.slope * coordinates[block.axis]
    elif kind == ExpressionKind.QUADRATIC_BUMP:
        center = _center(block, grid, key)
        radius_sq = sum((c - x0) ** 2 for c, x0 in zip(coordinates, center))
        values = block.value + block.height * np.maximum(0.0, 1.0 - radius_sq / block.width ** 2)
    elif kind == ExpressionKind.RADIAL_POWER:
        center = _center(block, grid, key)
        radius = np.sqrt(sum((c - x0) ** 2 for c, x0 in zip(coordinates, center)))
        radius = np.maximum(radius, RADIAL_CLIP * grid.h_min)
        values = block.value + block.amplitude * radius ** (-block.power)
    elif kind == ExpressionKind.PRODUCT_OF_SINES:
        product = np.ones(grid.n)
        for axis, c in enumerate(coordinates):
            product = product * np.sin(np.pi * c / grid.extent[axis])
        values = block.value + block.amplitude * product
    elif kind == ExpressionKind.STEP:
        _check_axis(block.axis, grid, key)
        values = np.where(coordinates[block.axis] < block.threshold, block.low, block.high)
    elif kind == ExpressionKind.FILE:
        values = _read_matching(block.path, grid, key)
    else:
        raise ConfigError(f"{key}.kind", f"unknown expression kind {kind}")

    return ScalarField(grid, np.array(values, dtype=float))


def build_exponent(block: ExponentBlock, grid: Grid) -> ExponentField:
    if block.kind == ExponentKind.CONSTANT:
        return ExponentField.constant(grid, block.value)
    if block.kind == ExponentKind.AFFINE:
        _check_axis(block.axis, grid, "exponent")
        return ExponentField.affine(grid, block.base, block.slope, block.axis)
    return ExponentField(grid, _read_matching(block.path, grid, "exponent"))


def build_flux(block: FluxBlock, p: ExponentField) -> FluxSpec:
    grid = p.grid
    j = grid.full(block.j) if block.kind == FluxKind.PERTURBED_P_LAPLACIAN else None
    return FluxSpec(
        kind=block.kind,
        p=p,
        delta=default_delta(grid) if block.delta is None else block.delta,
        j=j,
        alpha=block.alpha,
        gamma=block.gamma,
    )


def build_problem(config: ExperimentConfig, n: Optional[List[int]] = None) -> ObstacleProblem:
    """Flux, data and obstacle of a config on its grid, or on ``n`` nodes per axis"""
    grid = build_grid(config.grid, n)
    spec = build_flux(config.flux, build_exponent(config.exponent, grid))
    f = build_field(config.data, grid, "data")
    psi = build_field(config.obstacle, grid, "obstacle")
    logger.debug(f"Built problem on grid n={grid.n}: sup|f| = {f.max_abs():.4g}, sup psi = {float(np.max(psi.values)):.4g}")
    return ObstacleProblem(spec, f, psi)
