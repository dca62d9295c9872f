import logging
from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Sequence, Tuple, Union

import numpy as np

logger = logging.getLogger("grid")


class GridError(ValueError):
    """Raised when a grid or a field violates its construction invariants"""


def _readonly(values: np.ndarray) -> np.ndarray:
    values.flags.writeable = False
    return values


@dataclass(frozen=True)
class Grid:
    """
    Uniform tensor lattice on the box [0, extent_1] x ... x [0, extent_dim].

    Nodes are stored in C order with shape ``n``; the Dirichlet boundary
    consists of every node lying on a lattice face.
    """
    dim: int
    n: Tuple[int, ...]
    extent: Tuple[float, ...]

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise GridError(f"Unsupported grid dimension: {self.dim}. Supported: 1, 2")
        if len(self.n) != self.dim or len(self.extent) != self.dim:
            raise GridError("Node counts and extents must be given once per axis")
        for count in self.n:
            if count < 3:
                raise GridError(f"At least 3 nodes per axis are required, got {count}")
        for length in self.extent:
            if not np.isfinite(length) or length <= 0:
                raise GridError(f"Extents must be positive, got {length}")

    @property
    def h(self) -> Tuple[float, ...]:
        return tuple(length / (count - 1) for length, count in zip(self.extent, self.n))

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.n

    @property
    def size(self) -> int:
        return int(np.prod(self.n))

    @property
    def h_min(self) -> float:
        return min(self.h)

    @property
    def volume(self) -> float:
        return float(np.prod(self.extent))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.h))

    @cached_property
    def axes(self) -> Tuple[np.ndarray, ...]:
        """1D coordinate arrays, one per axis"""
        return tuple(
            _readonly(np.linspace(0.0, length, count))
            for length, count in zip(self.extent, self.n)
        )

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, ...]:
        """Nodal coordinates broadcast to the full node shape"""
        return tuple(_readonly(c) for c in np.meshgrid(*self.axes, indexing="ij"))

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n, dtype=bool)
        for axis in range(self.dim):
            index = [slice(None)] * self.dim
            index[axis] = 0
            mask[tuple(index)] = True
            index[axis] = -1
            mask[tuple(index)] = True
        return _readonly(mask)

    @cached_property
    def interior_mask(self) -> np.ndarray:
        return _readonly(~self.boundary_mask)

    @cached_property
    def weights(self) -> np.ndarray:
        """Trapezoid weights: h^dim, halved once per boundary-touching axis"""
        per_axis = []
        for step, count in zip(self.h, self.n):
            w = np.full(count, step)
            w[0] *= 0.5
            w[-1] *= 0.5
            per_axis.append(w)
        weights = per_axis[0]
        for w in per_axis[1:]:
            weights = np.multiply.outer(weights, w)
        return _readonly(np.asarray(weights, dtype=float))

    def face_shape(self, axis: int) -> Tuple[int, ...]:
        """Shape of the face-centered array normal to ``axis``"""
        shape = list(self.n)
        shape[axis] -= 1
        return tuple(shape)

    def center(self) -> Tuple[float, ...]:
        return tuple(0.5 * length for length in self.extent)

    def zeros(self) -> "ScalarField":
        return ScalarField(self, np.zeros(self.n))

    def full(self, value: float) -> "ScalarField":
        return ScalarField(self, np.full(self.n, float(value)))


@dataclass(frozen=True, eq=False)
class ScalarField:
    """One finite real value per node of ``grid``"""
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=float, copy=True)
        if values.shape != self.grid.n:
            if values.size != self.grid.size:
                raise GridError(
                    f"Field has {values.size} values but the grid has {self.grid.size} nodes"
                )
            values = values.reshape(self.grid.n)
        if not np.all(np.isfinite(values)):
            raise GridError("Field values must be finite")
        object.__setattr__(self, "values", _readonly(values))

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


@dataclass(frozen=True, eq=False)
class VectorField:
    """Face-centered components: ``components[k]`` lives on faces normal to axis k"""
    grid: Grid
    components: Tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.components) != self.grid.dim:
            raise GridError("A vector field needs one component array per axis")
        checked = []
        for axis, component in enumerate(self.components):
            component = np.array(component, dtype=float, copy=True)
            if component.shape != self.grid.face_shape(axis):
                raise GridError(
                    f"Component {axis} has shape {component.shape}, expected {self.grid.face_shape(axis)}"
                )
            if not np.all(np.isfinite(component)):
                raise GridError("Vector field components must be finite")
            checked.append(_readonly(component))
        object.__setattr__(self, "components", tuple(checked))


@dataclass(frozen=True, eq=False)
class RegionMask:
    """Boolean node set on ``grid``"""
    grid: Grid
    mask: np.ndarray

    def __post_init__(self):
        mask = np.array(self.mask, dtype=bool, copy=True)
        if mask.shape != self.grid.n:
            if mask.size != self.grid.size:
                raise GridError(f"Mask has {mask.size} entries but the grid has {self.grid.size} nodes")
            mask = mask.reshape(self.grid.n)
        object.__setattr__(self, "mask", _readonly(mask))

    @classmethod
    def full(cls, grid: Grid) -> "RegionMask":
        return cls(grid, np.ones(grid.n, dtype=bool))

    @classmethod
    def empty(cls, grid: Grid) -> "RegionMask":
        return cls(grid, np.zeros(grid.n, dtype=bool))

    @classmethod
    def interior(cls, grid: Grid) -> "RegionMask":
        return cls(grid, grid.interior_mask)

    def _check(self, other: "RegionMask"):
        if other.grid != self.grid:
            raise GridError("Masks live on different grids")

    def __and__(self, other: "RegionMask") -> "RegionMask":
        self._check(other)
        return RegionMask(self.grid, self.mask & other.mask)

    def minus(self, other: "RegionMask") -> "RegionMask":
        self._check(other)
        return RegionMask(self.grid, self.mask & ~other.mask)

    def count(self) -> int:
        return int(np.count_nonzero(self.mask))

    def is_empty(self) -> bool:
        return not bool(np.any(self.mask))


def make_grid(
    dim: int,
    n: Union[int, Sequence[int]],
    extent: Union[float, Sequence[float]] = 1.0,
) -> Grid:
    """Build a uniform grid; scalar ``n`` / ``extent`` are repeated on every axis"""
    if dim not in (1, 2):
        raise GridError(f"Unsupported grid dimension: {dim}. Supported: 1, 2")
    counts = tuple(int(c) for c in (n if isinstance(n, (list, tuple)) else [n] * dim))
    lengths = tuple(float(e) for e in (extent if isinstance(extent, (list, tuple)) else [extent] * dim))
    grid = Grid(dim=dim, n=counts, extent=lengths)
    logger.debug(f"Created grid dim={dim} n={counts} extent={lengths}")
    return grid


def gradient(u: ScalarField) -> VectorField:
    """Face-centered first differences (u_{i+1} - u_i) / h along every axis"""
    grid = u.grid
    components = tuple(np.diff(u.values, axis=axis) / grid.h[axis] for axis in range(grid.dim))
    return VectorField(grid, components)


def divergence(q: VectorField) -> ScalarField:
    """
    Node-centered divergence of a face field.

    Interior nodes get the sum over axes of (q_{i+1/2} - q_{i-1/2}) / h; boundary
    nodes (``grid.boundary_mask``) are set to zero.
    """
    grid = q.grid
    result = np.zeros(grid.n)
    for axis, component in enumerate(q.components):
        upper = [slice(None)] * grid.dim
        lower = [slice(None)] * grid.dim
        target = [slice(None)] * grid.dim
        upper[axis] = slice(1, None)
        lower[axis] = slice(None, -1)
        target[axis] = slice(1, -1)
        result[tuple(target)] += (component[tuple(upper)] - component[tuple(lower)]) / grid.h[axis]
    result[grid.boundary_mask] = 0.0
    return ScalarField(grid, result)


def integrate(v: ScalarField, region: Optional[RegionMask] = None) -> float:
    """Trapezoid quadrature of ``v`` over the masked nodes (all nodes by default)"""
    grid = v.grid
    if region is None:
        return float(np.sum(v.values * grid.weights))
    if region.grid != grid:
        raise GridError("Field and region live on different grids")
    return float(np.sum(v.values[region.mask] * grid.weights[region.mask]))


def measure(region: RegionMask) -> float:
    return float(np.sum(region.grid.weights[region.mask]))


def symmetric_difference(m1: RegionMask, m2: RegionMask) -> RegionMask:
    """Nodewise exclusive-or of two masks"""
    m1._check(m2)
    return RegionMask(m1.grid, np.logical_xor(m1.mask, m2.mask))


def face_weight(grid: Grid) -> float:
    """Quadrature weight carried by every face in the discrete energy"""
    return grid.cell_volume
