import logging
import os
from typing import List

import numpy as np

from core.grid.grid import Grid, GridError, ScalarField, make_grid

logger = logging.getLogger("field_io")


def write_field(path: str, field: ScalarField) -> str:
    """
    Write a field file.

    Line 1 holds ``dim n1 [n2] extent1 [extent2]``; node values follow in
    row-major order, one per line, with 17 significant digits.
    """
    grid = field.grid
    header: List[str] = [str(grid.dim)]
    header += [str(count) for count in grid.n]
    header += [format(length, ".17g") for length in grid.extent]

    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)

    with open(path, "w", encoding="utf-8") as handle:
        handle.write(" ".join(header) + "\n")
        for value in field.values.ravel(order="C"):
            handle.write(format(float(value), ".17g") + "\n")

    logger.debug(f"Wrote field with {grid.size} nodes to {path}")
    return path


def read_field(path: str) -> ScalarField:
    """Read a field file written by :func:`write_field`"""
    if not os.path.exists(path):
        raise FileNotFoundError(f"Field file not found: {path}")

    with open(path, "r", encoding="utf-8") as handle:
        lines = [line.strip() for line in handle if line.strip()]

    if not lines:
        raise GridError(f"Empty field file: {path}")

    header = lines[0].split()
    try:
        dim = int(header[0])
        counts = [int(token) for token in header[1:1 + dim]]
        extents = [float(token) for token in header[1 + dim:1 + 2 * dim]]
    except (ValueError, IndexError) as e:
        raise GridError(f"Malformed field header in {path}: {str(e)}")
    if len(counts) != dim or len(extents) != dim:
        raise GridError(f"Malformed field header in {path}")

    grid: Grid = make_grid(dim, counts, extents)
    values = np.array([float(line) for line in lines[1:]])
    if values.size != grid.size:
        raise GridError(f"{path} holds {values.size} values, header announces {grid.size}")

    return ScalarField(grid, values.reshape(grid.n))
