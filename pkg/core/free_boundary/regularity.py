from typing import List, Sequence, Tuple

import numpy as np

from core.grid.grid import ScalarField


def holder_modulus(u: ScalarField, alphas: Sequence[float]) -> List[Tuple[float, float]]:
    """(alpha, max |u_i - u_j| / |x_i - x_j|^alpha) over axis-neighbour node pairs"""
    grid = u.grid
    rows = []
    for alpha in alphas:
        if not 0 < alpha <= 1:
            raise ValueError(f"Hölder exponents must lie in (0, 1], got {alpha}")
        modulus = 0.0
        for axis in range(grid.dim):
            jumps = np.abs(np.diff(u.values, axis=axis))
            if jumps.size:
                modulus = max(modulus, float(np.max(jumps)) / grid.h[axis] ** alpha)
        rows.append((float(alpha), modulus))
    return rows
