import numpy as np

from core.grid.grid import ScalarField


def truncate_values(values: np.ndarray, t: float) -> np.ndarray:
    return np.clip(values, -t, t)


def truncate(v: ScalarField, t: float) -> ScalarField:
    """T_t(v) = max(-t, min(t, v)) at every node"""
    if not t > 0:
        raise ValueError(f"Truncation level must be positive, got {t}")
    return v.with_values(truncate_values(v.values, t))


def approximate_data(f: ScalarField, n: float) -> ScalarField:
    """Bounded approximation T_n(f) of integrable data"""
    if not n > 0:
        raise ValueError(f"Approximation level must be positive, got {n}")
    return truncate(f, n)
