import logging
from typing import Tuple, Union

import numpy as np

from core.operator.flux import FluxSpec, axis_flux_vectors, flux_vectors
from schema import StructureAudit

logger = logging.getLogger("audit")

# Gradient magnitudes are drawn log-uniformly from [10^LOW, 10^HIGH]
MAGNITUDE_DECADES = (-3.0, 3.0)


def _sample_gradients(rng: np.random.Generator, count: int, dim: int) -> np.ndarray:
    direction = rng.standard_normal((count, dim))
    norms = np.linalg.norm(direction, axis=1)
    norms[norms == 0] = 1.0
    magnitude = 10.0 ** rng.uniform(*MAGNITUDE_DECADES, size=count)
    return direction / norms[:, None] * magnitude[:, None]


def axis_constant(p: np.ndarray, dim: int) -> np.ndarray:
    """N^|1 - p/2|: the norm equivalence factor between sum_k |xi_k|^p and |xi|^p"""
    return float(dim) ** np.abs(1.0 - np.asarray(p) / 2.0)


def _margins(
    a: np.ndarray,
    a_prime: np.ndarray,
    xi: np.ndarray,
    xi_prime: np.ndarray,
    alpha: Union[float, np.ndarray],
    gamma: Union[float, np.ndarray],
    p: np.ndarray,
    j: np.ndarray,
    delta_p: np.ndarray,
    delta_p1: np.ndarray,
) -> Tuple[float, float, float, int]:
    norm = np.linalg.norm(xi, axis=1)

    coercive_bound = alpha * norm ** p - delta_p
    coercivity = (np.sum(a * xi, axis=1) - coercive_bound) / (1.0 + np.abs(coercive_bound))

    growth_bound = gamma * (j + norm ** (p - 1.0) + delta_p1)
    growth = (growth_bound - np.linalg.norm(a, axis=1)) / (1.0 + growth_bound)

    difference = xi - xi_prime
    distance = np.sum(difference * difference, axis=1)
    distinct = distance > 0
    monotonicity = np.sum((a - a_prime) * difference, axis=1)[distinct] / distance[distinct]

    return (
        float(np.min(coercivity)),
        float(np.min(growth)),
        float(np.min(monotonicity)) if monotonicity.size else 0.0,
        int(np.count_nonzero(~distinct)),
    )


def audit_structure(spec: FluxSpec, sample_count: int = 2000, seed: int = 0) -> StructureAudit:
    """
    Sample (x, xi, xi') triples and report the worst margins of

    * coercivity  a(x, xi).xi >= alpha |xi|^p(x) - delta^p(x)
    * growth      |a(x, xi)| <= gamma (j(x) + |xi|^(p(x) - 1) + delta^(p(x) - 1))
    * monotonicity (a(x, xi) - a(x, xi')).(xi - xi') > 0

    Coercivity and growth margins are relative to 1 + |bound|; the monotonicity
    margin is divided by |xi - xi'|^2. Pairs with xi = xi' are excluded.

    The same margins are reported for the per-axis flux sum_k a(x, xi_k e_k)
    that the face assembly applies. There alpha is divided and gamma multiplied
    by N^|1 - p/2|, and the delta terms are summed over the N axes.
    """
    if sample_count < 1:
        raise ValueError(f"sample_count must be at least 1, got {sample_count}")

    rng = np.random.default_rng(seed)
    grid = spec.grid
    nodes = rng.integers(0, grid.size, size=sample_count)
    p = spec.p.values.ravel()[nodes]
    j = spec.j_values().ravel()[nodes]
    delta = spec.delta

    xi = _sample_gradients(rng, sample_count, grid.dim)
    xi_prime = _sample_gradients(rng, sample_count, grid.dim)

    coercivity, growth, monotonicity, excluded = _margins(
        flux_vectors(p, xi, delta), flux_vectors(p, xi_prime, delta), xi, xi_prime,
        spec.alpha, spec.gamma, p, j, delta ** p, delta ** (p - 1.0),
    )

    dim = grid.dim
    factor = axis_constant(p, dim)
    axis_coercivity, axis_growth, axis_monotonicity, _ = _margins(
        axis_flux_vectors(p, xi, delta), axis_flux_vectors(p, xi_prime, delta), xi, xi_prime,
        spec.alpha / factor, spec.gamma * factor, p, j, dim * delta ** p, dim * delta ** (p - 1.0),
    )

    report = StructureAudit(
        sample_count=sample_count,
        seed=seed,
        alpha=spec.alpha,
        gamma=spec.gamma,
        coercivity_margin=coercivity,
        growth_margin=growth,
        monotonicity_margin=monotonicity,
        axis_coercivity_margin=axis_coercivity,
        axis_growth_margin=axis_growth,
        axis_monotonicity_margin=axis_monotonicity,
        excluded_pairs=excluded,
    )
    logger.info(
        f"Structure audit over {sample_count} samples: coercivity {report.coercivity_margin:.3e}, "
        f"growth {report.growth_margin:.3e}, monotonicity {report.monotonicity_margin:.3e}, "
        f"per-axis {report.axis_coercivity_margin:.3e}/{report.axis_growth_margin:.3e}/{report.axis_monotonicity_margin:.3e}"
    )
    return report
