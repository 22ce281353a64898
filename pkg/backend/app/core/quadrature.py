"""
Gregory quadrature on uniform grids.

Edge coefficients for every order are generated from the moment conditions of the
Euler-Maclaurin expansion and cross-checked against the classic tabulated values.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Dict, Tuple

import numpy as np
from scipy.special import bernoulli

from app.core.exceptions import QuadratureError
from app.models.enums import Sidedness

logger = logging.getLogger(__name__)

MAX_ORDER = 6

# Tabulated left-edge weights, used only to validate the generated ones
TABULATED_EDGES: Dict[int, Tuple[Fraction, ...]] = {
    1: (Fraction(1, 2),),
    2: (Fraction(5, 12), Fraction(13, 12)),
    3: (Fraction(3, 8), Fraction(7, 6), Fraction(23, 24)),
    4: (Fraction(251, 720), Fraction(299, 240), Fraction(211, 240), Fraction(739, 720)),
}


@dataclass(frozen=True, eq=False)
class WeightVector:
    """Diagonal of the Gregory weight matrix on a grid of M + 1 nodes."""

    n: int
    sidedness: Sidedness
    weights: np.ndarray
    exact_degree: int

    @property
    def M(self) -> int:
        return self.weights.size - 1

    @property
    def inverse(self) -> np.ndarray:
        return 1.0 / self.weights

    def nonunit_positions(self) -> np.ndarray:
        return np.flatnonzero(self.weights != 1.0)


def exact_degree(n: int) -> int:
    """Highest monomial degree integrated exactly: 2k - 1 for n = 2k - 1 or n = 2k."""
    return n if n % 2 else n - 1


@lru_cache(maxsize=None)
def edge_coefficients(n: int) -> Tuple[float, ...]:
    """
    Left-edge weights w_0..w_{n-1} of the order-n Gregory rule.

    The corrections d_j = w_j - 1 solve sum_j d_j j^p = B_{p+1} / (p + 1) for
    p = 0..n-1, which cancels the left-end Euler-Maclaurin terms of the rectangle sum
    for every polynomial of degree below n.

    Args:
        n: Number of non-unit weights per corrected edge (1..6)

    Returns:
        Tuple of n weights
    """
    _check_order(n)
    powers = np.arange(n, dtype=float)
    nodes = np.arange(n, dtype=float)
    moments = nodes[np.newaxis, :] ** powers[:, np.newaxis]
    rhs = bernoulli(n)[1 : n + 1] / (powers + 1.0)
    corrections = np.linalg.solve(moments, rhs)
    coefficients = tuple(float(c) for c in 1.0 + corrections)

    tabulated = TABULATED_EDGES.get(n)
    if tabulated is not None:
        expected = np.array([float(c) for c in tabulated])
        if not np.allclose(coefficients, expected, rtol=0.0, atol=1e-13):
            raise QuadratureError(
                f"Generated Gregory weights for n={n} disagree with the tabulated ones",
                {"n": n, "generated": list(coefficients), "tabulated": expected.tolist()},
            )
    if min(coefficients) <= 0.0:
        raise QuadratureError(f"Non-positive Gregory weight for n={n}", {"n": n})

    logger.debug(f"Gregory edge weights n={n}: {coefficients}")
    return coefficients


def gregory_weights(n: int, M: int, sidedness: Sidedness = Sidedness.TWO_SIDED) -> WeightVector:
    """
    Build the Gregory weight vector of order n on M subintervals.

    One-sided rules correct a single edge and put unit weight on every node of the
    other one, endpoint included.

    Args:
        n: Correction count, 1..6
        M: Number of subintervals
        sidedness: Which edges carry corrections

    Returns:
        WeightVector of length M + 1

    Raises:
        QuadratureError: n out of range or M too small for non-overlapping corrections
    """
    _check_order(n)
    sidedness = Sidedness(sidedness)
    minimum = 2 * n if sidedness is Sidedness.TWO_SIDED else n
    if M < minimum:
        raise QuadratureError(
            f"M={M} cannot host order-{n} {sidedness.value} corrections (need M >= {minimum})",
            {"n": n, "M": M, "sidedness": sidedness.value},
        )

    edge = np.asarray(edge_coefficients(n))
    weights = np.ones(M + 1)
    if sidedness in (Sidedness.TWO_SIDED, Sidedness.LEFT_SIDED):
        weights[:n] = edge
    if sidedness in (Sidedness.TWO_SIDED, Sidedness.RIGHT_SIDED):
        weights[M - n + 1 :] = edge[::-1]
    weights.setflags(write=False)

    return WeightVector(n=n, sidedness=sidedness, weights=weights, exact_degree=exact_degree(n))


def integrate(samples: np.ndarray, h: float, w: WeightVector) -> complex:
    """Weighted sum h * sum_j w_j f_j."""
    samples = np.asarray(samples)
    if samples.shape != w.weights.shape:
        raise QuadratureError(
            f"Sample count {samples.size} does not match weight count {w.weights.size}",
            {"samples": samples.size, "weights": w.weights.size},
        )
    return h * np.dot(w.weights, samples)


def _check_order(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or not 1 <= n <= MAX_ORDER:
        raise QuadratureError(f"Gregory order must be in 1..{MAX_ORDER}, got {n}", {"n": n})


__all__ = [
    "MAX_ORDER",
    "WeightVector",
    "edge_coefficients",
    "exact_degree",
    "gregory_weights",
    "integrate",
]
