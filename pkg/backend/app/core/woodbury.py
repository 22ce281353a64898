"""
Low-rank weight corrections and the Woodbury solve.

The weighted GLME matrix differs from its unit-weight Toeplitz counterpart A only on
the diagonal entries whose Gregory weight is not one: B = A - U V with U = [e_p] and
V = diag(1 - 1/w_p) U^T. Vectors use the stacked layout [Y1; JY2], so component 1 of
block i carries the weight w_{M-i}.
"""
import logging
from dataclasses import dataclass, field
from typing import Optional, Protocol

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from app.core.config import settings
from app.core.exceptions import CapacitySingularError
from app.core.quadrature import WeightVector
from app.core.toeplitz import BlockToeplitzSystem, from_stacked, levinson_solve, to_stacked

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class LowRankCorrection:
    """
    Rank-r term U V subtracted from A.

    Gregory corrections are diagonal: U holds unit columns at `positions` and V scales
    the same rows by `values`. General factors leave positions unset.
    """

    U: np.ndarray
    V: np.ndarray
    positions: Optional[np.ndarray] = None
    values: Optional[np.ndarray] = None

    @property
    def rank(self) -> int:
        return int(self.U.shape[1])

    @property
    def is_diagonal(self) -> bool:
        return self.positions is not None

    def project(self, x: np.ndarray) -> np.ndarray:
        """V x for a vector or a matrix of columns."""
        if self.is_diagonal:
            return self.values.reshape((-1,) + (1,) * (x.ndim - 1)) * x[self.positions]
        return self.V @ x

    @classmethod
    def diagonal(cls, size: int, positions: np.ndarray, values: np.ndarray) -> "LowRankCorrection":
        positions = np.asarray(positions, dtype=int)
        values = np.asarray(values, dtype=complex)
        U = np.zeros((size, positions.size), dtype=complex)
        U[positions, np.arange(positions.size)] = 1.0
        return cls(U=U, V=values[:, np.newaxis] * U.T, positions=positions, values=values)


def correction_positions(w: WeightVector) -> tuple:
    """Stacked positions and values 1 - 1/w of the non-unit weights, both components."""
    size = w.M + 1
    nonunit = w.nonunit_positions()
    positions = np.concatenate([nonunit, size + (w.M - nonunit)])
    values = np.concatenate([1.0 - 1.0 / w.weights[nonunit]] * 2)
    order = np.argsort(positions, kind="stable")
    return positions[order], values[order]


def build_correction(w: WeightVector, M: Optional[int] = None) -> LowRankCorrection:
    """
    Collect the non-unit weights of w as a diagonal low-rank correction.

    A two-sided rule of order n gives rank 4n, a one-sided rule rank 2n and TIB rank 4.
    """
    if M is not None and M != w.M:
        raise ValueError(f"Weight vector spans M={w.M}, not {M}")
    positions, values = correction_positions(w)
    return LowRankCorrection.diagonal(2 * (w.M + 1), positions, values)


class LinearSolver(Protocol):
    """Applies A^{-1} to stacked right-hand sides of shape (2N,) or (2N, k)."""

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        ...


class DenseSolver:
    """LU factorisation of an explicit matrix."""

    def __init__(self, matrix: np.ndarray):
        self._factor = lu_factor(np.asarray(matrix, dtype=complex))

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return lu_solve(self._factor, np.asarray(rhs, dtype=complex))


class ToeplitzSolver:
    """Block Levinson solver in the stacked layout."""

    def __init__(self, system: BlockToeplitzSystem, condition_limit: Optional[float] = None):
        self.system = system
        self.condition_limit = condition_limit

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        (solution,) = levinson_solve(
            self.system, [from_stacked(np.asarray(rhs, dtype=complex))], self.condition_limit
        )
        return to_stacked(solution)


@dataclass
class CountingSolver:
    """Wraps a solver and counts how many columns it was asked to solve."""

    inner: LinearSolver
    calls: int = 0
    columns: int = field(default=0)

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        rhs = np.asarray(rhs)
        self.calls += 1
        self.columns += 1 if rhs.ndim == 1 else rhs.shape[1]
        return self.inner.solve(rhs)


def stacked_dense(system: BlockToeplitzSystem) -> np.ndarray:
    """The Toeplitz operator as a dense matrix in the stacked layout."""
    n = system.size
    perm = np.concatenate([2 * np.arange(n), 2 * np.arange(n) + 1])
    return system.dense()[np.ix_(perm, perm)]


def woodbury_update(
    y: np.ndarray,
    Z: np.ndarray,
    correction: LowRankCorrection,
    condition_limit: Optional[float] = None,
) -> np.ndarray:
    """
    Steps 3 and 4: turn y = A^{-1} b into (A - U V)^{-1} b given Z = A^{-1} U.

    Raises:
        CapacitySingularError: The r x r capacity matrix is numerically singular
    """
    if correction.rank == 0:
        return y
    limit = condition_limit or settings.CONDITION_LIMIT
    y = np.asarray(y)

    capacity = np.eye(correction.rank, dtype=complex) - correction.project(Z)
    condition = float(np.linalg.cond(capacity))
    if not np.isfinite(condition) or condition > limit:
        logger.error(f"Woodbury capacity singular: rank {correction.rank}, cond {condition:.3e}")
        raise CapacitySingularError(rank=correction.rank, condition=condition)

    z = lu_solve(lu_factor(capacity), correction.project(y))
    return y + Z @ z


def woodbury_solve(
    solver: LinearSolver,
    correction: LowRankCorrection,
    b: np.ndarray,
    condition_limit: Optional[float] = None,
) -> np.ndarray:
    """
    Solve (A - U V) x = b with a single A-solve over r + 1 columns.

    Args:
        solver: Applies A^{-1}
        correction: The rank-r term
        b: Right-hand side
        condition_limit: Capacity condition threshold

    Returns:
        The solution x
    """
    b = np.asarray(b, dtype=complex)
    solved = solver.solve(np.column_stack([b, correction.U]))
    return woodbury_update(solved[:, 0], solved[:, 1:], correction, condition_limit)


__all__ = [
    "CountingSolver",
    "DenseSolver",
    "LinearSolver",
    "LowRankCorrection",
    "ToeplitzSolver",
    "build_correction",
    "correction_positions",
    "stacked_dense",
    "woodbury_solve",
    "woodbury_update",
]
