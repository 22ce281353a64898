"""
2x2-block Toeplitz systems and the block Levinson recursion.

Block vectors are arrays of shape (size, 2, k): block row, component, column. The
stacked layout used by the Woodbury step puts component 0 of every block first and
component 1 second, i.e. [Y1; JY2].
"""
import logging
from dataclasses import dataclass
from typing import Dict, Hashable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import LevinsonBreakdownError
from app.models.enums import Dispersion

logger = logging.getLogger(__name__)

_IDENTITY = np.eye(2, dtype=complex)


def block_inverse(block: np.ndarray) -> Tuple[Optional[np.ndarray], float]:
    """Closed-form inverse of a 2x2 block and its Frobenius condition estimate."""
    a, b, c, d = block.ravel()
    det = a * d - b * c
    if det == 0:
        return None, float("inf")
    inverse = np.array([[d, -b], [-c, a]], dtype=complex) / det
    return inverse, float(np.linalg.norm(block) * np.linalg.norm(inverse))


def symbol_blocks(
    tau_minus: np.ndarray, tau_plus: np.ndarray, dispersion: Dispersion, diagonal: bool = False
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Blocks t_{-d} and t_d built from the scalar symbol samples tau_{-d}, tau_d.

    t_d = [[delta, s * conj(tau_{-d})], [tau_d, delta]] with s = -1 for anomalous
    dispersion and delta = 1 only on the main diagonal.

    Args:
        tau_minus: Samples tau_{-d} (scalar or array)
        tau_plus: Samples tau_d, same shape as tau_minus
        dispersion: Selects the sign s
        diagonal: True when d = 0

    Returns:
        (lower, upper) arrays of shape (..., 2, 2)
    """
    tau_minus = np.asarray(tau_minus, dtype=complex)
    tau_plus = np.asarray(tau_plus, dtype=complex)
    sign = Dispersion(dispersion).sign
    delta = 1.0 if diagonal else 0.0

    upper = np.empty(tau_plus.shape + (2, 2), dtype=complex)
    upper[..., 0, 0] = delta
    upper[..., 1, 1] = delta
    upper[..., 0, 1] = sign * np.conj(tau_minus)
    upper[..., 1, 0] = tau_plus

    lower = np.empty_like(upper)
    lower[..., 0, 0] = delta
    lower[..., 1, 1] = delta
    lower[..., 0, 1] = sign * np.conj(tau_plus)
    lower[..., 1, 0] = tau_minus
    return lower, upper


@dataclass(frozen=True, eq=False)
class BlockToeplitzSystem:
    """Block Toeplitz operator whose (i, j) block is t_{j-i}."""

    lower: np.ndarray  # t_{-k}, k = 0..M
    upper: np.ndarray  # t_{k}, k = 0..M
    dispersion: Dispersion

    @classmethod
    def from_symbol(cls, symbol: np.ndarray, dispersion: Dispersion) -> "BlockToeplitzSystem":
        """Build from samples symbol[M + d] = tau_d, d = -M..M."""
        symbol = np.asarray(symbol, dtype=complex)
        M = (symbol.size - 1) // 2
        d = np.arange(M + 1)
        lower, upper = symbol_blocks(symbol[M - d], symbol[M + d], dispersion)
        lower[0], upper[0] = symbol_blocks(symbol[M], symbol[M], dispersion, diagonal=True)
        return cls(lower=lower, upper=upper, dispersion=Dispersion(dispersion))

    @property
    def size(self) -> int:
        return self.upper.shape[0]

    def blocks(self) -> np.ndarray:
        """All blocks ordered t_{-M}, ..., t_0, ..., t_M."""
        return np.concatenate([self.lower[:0:-1], self.upper])

    def dense(self) -> np.ndarray:
        """Interleaved dense matrix: rows 2i, 2i+1 hold block row i."""
        n = self.size
        offsets = np.subtract.outer(np.arange(n), np.arange(n))  # i - j
        blocks = self.blocks()[n - 1 - offsets]  # index of t_{j-i}
        return blocks.transpose(0, 2, 1, 3).reshape(2 * n, 2 * n)

    def matvec(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        flat = x.reshape(2 * self.size, -1)
        return (self.dense() @ flat).reshape(x.shape)


def to_stacked(x: np.ndarray) -> np.ndarray:
    """(size, 2[, k]) block vector -> (2 * size[, k]) stacked vector."""
    x = np.asarray(x)
    if x.ndim == 2:
        return x.T.reshape(-1)
    return x.transpose(1, 0, 2).reshape(2 * x.shape[0], x.shape[2])


def from_stacked(v: np.ndarray) -> np.ndarray:
    """Inverse of to_stacked."""
    v = np.asarray(v)
    size = v.shape[0] // 2
    if v.ndim == 1:
        return v.reshape(2, size).T
    return v.reshape(2, size, v.shape[1]).transpose(1, 0, 2)


class LevinsonState:
    """
    Block Levinson recursion for a non-Hermitian 2x2-block Toeplitz matrix.

    Keeps the monic forward predictor f (A f = [eps_f; 0; ...]), the monic backward
    predictor b (A b = [...; 0; eps_b]) and one solution per tracked right-hand side.
    Every right-hand side shares the predictor recursion, so extending by one block
    costs O(m) per tracked column.
    """

    def __init__(
        self,
        t0: np.ndarray,
        rhs: Optional[Mapping[Hashable, np.ndarray]] = None,
        condition_limit: Optional[float] = None,
    ):
        self.condition_limit = condition_limit or settings.CONDITION_LIMIT
        t0 = np.asarray(t0, dtype=complex)
        inverse = self._checked_inverse(t0, size=1)

        self._lower = t0[np.newaxis].copy()
        self._upper = t0[np.newaxis].copy()
        self.forward = _IDENTITY[np.newaxis].copy()
        self.backward = _IDENTITY[np.newaxis].copy()
        self.eps_f = t0.copy()
        self.eps_b = t0.copy()
        self._eps_f_inv = inverse
        self._eps_b_inv = inverse
        self.solutions: Dict[Hashable, np.ndarray] = {}
        for key, block in (rhs or {}).items():
            self.solutions[key] = (inverse @ _as_columns(block))[np.newaxis]

    @property
    def size(self) -> int:
        return self.forward.shape[0]

    @property
    def tracked_columns(self) -> int:
        return sum(x.shape[2] for x in self.solutions.values())

    def forward_solution(self) -> np.ndarray:
        """A^{-1} applied to the first block unit column pair."""
        return self.forward @ self._eps_f_inv

    def backward_solution(self) -> np.ndarray:
        """A^{-1} applied to the last block unit column pair."""
        return self.backward @ self._eps_b_inv

    def add_rhs(self, key: Hashable, solution: np.ndarray) -> None:
        """Start tracking a right-hand side whose current solution is already known."""
        solution = np.asarray(solution, dtype=complex)
        if solution.ndim == 2:
            solution = solution[..., np.newaxis]
        if solution.shape[:2] != (self.size, 2):
            raise ValueError(f"Solution shape {solution.shape} does not match size {self.size}")
        self.solutions[key] = solution

    def drop_rhs(self, key: Hashable) -> None:
        self.solutions.pop(key, None)

    def extend(
        self,
        lower_block: np.ndarray,
        upper_block: np.ndarray,
        rhs_blocks: Optional[Mapping[Hashable, np.ndarray]] = None,
    ) -> "LevinsonState":
        """
        Border the system with t_{-(m+1)}, t_{m+1} and one new block per right-hand side.

        Right-hand sides missing from rhs_blocks get a zero block.

        Raises:
            LevinsonBreakdownError: eps_f or eps_b of the bordered system is singular
        """
        rhs_blocks = rhs_blocks or {}
        unknown = set(rhs_blocks) - set(self.solutions)
        if unknown:
            raise ValueError(f"Right-hand sides {sorted(map(str, unknown))} are not tracked")

        m1 = self.size
        self._lower = np.concatenate([self._lower, np.asarray(lower_block, complex)[np.newaxis]])
        self._upper = np.concatenate([self._upper, np.asarray(upper_block, complex)[np.newaxis]])

        # row m+1 of the bordered matrix, restricted to columns 0..m
        row = self._lower[m1:0:-1].transpose(1, 0, 2).reshape(2, 2 * m1)
        # column 0 of the bordered matrix, rows 1..m+1
        col = self._upper[1:].transpose(1, 0, 2).reshape(2, 2 * m1)

        delta_f = row @ self.forward.reshape(2 * m1, 2)
        delta_b = col @ self.backward.reshape(2 * m1, 2)
        gamma_f = self._eps_b_inv @ delta_f
        gamma_b = self._eps_f_inv @ delta_b

        zero = np.zeros((1, 2, 2), dtype=complex)
        forward_ext = np.concatenate([self.forward, zero])
        backward_ext = np.concatenate([zero, self.backward])
        forward = forward_ext - backward_ext @ gamma_f
        backward = backward_ext - forward_ext @ gamma_b
        eps_f = self.eps_f - delta_b @ gamma_f
        eps_b = self.eps_b - delta_f @ gamma_b

        eps_f_inv = self._checked_inverse(eps_f, size=m1 + 1)
        eps_b_inv = self._checked_inverse(eps_b, size=m1 + 1)

        if self.solutions:
            keys = list(self.solutions)
            widths = [self.solutions[k].shape[2] for k in keys]
            x = np.concatenate([self.solutions[k] for k in keys], axis=2)
            theta = row @ x.reshape(2 * m1, x.shape[2])
            new_blocks = np.concatenate(
                [
                    _as_columns(rhs_blocks[k]) if k in rhs_blocks else np.zeros((2, w), complex)
                    for k, w in zip(keys, widths)
                ],
                axis=1,
            )
            coefficient = eps_b_inv @ (new_blocks - theta)
            x = np.concatenate([x, np.zeros((1, 2, x.shape[2]), complex)]) + backward @ coefficient
            for key, part in zip(keys, np.split(x, np.cumsum(widths)[:-1], axis=2)):
                self.solutions[key] = part

        self.forward, self.backward = forward, backward
        self.eps_f, self.eps_b = eps_f, eps_b
        self._eps_f_inv, self._eps_b_inv = eps_f_inv, eps_b_inv
        return self

    def _checked_inverse(self, block: np.ndarray, size: int) -> np.ndarray:
        inverse, condition = block_inverse(block)
        if inverse is None or condition > self.condition_limit:
            logger.error(f"Levinson breakdown at size {size}: condition {condition:.3e}")
            raise LevinsonBreakdownError(size=size, condition=condition)
        return inverse


def levinson_solve(
    system: BlockToeplitzSystem,
    rhs: Sequence[np.ndarray],
    condition_limit: Optional[float] = None,
) -> List[np.ndarray]:
    """
    Solve the block Toeplitz system for several right-hand sides at once.

    Args:
        system: The block Toeplitz operator
        rhs: Block vectors of shape (size, 2) or (size, 2, k)
        condition_limit: Breakdown threshold (defaults to settings.CONDITION_LIMIT)

    Returns:
        Solutions with the same shapes as the right-hand sides

    Raises:
        LevinsonBreakdownError: A leading block minor is numerically singular
    """
    vectors = [np.asarray(r, dtype=complex) for r in rhs]
    for v in vectors:
        if v.shape[:2] != (system.size, 2):
            raise ValueError(f"Right-hand side shape {v.shape} does not match size {system.size}")

    state = LevinsonState(
        system.upper[0], {i: v[0] for i, v in enumerate(vectors)}, condition_limit
    )
    for m in range(1, system.size):
        state.extend(system.lower[m], system.upper[m], {i: v[m] for i, v in enumerate(vectors)})

    return [
        state.solutions[i][..., 0] if v.ndim == 2 else state.solutions[i]
        for i, v in enumerate(vectors)
    ]


def levinson_extend(
    state: LevinsonState,
    new_blocks: Tuple[np.ndarray, np.ndarray],
    new_rhs_blocks: Optional[Mapping[Hashable, np.ndarray]] = None,
) -> LevinsonState:
    """Grow a Levinson state by one block row; new_blocks is (t_{-m-1}, t_{m+1})."""
    lower_block, upper_block = new_blocks
    return state.extend(lower_block, upper_block, new_rhs_blocks)


def _as_columns(block: np.ndarray) -> np.ndarray:
    block = np.asarray(block, dtype=complex)
    return block[:, np.newaxis] if block.ndim == 1 else block


__all__ = [
    "BlockToeplitzSystem",
    "LevinsonState",
    "block_inverse",
    "from_stacked",
    "levinson_extend",
    "levinson_solve",
    "symbol_blocks",
    "to_stacked",
]
