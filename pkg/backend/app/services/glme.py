"""
Discretised GLME: assembly, the inner-bordering sweep and potential extraction.

At sweep step m the time is t_m = T1 + m h/2 and the unknowns (Y1, JY2) solve a
(m+1)-block Toeplitz system whose symbol tau_d = h Omega(2 T1 - d h) does not depend
on m. Each step therefore borders one Levinson recursion by a single block and needs
exactly one new kernel value, Omega(2 T1 + m h).
"""
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Dict, Hashable, List, Optional, Union

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from app.core.config import settings
from app.core.exceptions import HgtibError, QuadratureError, SpectralDataError
from app.core.quadrature import WeightVector, gregory_weights
from app.core.toeplitz import (
    BlockToeplitzSystem,
    LevinsonState,
    from_stacked,
    symbol_blocks,
    to_stacked,
)
from app.core.woodbury import (
    CountingSolver,
    LowRankCorrection,
    ToeplitzSolver,
    build_correction,
    correction_positions,
    stacked_dense,
    woodbury_solve,
    woodbury_update,
)
from app.models.enums import Dispersion, KernelMode, SchemeFamily, Sidedness, SplitMode, SweepMode
from app.models.potential import RecoveredPotential
from app.models.scheme import GridConfig, SchemeSpec
from app.models.spectral import KernelTrack, SpectralData
from app.services.spectral import (
    CachedKernel,
    KernelEvaluator,
    advance_track,
    init_track,
    xi_weights,
)

logger = logging.getLogger(__name__)

_IDENTITY = np.eye(2, dtype=complex)


@dataclass(frozen=True, eq=False)
class GlmeSystem:
    """Weighted GLME at one time: B = A - U V acting on the stacked (Y1, JY2)."""

    toeplitz: BlockToeplitzSystem
    rhs: np.ndarray  # (M + 1, 2) blocks of (0, JF)
    weights: WeightVector
    correction: LowRankCorrection

    def dense(self) -> np.ndarray:
        return stacked_dense(self.toeplitz) - self.correction.U @ self.correction.V

    def stacked_rhs(self) -> np.ndarray:
        return to_stacked(self.rhs)


def assemble_system(kt: KernelTrack, w: WeightVector, dispersion: Dispersion) -> GlmeSystem:
    """
    Toeplitz form of the GLME for the track's time.

    T[i][j] = h omega[M - i + j], so the block symbol is h * omega, and the right-hand
    side block i is (0, -omega[M - i]).

    Raises:
        QuadratureError: Track and weight lengths disagree
    """
    if kt.omega.size != 2 * w.M + 1:
        raise QuadratureError(
            f"Track of {kt.omega.size} samples does not fit weights on M={w.M}",
            {"omega": int(kt.omega.size), "M": w.M},
        )
    toeplitz = BlockToeplitzSystem.from_symbol(kt.h * kt.omega, dispersion)
    rhs = np.zeros((w.M + 1, 2), dtype=complex)
    rhs[:, 1] = -kt.omega[w.M :: -1]
    return GlmeSystem(toeplitz=toeplitz, rhs=rhs, weights=w, correction=build_correction(w))


def hankel_system(kt: KernelTrack, w: WeightVector, dispersion: Dispersion):
    """
    Dense GLME in the original unknowns [X1; X2] with Hankel blocks H_ij = omega[i + j].

    [[E, s h conj(H) W], [h H W, E]] [X1; X2] = [0; F], F = -omega[0..M].
    """
    M = w.M
    index = np.arange(M + 1)
    H = kt.omega[np.add.outer(index, index)]
    W = np.diag(w.weights)
    sign = Dispersion(dispersion).sign
    E = np.eye(M + 1)
    matrix = np.block([[E, sign * kt.h * np.conj(H) @ W], [kt.h * H @ W, E]])
    rhs = np.concatenate([np.zeros(M + 1, dtype=complex), -kt.omega[: M + 1]])
    return matrix, rhs


def dense_potential(kt: KernelTrack, w: WeightVector, dispersion: Dispersion) -> complex:
    """q at the track's time from an LU solve of the Hankel form."""
    matrix, rhs = hankel_system(kt, w, dispersion)
    x = lu_solve(lu_factor(matrix), rhs)
    return potential_from_x2(x[w.M + 1], dispersion)


def extract_x2_at_origin(solution: np.ndarray, w: WeightVector) -> complex:
    """X2(0, t) from the block solution of (Y1, JY2): the last JY2 entry over w_0."""
    return complex(solution[-1, 1] / w.weights[0])


def potential_from_x2(x2: complex, dispersion: Dispersion) -> complex:
    """q = 2 X2 for anomalous dispersion, -2 X2 for normal."""
    return complex(-2.0 * Dispersion(dispersion).sign * x2)


def unit_weights(M: int, sidedness: Sidedness = Sidedness.TWO_SIDED) -> WeightVector:
    weights = np.ones(M + 1)
    weights.setflags(write=False)
    return WeightVector(n=0, sidedness=sidedness, weights=weights, exact_degree=0)


def step_order(scheme: SchemeSpec, m: int) -> int:
    """Largest correction count that fits m subintervals, capped at the scheme's n."""
    if scheme.sidedness is Sidedness.TWO_SIDED:
        return min(scheme.n, m // 2)
    return min(scheme.n, m)


def step_weights(scheme: SchemeSpec, m: int) -> WeightVector:
    n = step_order(scheme, m)
    if n == 0:
        return unit_weights(m, scheme.sidedness)
    return gregory_weights(n, m, scheme.sidedness)


class TimedKernel:
    """Counts kernel evaluations and the time spent in them."""

    def __init__(self, kernel: Callable[[np.ndarray], np.ndarray]):
        self._kernel = kernel
        self.seconds = 0.0
        self.values = 0

    def __call__(self, x):
        start = time.perf_counter()
        out = self._kernel(x)
        self.seconds += time.perf_counter() - start
        self.values += int(np.size(x))
        return out


@dataclass
class SweepResult:
    """Potential samples of one GLME sweep, t_m = T1 + m h/2 for m = 0..M."""

    t: np.ndarray
    q: np.ndarray
    diagnostics: Dict[str, Any] = field(default_factory=dict)


class GlmeSweep:
    """
    One left-GLME sweep from t = T1 over m = 0..M half-steps.

    Tracked right-hand sides of the shared Levinson state:
      "main"          the GLME right-hand side
      ("head", i)     unit columns of the fixed leading correction blocks i < n
      ("tail", m0)    A^{-1} e_{m0} seeded from the backward predictor at step m0 and
                      carried with zero new blocks while m0 stays a trailing block
    TIB tracks only "main" and takes its corner columns from the predictors.
    """

    def __init__(
        self,
        sd: SpectralData,
        t_start: float,
        h: float,
        M: int,
        scheme: SchemeSpec,
        sweep_mode: SweepMode = SweepMode.INCREMENTAL,
        kernel_mode: KernelMode = KernelMode.ON_DEMAND,
        condition_limit: Optional[float] = None,
        check_residuals: bool = False,
    ):
        if M < scheme.minimum_M:
            raise QuadratureError(
                f"GLME grid M={M} is too small for {scheme.name} (need {scheme.minimum_M})",
                {"M": M, "scheme": scheme.name},
            )
        self.sd = sd
        self.dispersion = sd.dispersion
        self.sign = sd.dispersion.sign
        self.t_start = t_start
        self.h = h
        self.M = M
        self.scheme = scheme
        self.sweep_mode = SweepMode(sweep_mode)
        self.kernel_mode = KernelMode(kernel_mode)
        self.condition_limit = condition_limit or settings.CONDITION_LIMIT
        self.check_residuals = check_residuals
        self.is_tib = scheme.family is SchemeFamily.TIB

        two_sided = scheme.sidedness is Sidedness.TWO_SIDED
        self.head_components = [0, 1] if two_sided else [0]
        self.tail_components = [0, 1] if two_sided else [1]

        self.xi_w = xi_weights(sd, scheme.n)
        # direct evaluations only; a cached lattice is filled through it inside run()
        self.timer = TimedKernel(KernelEvaluator(sd, self.xi_w))
        self.kernel: Callable[[np.ndarray], np.ndarray] = self.timer

    def _lattice(self) -> CachedKernel:
        """Omega(2 T1 + j h) for j = -2M..M: the initial track and every later value."""
        return CachedKernel(
            self.timer, 2.0 * self.t_start - 2 * self.M * self.h, self.h, 3 * self.M + 1
        )

    def run(self) -> SweepResult:
        start = time.perf_counter()
        if self.kernel_mode is KernelMode.CACHED:
            self.kernel = self._lattice()
        origin = init_track(self.sd, self.t_start, self.h, self.M, self.xi_w, kernel=self.kernel)
        # forward[j] = Omega(2 T1 + j h); origin.omega[k] = Omega(2 T1 - k h)
        self._backward = origin.omega
        self._forward = np.empty(self.M + 1, dtype=complex)

        track = origin
        q = np.empty(self.M + 1, dtype=complex)
        columns = np.zeros(self.M + 1, dtype=int)
        residuals = np.full(self.M + 1, np.nan)
        state: Optional[LevinsonState] = None

        for m in range(self.M + 1):
            if m > 0:
                track = advance_track(track, self.sd, kernel=self.kernel)
                # re-anchor so rounding in t does not accumulate over the sweep
                track.t = self.t_start + m * self.h / 2.0
            self._forward[m] = track.omega[0]
            w = step_weights(self.scheme, m)
            try:
                if self.sweep_mode is SweepMode.INCREMENTAL:
                    state = self._border(state, m)
                    x, columns[m] = self._incremental_solution(state, m, w)
                else:
                    x, columns[m] = self._resolve_solution(m, w)
            except HgtibError as e:
                t = self.t_start + m * self.h / 2.0
                e.details.update({"t": t, "step": m})
                logger.error(f"{self.scheme.name} sweep failed at t={t:.6g}: {e.message}")
                raise

            q[m] = potential_from_x2(extract_x2_at_origin(x, w), self.dispersion)
            if self.check_residuals:
                system = self.system_at(m, w)
                b = system.stacked_rhs()
                r = system.dense() @ to_stacked(x) - b
                residuals[m] = np.linalg.norm(r) / max(np.linalg.norm(b), 1e-300)

        total = time.perf_counter() - start
        t = self.t_start + 0.5 * self.h * np.arange(self.M + 1)
        logger.debug(
            f"{self.scheme.name} sweep over {self.M + 1} steps in {total:.3f}s "
            f"(kernel {self.timer.seconds:.3f}s, {self.timer.values} values)"
        )
        return SweepResult(
            t=t,
            q=q,
            diagnostics={
                "columns_per_step": columns,
                "residual": residuals,
                "kernel_values": self.timer.values,
                "kernel_time": self.timer.seconds,
                "sweep_time": total - self.timer.seconds,
            },
        )

    def track_at(self, m: int) -> KernelTrack:
        """The full kernel track at t_m, rebuilt from the values seen so far."""
        k = np.arange(2 * m + 1)
        omega = np.where(
            k <= m, self._forward[np.clip(m - k, 0, m)], self._backward[np.clip(k - m, 0, None)]
        )
        return KernelTrack(t=self.t_start + m * self.h / 2.0, h=self.h, omega=omega, M=m)

    def system_at(self, m: int, w: WeightVector) -> GlmeSystem:
        return assemble_system(self.track_at(m), w, self.dispersion)

    def _border(self, state: Optional[LevinsonState], m: int) -> LevinsonState:
        tau_minus = self.h * self._forward[m]
        tau_plus = self.h * self._backward[m]
        main = np.array([0.0, -self._forward[m]], dtype=complex)
        heads = self._head_keys()

        if state is None:
            _, t0 = symbol_blocks(tau_minus, tau_plus, self.dispersion, diagonal=True)
            rhs: Dict[Hashable, np.ndarray] = {"main": main}
            for key in heads:
                rhs[key] = self._head_block(key, 0)
            return LevinsonState(t0, rhs, self.condition_limit)

        lower, upper = symbol_blocks(tau_minus, tau_plus, self.dispersion)
        blocks: Dict[Hashable, np.ndarray] = {"main": main}
        for key in heads:
            if key[1] == m:
                blocks[key] = self._head_block(key, m)
        return state.extend(lower, upper, blocks)

    def _head_keys(self) -> List[Hashable]:
        if self.is_tib:
            return []
        return [("head", i) for i in range(self.scheme.n)]

    def _head_block(self, key, m: int) -> np.ndarray:
        block = _IDENTITY[:, self.head_components]
        return block if key[1] == m else np.zeros_like(block)

    def _incremental_solution(self, state: LevinsonState, m: int, w: WeightVector):
        x = state.solutions["main"][..., 0]
        n = w.n

        if self.is_tib:
            if n == 0:
                return x, 1
            return self._fold_corners(state, x, w), 5

        state.add_rhs(("tail", m), state.backward_solution()[:, :, self.tail_components])
        columns = state.tracked_columns
        if n > 0:
            positions, values = correction_positions(w)
            Z = np.column_stack([self._column(state, m, p) for p in positions])
            correction = LowRankCorrection.diagonal(2 * (m + 1), positions, values)
            x = from_stacked(woodbury_update(to_stacked(x), Z, correction, self.condition_limit))
        state.drop_rhs(("tail", m - self.scheme.n + 1))
        return x, columns

    def _column(self, state: LevinsonState, m: int, position: int) -> np.ndarray:
        """Stacked A^{-1} e_position from the tracked columns."""
        component, block = divmod(int(position), m + 1)
        if block < self.scheme.n and component in self.head_components:
            solution = state.solutions[("head", block)][..., self.head_components.index(component)]
        else:
            solution = state.solutions[("tail", block)][..., self.tail_components.index(component)]
        return to_stacked(solution)

    def _fold_corners(self, state: LevinsonState, x: np.ndarray, w: WeightVector) -> np.ndarray:
        """Trapezoid corner weights applied through the forward and backward predictors."""
        m = w.M
        first = state.forward_solution()
        last = state.backward_solution()
        positions, values = correction_positions(w)
        columns = []
        for position in positions:
            component, block = divmod(int(position), m + 1)
            columns.append(to_stacked((first if block == 0 else last)[:, :, component]))
        Z = np.column_stack(columns)
        correction = LowRankCorrection.diagonal(2 * (m + 1), positions, values)
        return from_stacked(woodbury_update(to_stacked(x), Z, correction, self.condition_limit))

    def _resolve_solution(self, m: int, w: WeightVector):
        system = self.system_at(m, w)
        if self.is_tib:
            state = LevinsonState(
                system.toeplitz.upper[0], {"main": system.rhs[0]}, self.condition_limit
            )
            for k in range(1, m + 1):
                state.extend(
                    system.toeplitz.lower[k], system.toeplitz.upper[k], {"main": system.rhs[k]}
                )
            x = state.solutions["main"][..., 0]
            if w.n == 0:
                return x, 1
            return self._fold_corners(state, x, w), 5

        solver = CountingSolver(ToeplitzSolver(system.toeplitz, self.condition_limit))
        x = woodbury_solve(solver, system.correction, system.stacked_rhs(), self.condition_limit)
        return from_stacked(x), solver.columns


def _as_scheme(scheme: Union[SchemeSpec, SchemeFamily, str]) -> SchemeSpec:
    return scheme if isinstance(scheme, SchemeSpec) else SchemeSpec.from_family(scheme)


def recover(
    sd_left: SpectralData,
    sd_right: Optional[SpectralData],
    grid: GridConfig,
    scheme: Union[SchemeSpec, SchemeFamily, str],
    sweep_mode: SweepMode = SweepMode.INCREMENTAL,
    kernel_mode: KernelMode = KernelMode.ON_DEMAND,
    condition_limit: Optional[float] = None,
    check_residuals: bool = False,
    reference: Optional[np.ndarray] = None,
) -> RecoveredPotential:
    """
    Recover q on the output grid from left (and right) spectral data.

    In split_at_zero mode the left GLME gives t <= 0 and the right half comes from a
    left sweep over the time-reversed signal's data, flipped back:
    q(t_{M_out - m}) = q_reversed(t_m).

    Args:
        sd_left: Left spectral data of q
        sd_right: Left spectral data of q(-t); required in split_at_zero mode
        grid: Output grid and GLME discretisation
        scheme: TIB, Gn or Gnd
        sweep_mode: Bordering sweep or from-scratch solves at every t
        kernel_mode: Kernel values on demand or from a precomputed lattice
        condition_limit: Breakdown threshold for Levinson and Woodbury
        check_residuals: Record the dense residual at every step (small grids only)
        reference: Exact samples attached to the result for error evaluation

    Returns:
        RecoveredPotential of M_out + 1 samples

    Raises:
        SpectralDataError: Right data missing in split mode, or dispersions disagree
        ConfigurationError: Grid too small for the scheme
        LevinsonBreakdownError: A leading minor broke down (details carry t)
        CapacitySingularError: A Woodbury capacity matrix is singular (details carry t)
    """
    scheme = _as_scheme(scheme)
    grid.check_scheme(scheme)
    split = grid.split is SplitMode.SPLIT_AT_ZERO
    if split:
        if sd_right is None:
            raise SpectralDataError("split_at_zero recovery needs right spectral data")
        if sd_right.dispersion is not sd_left.dispersion:
            raise SpectralDataError(
                "Left and right spectral data disagree on dispersion",
                {"left": sd_left.dispersion.value, "right": sd_right.dispersion.value},
            )

    options = dict(
        sweep_mode=sweep_mode,
        kernel_mode=kernel_mode,
        condition_limit=condition_limit,
        check_residuals=check_residuals,
    )
    left = GlmeSweep(sd_left, grid.t_start, grid.h, grid.M, scheme, **options).run()
    q = np.empty(grid.M_out + 1, dtype=complex)
    diagnostics: Dict[str, Any] = {"left": left.diagnostics}

    if split:
        right = GlmeSweep(sd_right, grid.t_start, grid.h, grid.M, scheme, **options).run()
        q[: grid.M + 1] = left.q
        q[grid.M_out : grid.M : -1] = right.q[: grid.M]
        diagnostics["right"] = right.diagnostics
    else:
        q[:] = left.q

    sweeps = list(diagnostics.values())
    diagnostics["kernel_time"] = sum(d["kernel_time"] for d in sweeps)
    diagnostics["sweep_time"] = sum(d["sweep_time"] for d in sweeps)
    logger.info(
        f"Recovered {scheme.name} on M_out={grid.M_out}: sweep {diagnostics['sweep_time']:.3f}s, "
        f"kernel {diagnostics['kernel_time']:.3f}s"
    )
    return RecoveredPotential(
        t_grid=grid.t_grid, q=q, scheme=scheme, diagnostics=diagnostics, reference=reference
    )


def recover_reference_tib(
    sd_left: SpectralData,
    sd_right: Optional[SpectralData],
    grid: GridConfig,
    **kwargs,
) -> RecoveredPotential:
    """Second-order trapezoid baseline without the Woodbury correction."""
    return recover(sd_left, sd_right, grid, SchemeSpec.from_family(SchemeFamily.TIB), **kwargs)


def write_potential_csv(potential: RecoveredPotential, path: Union[str, Path]) -> Path:
    """Columns t, re_q, im_q, abs_q and eps when a reference is attached."""
    return potential.write_csv(path)


__all__ = [
    "GlmeSweep",
    "GlmeSystem",
    "SweepResult",
    "assemble_system",
    "dense_potential",
    "extract_x2_at_origin",
    "hankel_system",
    "potential_from_x2",
    "recover",
    "recover_reference_tib",
    "step_order",
    "step_weights",
    "unit_weights",
    "write_potential_csv",
]
