"""
Independent forward Zakharov-Shabat scattering.

psi' = [[-i zeta, q], [s conj(q), i zeta]] psi with s = -1 (anomalous) or +1 (normal).
The Jost solution phi -> (exp(-i zeta t), 0) at -inf and (a exp(-i zeta t), b exp(i zeta t))
at +inf. Left data are l(xi) = conj(b) / a and l_n = 1 / (b_n a'(zeta_n)).

At an eigenvalue phi = b_n psi with psi -> (0, exp(i zeta t)) at +inf. Bound-state
quantities come from phi integrated forward and psi backward to the signal peak.

Nothing here is shared with the GLME solver.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.integrate import solve_ivp

from app.core.config import settings
from app.core.exceptions import NewtonConvergenceError, OracleError
from app.models.enums import Dispersion, ScatterMethod, Side, SignalKind
from app.models.signal import ClosedForm, ScatteringResult, SignalSamples
from app.models.spectral import DiscretePair, SpectralData

logger = logging.getLogger(__name__)

# Cell count of the cheap model used for eigenvalue seeding and counting
SEED_CELLS = 4096
# Spectral points per ODE integration
ODE_CHUNK = 128
# Below this |x| the sinh-type ratios use their Taylor series
SERIES_CUTOFF = 1e-3

Evaluation = Tuple[np.ndarray, np.ndarray, np.ndarray]
# (v1, v2, dv1, dv2) of one Jost solution at one time
Propagated = Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]


def make_signal(tag: ClosedForm, L: float, M_out: int) -> SignalSamples:
    """Sample a closed-form signal on t_j = -L/2 + j L / M_out, j = 0..M_out."""
    t = -L / 2.0 + (L / M_out) * np.arange(M_out + 1)
    return SignalSamples(t_grid=t, q=np.asarray(tag(t), dtype=complex), closed_form=tag)


def boundary_warnings(signal: SignalSamples, tol: Optional[float] = None) -> List[str]:
    tol = settings.BOUNDARY_TOL if tol is None else tol
    peak = float(np.max(np.abs(signal.q))) if signal.q.size else 0.0
    edge = max(abs(signal.q[0]), abs(signal.q[-1]))
    if peak > 0 and edge > tol * peak:
        message = f"Signal does not decay at the boundary: |q| = {edge:.3e} vs peak {peak:.3e}"
        logger.warning(message)
        return [message]
    return []


def _s1(x: np.ndarray) -> np.ndarray:
    """sinh(x) / x."""
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    x2 = x * x
    return np.where(small, 1.0 + x2 / 6.0 + x2 * x2 / 120.0, np.sinh(safe) / safe)


def _s3(x: np.ndarray) -> np.ndarray:
    """(x cosh x - sinh x) / x^3."""
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    x2 = x * x
    series = 1.0 / 3.0 + x2 / 30.0 + x2 * x2 / 840.0
    return np.where(small, series, (safe * np.cosh(safe) - np.sinh(safe)) / safe**3)


def _propagate_cells(
    q: np.ndarray,
    step: float,
    zeta: np.ndarray,
    sign: int,
    start: Tuple[complex, complex],
    derivative: bool,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Carry (v1, v2) and d/dzeta through exp(step P_j) for the cells of q in the given order.

    A negative step runs the cells right to left with the inverse exponentials.
    """
    v1 = np.full_like(zeta, start[0])
    v2 = np.full_like(zeta, start[1])
    dv1 = np.zeros_like(zeta)
    dv2 = np.zeros_like(zeta)
    i_zeta = 1j * zeta
    tau = abs(step)

    with np.errstate(over="ignore", invalid="ignore"):
        for qj in np.asarray(q, dtype=complex):
            x = tau * np.sqrt(-zeta * zeta + sign * abs(qj) ** 2)
            cosh = np.cosh(x)
            ss1 = step * _s1(x)
            e11 = cosh - i_zeta * ss1
            e22 = cosh + i_zeta * ss1
            e12 = ss1 * qj
            e21 = ss1 * sign * np.conj(qj)
            if derivative:
                d_cosh = -zeta * step * ss1
                d_ss1 = -zeta * step**3 * _s3(x)
                d11 = d_cosh - i_zeta * d_ss1 - 1j * ss1
                d22 = d_cosh + i_zeta * d_ss1 + 1j * ss1
                d12 = d_ss1 * qj
                d21 = d_ss1 * sign * np.conj(qj)
                dv1, dv2 = (
                    d11 * v1 + d12 * v2 + e11 * dv1 + e12 * dv2,
                    d21 * v1 + d22 * v2 + e21 * dv1 + e22 * dv2,
                )
            v1, v2 = e11 * v1 + e12 * v2, e21 * v1 + e22 * v2
    return v1, v2, dv1, dv2


def match_jost(left: Propagated, right: Propagated) -> Evaluation:
    """
    a, b_n and da/dzeta from Jost-normalised values meeting at one time t0.

    `left` is phi started as (1, 0) at the left edge, `right` is psi started as (0, 1) at
    the right edge. a is their Wronskian. b is only meaningful where a vanishes: there
    phi = b psi, and the ratio is taken in the better-conditioned component.
    """
    v1, v2, dv1, dv2 = left
    w1, w2, dw1, dw2 = right
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        a = v1 * w2 - v2 * w1
        da = dv1 * w2 + v1 * dw2 - dv2 * w1 - v2 * dw1
        first = np.abs(v1 * w1) >= np.abs(v2 * w2)
        b = np.where(first, v1 / w1, v2 / w2)
    return a, b, da


def transfer_matrix_scatter(
    q: np.ndarray,
    tau: float,
    t_first: float,
    zeta: np.ndarray,
    dispersion: Dispersion,
    derivative: bool = False,
    match_cell: Optional[int] = None,
) -> Evaluation:
    """
    a, b (and da/dzeta) from the product of exact exponentials of piecewise-constant cells.

    Cell j has value q[j] and is centred on t_first + j tau. With `match_cell` set, phi
    runs over the cells left of that boundary and psi back over the rest, and b holds
    the bound-state coefficient b_n (see `match_jost`).

    Returns:
        (a, b, da) arrays shaped like zeta; da is zeros unless derivative is set
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    q = np.asarray(q, dtype=complex)
    sign = Dispersion(dispersion).sign
    t_a = t_first - tau / 2.0
    t_b = t_first + (len(q) - 0.5) * tau

    if match_cell is None:
        v1, v2, dv1, dv2 = _propagate_cells(q, tau, zeta, sign, (1.0, 0.0), derivative)
        span = t_b - t_a
        with np.errstate(over="ignore", invalid="ignore"):
            phase = np.exp(1j * zeta * span)
            a = v1 * phase
            b = v2 * np.exp(-1j * zeta * (t_a + t_b))
            da = (dv1 + 1j * span * v1) * phase if derivative else np.zeros_like(a)
        return a, b, da

    t0 = t_a + match_cell * tau
    v1, v2, dv1, dv2 = _propagate_cells(q[:match_cell], tau, zeta, sign, (1.0, 0.0), derivative)
    u1, u2, du1, du2 = _propagate_cells(
        q[match_cell:][::-1], -tau, zeta, sign, (0.0, 1.0), derivative
    )
    # raw products to Jost-normalised values at t0
    with np.errstate(over="ignore", invalid="ignore"):
        p1 = np.exp(1j * zeta * (t0 - t_a))
        p2 = np.exp(-1j * zeta * (t0 + t_a))
        r1 = np.exp(1j * zeta * (t0 + t_b))
        r2 = np.exp(1j * zeta * (t_b - t0))
        left = (
            v1 * p1,
            v2 * p2,
            (dv1 + 1j * (t0 - t_a) * v1) * p1,
            (dv2 - 1j * (t0 + t_a) * v2) * p2,
        )
        right = (
            u1 * r1,
            u2 * r2,
            (du1 + 1j * (t0 + t_b) * u1) * r1,
            (du2 + 1j * (t_b - t0) * u2) * r2,
        )
    a, b, da = match_jost(left, right)
    return a, b, (da if derivative else np.zeros_like(a))


def _ode_propagate(
    signal: Callable[[np.ndarray], np.ndarray],
    t_from: float,
    t_to: float,
    zeta: np.ndarray,
    sign: int,
    start: Tuple[complex, complex],
    derivative: bool,
    rtol: float,
    atol: float,
) -> Propagated:
    """
    Jost-normalised values v(t_to) and dv/dzeta from v(t_from) = start, in either direction.

    v1' = q exp(2i zeta t) v2, v2' = s conj(q) exp(-2i zeta t) v1.
    """
    v1 = np.empty_like(zeta)
    v2 = np.empty_like(zeta)
    dv1 = np.zeros_like(zeta)
    dv2 = np.zeros_like(zeta)
    if t_from == t_to:
        v1[:], v2[:] = start
        return v1, v2, dv1, dv2

    for begin in range(0, zeta.size, ODE_CHUNK):
        z = zeta[begin : begin + ODE_CHUNK]
        k = z.size

        def rhs(t, y, z=z, k=k):
            qt = complex(signal(np.asarray(t)))
            up = qt * np.exp(2j * z * t)
            down = sign * np.conj(qt) * np.exp(-2j * z * t)
            y1, y2 = y[:k], y[k : 2 * k]
            out = [up * y2, down * y1]
            if derivative:
                dy1, dy2 = y[2 * k : 3 * k], y[3 * k :]
                out += [up * (2j * t * y2 + dy2), down * (-2j * t * y1 + dy1)]
            return np.concatenate(out)

        y0 = np.zeros((4 if derivative else 2) * k, dtype=complex)
        y0[:k], y0[k : 2 * k] = start
        solution = solve_ivp(rhs, (t_from, t_to), y0, method="DOP853", rtol=rtol, atol=atol)
        if not solution.success:
            raise OracleError(f"ODE scattering failed: {solution.message}")
        end = solution.y[:, -1]
        v1[begin : begin + k] = end[:k]
        v2[begin : begin + k] = end[k : 2 * k]
        if derivative:
            dv1[begin : begin + k] = end[2 * k : 3 * k]
            dv2[begin : begin + k] = end[3 * k :]
    return v1, v2, dv1, dv2


def ode_scatter(
    signal: Callable[[np.ndarray], np.ndarray],
    t_a: float,
    t_b: float,
    zeta: np.ndarray,
    dispersion: Dispersion,
    derivative: bool = False,
    rtol: Optional[float] = None,
    atol: Optional[float] = None,
    t_match: Optional[float] = None,
) -> Evaluation:
    """
    a, b (and da/dzeta) by DOP853 on the Jost-normalised system.

    Without `t_match`, v runs from (1, 0) at t_a to t_b and a = v1(t_b), b = v2(t_b).
    With it, phi runs forward and psi backward to t_match and b is the bound-state
    coefficient b_n (see `match_jost`).
    """
    zeta = np.atleast_1d(np.asarray(zeta, dtype=complex))
    sign = Dispersion(dispersion).sign
    tolerances = dict(
        rtol=settings.SCATTER_RTOL if rtol is None else rtol,
        atol=settings.SCATTER_ATOL if atol is None else atol,
    )
    if t_match is None:
        v1, v2, dv1, _ = _ode_propagate(
            signal, t_a, t_b, zeta, sign, (1.0, 0.0), derivative, **tolerances
        )
        return v1, v2, dv1

    left = _ode_propagate(signal, t_a, t_match, zeta, sign, (1.0, 0.0), derivative, **tolerances)
    right = _ode_propagate(signal, t_b, t_match, zeta, sign, (0.0, 1.0), derivative, **tolerances)
    return match_jost(left, right)


def peak_index(signal: SignalSamples) -> int:
    """Sample index of max |q|, where the two halves of a bound-state match are joined."""
    return int(np.argmax(np.abs(signal.q)))


def scatter_model(
    signal: SignalSamples, dispersion: Dispersion, method: ScatterMethod, match: bool = False
) -> Callable[[np.ndarray, bool], Evaluation]:
    """
    Bind a signal to one integrator; returns evaluate(zeta, derivative).

    With `match` set the two Jost solutions meet at the signal peak, which keeps a, da and
    the bound-state coefficient accurate at eigenvalues far up the imaginary axis.
    """
    method = ScatterMethod(method)
    closed_form = signal.closed_form
    if method is ScatterMethod.ODE and (
        closed_form is None or SignalKind(closed_form.kind) is SignalKind.RECTANGLE
    ):
        logger.debug("ODE scattering needs a smooth closed form; using the transfer matrix")
        method = ScatterMethod.TRANSFER_MATRIX

    peak = peak_index(signal) if match else None
    if method is ScatterMethod.ODE:
        t_a, t_b = float(signal.t_grid[0]), float(signal.t_grid[-1])
        t_match = float(signal.t_grid[peak]) if peak is not None else None
        return lambda zeta, derivative=False: ode_scatter(
            closed_form, t_a, t_b, zeta, dispersion, derivative, t_match=t_match
        )
    tau, t_first = signal.tau, float(signal.t_grid[0])
    return lambda zeta, derivative=False: transfer_matrix_scatter(
        signal.q, tau, t_first, zeta, dispersion, derivative, match_cell=peak
    )


def coarse_signal(signal: SignalSamples, cells: int = SEED_CELLS) -> SignalSamples:
    """At most `cells` samples of the same signal, for cheap seeding."""
    if signal.M_out + 1 <= cells:
        return signal
    if signal.closed_form is not None:
        return make_signal(signal.closed_form, signal.L, cells - 1)
    stride = int(np.ceil((signal.M_out + 1) / cells))
    return SignalSamples(t_grid=signal.t_grid[::stride], q=signal.q[::stride])


@dataclass
class EigenSearchReport:
    """Outcome of one eigenvalue search."""

    pairs: List[DiscretePair] = field(default_factory=list)
    expected_count: Optional[int] = None
    failures: List[Dict[str, Any]] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)


def default_search_box(
    signal: SignalSamples, halfwidth: Optional[float] = None
) -> Tuple[float, float, float]:
    """(re_halfwidth, im_low, im_high) with im_high = max |q|."""
    halfwidth = settings.EIGEN_RE_HALFWIDTH if halfwidth is None else halfwidth
    im_high = float(np.max(np.abs(signal.q)))
    return halfwidth, min(0.05, im_high / 4.0), im_high


def count_zeros(
    evaluate: Callable[..., Evaluation], box: Tuple[float, float, float], points: int = 512
) -> int:
    """Zeros of a inside the box by the argument principle."""
    halfwidth, im_low, im_high = box
    re = np.linspace(-halfwidth, halfwidth, points)
    im = np.linspace(im_low, im_high, points // 2)
    contour = np.concatenate(
        [
            re + 1j * im_low,
            halfwidth + 1j * im[1:],
            re[::-1][1:] + 1j * im_high,
            -halfwidth + 1j * im[::-1][1:],
        ]
    )
    a, _, _ = evaluate(contour)
    phase = np.unwrap(np.angle(np.append(a, a[0])))
    winding = (phase[-1] - phase[0]) / (2.0 * np.pi)
    if abs(winding - round(winding)) > 0.1:
        logger.warning(f"Argument-principle winding {winding:.3f} is not close to an integer")
    return int(round(winding))


def newton(
    evaluate: Callable[..., Evaluation],
    seeds: np.ndarray,
    tol: float,
    max_iter: int,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """
    Vectorised Newton iteration on a(zeta) = 0.

    Iterates leaving the upper half-plane are frozen as failed.

    Returns:
        (roots, residuals |a|, converged mask, iteration counts)
    """
    z = np.asarray(seeds, dtype=complex).copy()
    residual = np.full(z.shape, np.inf)
    converged = np.zeros(z.shape, dtype=bool)
    alive = np.ones(z.shape, dtype=bool)
    iterations = np.zeros(z.shape, dtype=int)

    for step in range(max_iter + 1):
        active = alive & ~converged
        if not active.any():
            break
        with np.errstate(over="ignore", invalid="ignore"):
            a, _, da = evaluate(z[active], True)
        residual[active] = np.abs(a)
        done = np.abs(a) <= tol
        index = np.flatnonzero(active)
        converged[index[done]] = True
        if step == max_iter:
            break
        moving = index[~done]
        with np.errstate(over="ignore", divide="ignore", invalid="ignore"):
            z[moving] = z[moving] - a[~done] / da[~done]
        iterations[moving] += 1
        escaped = ~np.isfinite(z[moving]) | (z[moving].imag <= 0)
        alive[moving[escaped]] = False
    return z, residual, converged, iterations


def norming_constant(b_n: complex, da: complex) -> complex:
    """
    l_n = 1 / (b_n a'(zeta_n)).

    Raises:
        OracleError: b_n or a' is zero or not finite
    """
    product = b_n * da
    if not np.isfinite(product) or product == 0:
        raise OracleError(
            f"Norming constant undefined: b_n = {b_n:.3e}, a' = {da:.3e}",
            {"b_n": [b_n.real, b_n.imag], "da": [da.real, da.imag]},
        )
    return 1.0 / product


def _unique(roots: np.ndarray, tol: float = 1e-6) -> List[complex]:
    kept: List[complex] = []
    for root in roots:
        if all(abs(root - other) > tol * max(1.0, abs(other)) for other in kept):
            kept.append(complex(root))
    return kept


def find_eigenvalues(
    sig: SignalSamples,
    dispersion: Dispersion,
    search_box: Optional[Tuple[float, float, float]] = None,
    method: ScatterMethod = ScatterMethod.TRANSFER_MATRIX,
    tol: Optional[float] = None,
    max_iter: Optional[int] = None,
    seed_step: Optional[float] = None,
) -> EigenSearchReport:
    """
    Zeros of a(zeta) in the upper half-plane with their norming constants.

    Seeds run on a coarse transfer-matrix model; roots are polished with `method` to
    |a| <= tol. Polishing failures are reported per root, not raised.
    """
    report = EigenSearchReport()
    if Dispersion(dispersion) is Dispersion.NORMAL or not np.any(sig.q):
        report.expected_count = 0
        return report

    tol = settings.NEWTON_TOL if tol is None else tol
    max_iter = settings.NEWTON_MAX_ITER if max_iter is None else max_iter
    step = settings.EIGEN_SEED_STEP if seed_step is None else seed_step
    box = search_box or default_search_box(sig)
    halfwidth, im_low, im_high = box

    coarse = scatter_model(
        coarse_signal(sig), dispersion, ScatterMethod.TRANSFER_MATRIX, match=True
    )
    report.expected_count = count_zeros(coarse, box)

    re_seeds = np.arange(-halfwidth, halfwidth + step / 2, step)
    im_seeds = np.arange(im_low + step / 2, im_high + step / 2, step)
    seeds = (re_seeds[np.newaxis, :] + 1j * im_seeds[:, np.newaxis]).ravel()
    roots, _, converged, _ = newton(coarse, seeds, 1e-8, max_iter)
    inside = (
        converged
        & (np.abs(roots.real) <= halfwidth)
        & (roots.imag > 0)
        & (roots.imag <= im_high)
    )
    candidates = _unique(roots[inside], tol=1e-4)
    logger.debug(f"{len(candidates)} eigenvalue candidates from {seeds.size} seeds")

    if candidates:
        fine = scatter_model(sig, dispersion, method, match=True)
        polished, residual, ok, iterations = newton(fine, np.array(candidates), tol, max_iter)
        for seed, root, res, good, its in zip(candidates, polished, residual, ok, iterations):
            if not good:
                error = NewtonConvergenceError(seed=seed, iterations=int(its), residual=float(res))
                logger.warning(error.message)
                report.failures.append(error.to_dict())
                continue
            _, b, da = fine(np.array([root]), True)
            try:
                norm = norming_constant(complex(b[0]), complex(da[0]))
            except OracleError as e:
                e.details["zeta"] = [float(root.real), float(root.imag)]
                logger.warning(e.message)
                report.failures.append(e.to_dict())
                continue
            report.pairs.append(DiscretePair(zeta=complex(root), norm=norm))

    distinct: List[DiscretePair] = []
    for pair in report.pairs:
        scale = 1e-6 * max(1.0, abs(pair.zeta))
        if all(abs(pair.zeta - other.zeta) > scale for other in distinct):
            distinct.append(pair)
    report.pairs = sorted(distinct, key=lambda p: -complex(p.zeta).imag)
    if len(report.pairs) != report.expected_count:
        message = (
            f"Found {len(report.pairs)} eigenvalues, argument principle counts "
            f"{report.expected_count}"
        )
        logger.warning(message)
        report.warnings.append(message)
    return report


def forward_scatter(
    sig: SignalSamples,
    xi_grid: np.ndarray,
    dispersion: Dispersion,
    method: ScatterMethod = ScatterMethod.TRANSFER_MATRIX,
    discrete: bool = True,
) -> ScatteringResult:
    """
    Scattering data of a sampled signal on a real xi grid.

    Args:
        sig: The signal; `ode` needs its closed form
        xi_grid: Real spectral nodes
        dispersion: NLSE regime
        method: Integrator for a(xi), b(xi) and root polishing
        discrete: Also search for eigenvalues (anomalous only)

    Returns:
        ScatteringResult with warnings for non-decaying boundaries and unitarity defects
    """
    dispersion = Dispersion(dispersion)
    warnings = boundary_warnings(sig)
    evaluate = scatter_model(sig, dispersion, method)
    a, b, _ = evaluate(np.asarray(xi_grid, dtype=float).astype(complex))
    result = ScatteringResult(
        xi_grid=np.asarray(xi_grid, dtype=float), a=a, b=b, dispersion=dispersion, warnings=warnings
    )

    defect = result.unitarity_defect()
    if defect > 1e-8:
        message = f"Scattering unitarity defect {defect:.3e}"
        logger.warning(message)
        result.warnings.append(message)

    if discrete and dispersion is Dispersion.ANOMALOUS:
        report = find_eigenvalues(sig, dispersion, method=method)
        result.discrete = report.pairs
        result.warnings.extend(report.warnings)
        result.warnings.extend(f["message"] for f in report.failures)

    logger.info(
        f"Forward scattering ({ScatterMethod(method).value}): {len(result.discrete)} eigenvalues, "
        f"unitarity defect {defect:.2e}"
    )
    return result


def xi_grid(M_xi: Optional[int] = None, L_xi: Optional[float] = None) -> np.ndarray:
    M_xi = settings.MXI if M_xi is None else M_xi
    L_xi = settings.LXI if L_xi is None else L_xi
    return np.linspace(-L_xi / 2.0, L_xi / 2.0, M_xi + 1)


def left_spectrum(
    sig: SignalSamples,
    dispersion: Dispersion,
    M_xi: Optional[int] = None,
    L_xi: Optional[float] = None,
    method: ScatterMethod = ScatterMethod.TRANSFER_MATRIX,
    refine: Optional[int] = None,
) -> SpectralData:
    """
    Left spectral data of a signal, sampled `refine` times finer when a closed form exists.
    """
    refine = settings.ORACLE_REFINE if refine is None else refine
    if sig.closed_form is not None and refine > 1:
        sig = make_signal(sig.closed_form, sig.L, sig.M_out * refine)
    result = forward_scatter(sig, xi_grid(M_xi, L_xi), dispersion, method)
    return result.to_spectral_data(Side.LEFT)


__all__ = [
    "EigenSearchReport",
    "boundary_warnings",
    "count_zeros",
    "find_eigenvalues",
    "forward_scatter",
    "left_spectrum",
    "make_signal",
    "match_jost",
    "newton",
    "norming_constant",
    "ode_scatter",
    "peak_index",
    "scatter_model",
    "default_search_box",
    "transfer_matrix_scatter",
    "xi_grid",
]
