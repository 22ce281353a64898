"""
GLME kernel synthesis from spectral data.

Omega(x) = (d_xi / 2 pi) sum_j w_j l(xi_j) exp(-i xi_j x) - i sum_n l_n exp(-i zeta_n x)
"""
import logging
from typing import Callable, Optional

import numpy as np

from app.core.exceptions import SpectralDataError
from app.core.quadrature import WeightVector, gregory_weights
from app.models.enums import Dispersion, Side, Sidedness
from app.models.signal import SignalSamples
from app.models.spectral import KernelTrack, SpectralData

logger = logging.getLogger(__name__)

# exp(-i xi x) blocks are built for at most this many x values at a time
CHUNK = 256

Kernel = Callable[[np.ndarray], np.ndarray]
Oracle = Callable[[SignalSamples, Dispersion], SpectralData]


class KernelEvaluator:
    """Vectorised Omega(x) for one spectral data set and xi-quadrature."""

    def __init__(self, sd: SpectralData, w: WeightVector):
        if w.weights.size != sd.xi_grid.size:
            raise SpectralDataError(
                f"xi weights have {w.weights.size} entries for {sd.xi_grid.size} nodes",
                {"weights": int(w.weights.size), "xi_grid": int(sd.xi_grid.size)},
            )
        zetas = sd.zetas
        if zetas.size and np.any(zetas.imag <= 0):
            raise SpectralDataError("Eigenvalues must lie in the upper half-plane")

        self.sd = sd
        self.weights = w
        self._xi = sd.xi_grid
        self._coefficients = (sd.d_xi / (2.0 * np.pi)) * w.weights * sd.reflection
        self._zetas = zetas
        self._norms = sd.norms

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        flat = x.reshape(-1)
        out = np.empty(flat.size, dtype=complex)
        for start in range(0, flat.size, CHUNK):
            rows = flat[start : start + CHUNK]
            value = np.exp(-1j * np.outer(rows, self._xi)) @ self._coefficients
            if self._zetas.size:
                value = value - 1j * (np.exp(-1j * np.outer(rows, self._zetas)) @ self._norms)
            out[start : start + CHUNK] = value
        return out.reshape(x.shape)


class CachedKernel:
    """Omega precomputed on the lattice x0 + j h, j = 0..count-1."""

    def __init__(self, kernel: Kernel, x0: float, h: float, count: int):
        self.x0 = x0
        self.h = h
        self._kernel = kernel
        self._values = kernel(x0 + h * np.arange(count))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        position = (x - self.x0) / self.h
        index = np.rint(position).astype(int)
        on_lattice = (
            np.all(np.abs(position - index) < 1e-6)
            and np.all(index >= 0)
            and np.all(index < self._values.size)
        )
        if not on_lattice:
            return self._kernel(x)
        return self._values[index]


def xi_weights(sd: SpectralData, n: int) -> WeightVector:
    """Two-sided Gregory weights of order n on the xi grid."""
    return gregory_weights(n, sd.M_xi, Sidedness.TWO_SIDED)


def kernel_value(sd: SpectralData, t: float, w: WeightVector) -> complex:
    """
    Omega(t) with the continuous part integrated by the weights w.

    Raises:
        SpectralDataError: w does not match the xi grid or an eigenvalue has Im <= 0
    """
    return complex(KernelEvaluator(sd, w)(t))


def init_track(
    sd: SpectralData,
    t0: float,
    h: float,
    M: int,
    w: WeightVector,
    kernel: Optional[Kernel] = None,
) -> KernelTrack:
    """omega[k] = Omega(2 t0 - k h) for k = 0..2M."""
    if M < 1 or h <= 0:
        raise ValueError(f"Track needs M >= 1 and h > 0, got M={M}, h={h}")
    kernel = kernel or KernelEvaluator(sd, w)
    omega = np.asarray(kernel(2.0 * t0 - h * np.arange(2 * M + 1)), dtype=complex)
    return KernelTrack(t=t0, h=h, omega=omega, M=M, weights=w)


def advance_track(
    kt: KernelTrack, sd: SpectralData, kernel: Optional[Kernel] = None
) -> KernelTrack:
    """Move the track to t + h/2 with one new kernel value Omega(2t + h)."""
    if kernel is None:
        if kt.weights is None:
            raise SpectralDataError("Track carries no xi weights to evaluate new kernel values")
        kernel = KernelEvaluator(sd, kt.weights)
    omega = np.empty_like(kt.omega)
    omega[0] = complex(kernel(2.0 * kt.t + kt.h))
    omega[1:] = kt.omega[:-1]
    return KernelTrack(t=kt.t + kt.h / 2.0, h=kt.h, omega=omega, M=kt.M, weights=kt.weights)


def time_reverse(
    signal: SignalSamples, dispersion: Dispersion, oracle: Optional[Oracle]
) -> SpectralData:
    """
    Left spectral data of q(-t), tagged as right-side data of q.

    Raises:
        SpectralDataError: No oracle was supplied
    """
    if oracle is None:
        raise SpectralDataError("Right-side data needs a forward oracle for the reversed signal")
    reversed_data = oracle(signal.reversed(), Dispersion(dispersion))
    logger.debug(
        f"Reversed-signal spectrum: {len(reversed_data.discrete)} eigenvalues, "
        f"max |l| = {np.max(np.abs(reversed_data.reflection)):.3e}"
    )
    return SpectralData(
        side=Side.RIGHT,
        dispersion=reversed_data.dispersion,
        xi_grid=reversed_data.xi_grid,
        reflection=reversed_data.reflection,
        discrete=reversed_data.discrete,
    )


__all__ = [
    "CachedKernel",
    "KernelEvaluator",
    "advance_track",
    "init_track",
    "kernel_value",
    "time_reverse",
    "xi_weights",
]
