from dataclasses import dataclass, field, replace
from typing import Any, Dict, List, Optional

import numpy as np

from app.models.enums import Dispersion, Side, SignalKind
from app.models.spectral import DiscretePair, SpectralData


def log_sech(t: np.ndarray) -> np.ndarray:
    """log(sech t) without overflow for large |t|."""
    a = np.abs(t)
    return np.log(2.0) - a - np.log1p(np.exp(-2.0 * a))


@dataclass(frozen=True)
class ClosedForm:
    """
    Analytic test signal.

    chirped_sech: A sech(t)^(1 + iC); sech: A sech(t); rectangle: A on |t| <= width/2;
    soliton: the one-soliton potential of eigenvalue zeta and norming constant norm.
    With `reversed` set the signal is evaluated at -t.
    """

    kind: SignalKind
    amplitude: float = 1.0
    chirp: float = 0.0
    width: float = 2.0
    zeta: complex = 0.5j
    norm: complex = 1.0
    reversed: bool = False

    def __call__(self, t: np.ndarray) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        if self.reversed:
            t = -t
        kind = SignalKind(self.kind)
        if kind is SignalKind.CHIRPED_SECH:
            return self.amplitude * np.exp((1.0 + 1j * self.chirp) * log_sech(t))
        if kind is SignalKind.SECH:
            return (self.amplitude * np.exp(log_sech(t))).astype(complex)
        if kind is SignalKind.RECTANGLE:
            return np.where(np.abs(t) <= self.width / 2.0, self.amplitude, 0.0).astype(complex)
        return soliton_profile(t, complex(self.zeta), complex(self.norm))

    def flipped(self) -> "ClosedForm":
        return replace(self, reversed=not self.reversed)

    def describe(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {"kind": SignalKind(self.kind).value, "reversed": self.reversed}
        kind = SignalKind(self.kind)
        if kind is SignalKind.SOLITON:
            data.update(
                zeta=[self.zeta.real, self.zeta.imag], norm=[self.norm.real, self.norm.imag]
            )
        else:
            data["amplitude"] = self.amplitude
        if kind is SignalKind.CHIRPED_SECH:
            data["chirp"] = self.chirp
        if kind is SignalKind.RECTANGLE:
            data["width"] = self.width
        return data


def soliton_profile(t: np.ndarray, zeta: complex, norm: complex) -> np.ndarray:
    """q(t) = 2i l exp(-2i zeta t) / (1 + |l|^2 exp(4 eta t) / (4 eta^2)), eta = Im zeta."""
    eta = zeta.imag
    c = abs(norm) ** 2 / (4.0 * eta**2)
    with np.errstate(over="ignore"):
        denominator = np.exp(-2.0 * eta * t) + c * np.exp(2.0 * eta * t)
        return 2j * norm * np.exp(-2j * zeta.real * t) / denominator


@dataclass(frozen=True, eq=False)
class SignalSamples:
    """Samples of q on the uniform grid t_j = -L/2 + j tau, j = 0..M_out."""

    t_grid: np.ndarray
    q: np.ndarray
    closed_form: Optional[ClosedForm] = None

    @property
    def L(self) -> float:
        return float(self.t_grid[-1] - self.t_grid[0])

    @property
    def M_out(self) -> int:
        return self.t_grid.size - 1

    @property
    def tau(self) -> float:
        return self.L / self.M_out

    def reversed(self) -> "SignalSamples":
        """Samples of q(-t) on the same symmetric grid."""
        closed_form = self.closed_form.flipped() if self.closed_form is not None else None
        return SignalSamples(t_grid=self.t_grid, q=self.q[::-1].copy(), closed_form=closed_form)


@dataclass(eq=False)
class ScatteringResult:
    """Forward scattering data a(xi), b(xi) and the discrete spectrum."""

    xi_grid: np.ndarray
    a: np.ndarray
    b: np.ndarray
    dispersion: Dispersion
    discrete: List[DiscretePair] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def reflection(self) -> np.ndarray:
        return np.conj(self.b) / self.a

    def unitarity_defect(self) -> float:
        """max | |a|^2 - s |b|^2 - 1 | on the real line."""
        sign = Dispersion(self.dispersion).sign
        return float(np.max(np.abs(np.abs(self.a) ** 2 - sign * np.abs(self.b) ** 2 - 1.0)))

    def to_spectral_data(self, side: Side = Side.LEFT) -> SpectralData:
        return SpectralData(
            side=side,
            dispersion=self.dispersion,
            xi_grid=self.xi_grid,
            reflection=self.reflection,
            discrete=list(self.discrete),
        )


__all__ = [
    "ClosedForm",
    "ScatteringResult",
    "SignalSamples",
    "log_sech",
    "soliton_profile",
]
