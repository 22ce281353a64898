from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Optional

import numpy as np

from app.core.exceptions import SpectralDataError
from app.models.enums import Dispersion, Side

if TYPE_CHECKING:
    from app.core.quadrature import WeightVector


@dataclass(frozen=True)
class DiscretePair:
    """Eigenvalue zeta in the upper half-plane and its norming constant."""

    zeta: complex
    norm: complex


@dataclass(frozen=True, eq=False)
class SpectralData:
    """
    Left (or right) NFT spectrum on a truncated uniform xi-grid.

    Immutable after construction; the arrays are made read-only.
    """

    side: Side
    dispersion: Dispersion
    xi_grid: np.ndarray
    reflection: np.ndarray
    discrete: List[DiscretePair] = field(default_factory=list)

    def __post_init__(self):
        object.__setattr__(self, "side", Side(self.side))
        object.__setattr__(self, "dispersion", Dispersion(self.dispersion))
        xi = np.array(self.xi_grid, dtype=float)
        reflection = np.array(self.reflection, dtype=complex)

        if xi.ndim != 1 or xi.size < 2:
            raise SpectralDataError("xi grid needs at least two nodes", {"size": int(xi.size)})
        steps = np.diff(xi)
        if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
            raise SpectralDataError("xi grid must be strictly increasing and uniform")
        if reflection.shape != xi.shape:
            raise SpectralDataError(
                "Reflection length does not match the xi grid",
                {"reflection": int(reflection.size), "xi_grid": int(xi.size)},
            )
        if self.dispersion is Dispersion.NORMAL and self.discrete:
            raise SpectralDataError(
                "Normal dispersion spectra have no discrete part",
                {"discrete": len(self.discrete)},
            )
        for pair in self.discrete:
            if not complex(pair.zeta).imag > 0:
                raise SpectralDataError(
                    f"Eigenvalue {pair.zeta} is not in the upper half-plane",
                    {"zeta": [complex(pair.zeta).real, complex(pair.zeta).imag]},
                )

        xi.setflags(write=False)
        reflection.setflags(write=False)
        object.__setattr__(self, "xi_grid", xi)
        object.__setattr__(self, "reflection", reflection)
        object.__setattr__(self, "discrete", list(self.discrete))

    @property
    def M_xi(self) -> int:
        return self.xi_grid.size - 1

    @property
    def d_xi(self) -> float:
        return float(self.xi_grid[1] - self.xi_grid[0])

    @property
    def zetas(self) -> np.ndarray:
        return np.array([p.zeta for p in self.discrete], dtype=complex)

    @property
    def norms(self) -> np.ndarray:
        return np.array([p.norm for p in self.discrete], dtype=complex)

    def continuous_only(self) -> "SpectralData":
        return SpectralData(self.side, self.dispersion, self.xi_grid, self.reflection, [])

    def discrete_only(self) -> "SpectralData":
        return SpectralData(
            self.side, self.dispersion, self.xi_grid, np.zeros_like(self.reflection), self.discrete
        )


@dataclass(eq=False)
class KernelTrack:
    """
    Kernel samples omega[k] = Omega(2t - k h), k = 0..2M, at the current GLME time t.

    `weights` is the xi-quadrature used to synthesise new values.
    """

    t: float
    h: float
    omega: np.ndarray
    M: int
    weights: Optional["WeightVector"] = None

    def __post_init__(self):
        if self.omega.shape != (2 * self.M + 1,):
            raise ValueError(f"Track of M={self.M} needs {2 * self.M + 1} samples")


__all__ = ["DiscretePair", "KernelTrack", "SpectralData"]
