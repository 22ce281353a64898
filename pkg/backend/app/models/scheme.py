from dataclasses import dataclass

import numpy as np

from app.core.exceptions import ConfigurationError
from app.models.enums import SchemeFamily, Sidedness, SplitMode


@dataclass(frozen=True)
class SchemeSpec:
    """
    Discretisation scheme of the GLME.

    TIB is the trapezoid baseline without a Woodbury correction. Gn corrects one edge
    of the GLME integral, Gnd both. The xi-integral always uses the two-sided rule of
    the same order.
    """

    family: SchemeFamily
    n: int
    sidedness: Sidedness

    @classmethod
    def from_family(cls, family) -> "SchemeSpec":
        try:
            family = SchemeFamily(family)
        except ValueError as e:
            raise ConfigurationError(f"Unknown scheme {family!r}", {"scheme": str(family)}) from e
        if family is SchemeFamily.TIB:
            return cls(family=family, n=1, sidedness=Sidedness.TWO_SIDED)
        n = int(family.value[1])
        sidedness = Sidedness.TWO_SIDED if family.value.endswith("d") else Sidedness.LEFT_SIDED
        return cls(family=family, n=n, sidedness=sidedness)

    @property
    def name(self) -> str:
        return self.family.value

    @property
    def rank(self) -> int:
        """Rank of the weight correction, both components."""
        return 4 * self.n if self.sidedness is Sidedness.TWO_SIDED else 2 * self.n

    @property
    def minimum_M(self) -> int:
        return 2 * self.n if self.sidedness is Sidedness.TWO_SIDED else self.n


@dataclass(frozen=True)
class GridConfig:
    """
    Output grid t_j = -L/2 + j tau, j = 0..M_out, and the GLME grid derived from it.

    The GLME step is h = 2 tau. In split_at_zero mode the left GLME covers [-L/2, 0]
    with M = M_out / 2 subintervals (P = L) and the right half comes from the
    time-reversed signal; left_only sweeps the whole interval with M = M_out (P = 2L).
    """

    L: float
    M_out: int
    split: SplitMode = SplitMode.SPLIT_AT_ZERO

    def __post_init__(self):
        object.__setattr__(self, "split", SplitMode(self.split))
        if self.L <= 0:
            raise ConfigurationError(f"Interval length must be positive, got {self.L}")
        if self.M_out < 2 or (self.split is SplitMode.SPLIT_AT_ZERO and self.M_out % 2):
            raise ConfigurationError(
                f"M_out={self.M_out} must be an even number of at least 2",
                {"M_out": self.M_out},
            )

    @property
    def tau(self) -> float:
        return self.L / self.M_out

    @property
    def h(self) -> float:
        return 2.0 * self.tau

    @property
    def M(self) -> int:
        return self.M_out // 2 if self.split is SplitMode.SPLIT_AT_ZERO else self.M_out

    @property
    def P(self) -> float:
        return self.M * self.h

    @property
    def t_start(self) -> float:
        return -self.L / 2.0

    @property
    def t_grid(self) -> np.ndarray:
        return self.t_start + self.tau * np.arange(self.M_out + 1)

    def check_scheme(self, scheme: SchemeSpec) -> None:
        if self.M < scheme.minimum_M:
            raise ConfigurationError(
                f"GLME grid M={self.M} is too small for {scheme.name} (need {scheme.minimum_M})",
                {"M": self.M, "scheme": scheme.name},
            )


__all__ = ["GridConfig", "SchemeSpec"]
