from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Optional, Union

import numpy as np
import pandas as pd

from app.core.exceptions import ReferenceUnavailableError
from app.models.scheme import SchemeSpec

CSV_FLOAT_FORMAT = "%.17g"


def relative_errors(q: np.ndarray, reference: np.ndarray) -> np.ndarray:
    """eps(t) = |q - q_exact| / max |q_exact|."""
    scale = float(np.max(np.abs(reference))) if np.size(reference) else 0.0
    if scale == 0.0:
        raise ReferenceUnavailableError(
            "Pointwise error is undefined for an identically zero reference",
            {"max_reference": scale},
        )
    return np.abs(np.asarray(q) - np.asarray(reference)) / scale


def rmse(eps: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(eps) ** 2)))


@dataclass(eq=False)
class RecoveredPotential:
    """Samples of q on the output grid produced by one scheme."""

    t_grid: np.ndarray
    q: np.ndarray
    scheme: SchemeSpec
    diagnostics: Dict[str, Any] = field(default_factory=dict)
    reference: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.q.shape != self.t_grid.shape:
            raise ValueError(f"q has {self.q.size} samples for {self.t_grid.size} times")

    @property
    def M_out(self) -> int:
        return self.t_grid.size - 1

    def errors(self, reference: Optional[np.ndarray] = None) -> np.ndarray:
        reference = self.reference if reference is None else reference
        if reference is None:
            raise ReferenceUnavailableError("No exact reference attached to this potential")
        return relative_errors(self.q, reference)

    def rmse(self, reference: Optional[np.ndarray] = None) -> float:
        return rmse(self.errors(reference))

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame(
            {
                "t": self.t_grid,
                "re_q": self.q.real,
                "im_q": self.q.imag,
                "abs_q": np.abs(self.q),
            }
        )
        if self.reference is not None:
            frame["eps"] = self.errors()
        return frame

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format=CSV_FLOAT_FORMAT)
        return path


__all__ = ["CSV_FLOAT_FORMAT", "RecoveredPotential", "relative_errors", "rmse"]
