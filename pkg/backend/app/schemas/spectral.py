import json
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, ValidationError, model_validator

from app.core.exceptions import SpectralDataError
from app.models.enums import Dispersion, Side
from app.models.spectral import DiscretePair, SpectralData

ComplexPair = Tuple[float, float]


class DiscretePairModel(BaseModel):
    """One eigenvalue and its norming constant as [re, im] pairs."""

    zeta: ComplexPair = Field(..., description="Eigenvalue [re, im], im > 0")
    norm: ComplexPair = Field(..., description="Norming constant [re, im]")


class SpectralDataFile(BaseModel):
    """JSON interchange format for spectral data."""

    side: Side = Field(Side.LEFT, description="Which GLME the data belongs to")
    dispersion: Dispersion = Field(..., description="NLSE regime")
    xi_min: float = Field(..., description="First node of the uniform xi grid")
    xi_max: float = Field(..., description="Last node of the uniform xi grid")
    reflection: List[ComplexPair] = Field(..., description="l(xi) samples as [re, im]")
    discrete: List[DiscretePairModel] = Field(default_factory=list)

    @model_validator(mode="after")
    def check_grid(self) -> "SpectralDataFile":
        if len(self.reflection) < 2:
            raise ValueError("reflection needs at least two samples")
        if not self.xi_max > self.xi_min:
            raise ValueError("xi_max must exceed xi_min")
        return self

    @classmethod
    def from_domain(cls, data: SpectralData) -> "SpectralDataFile":
        return cls(
            side=data.side,
            dispersion=data.dispersion,
            xi_min=float(data.xi_grid[0]),
            xi_max=float(data.xi_grid[-1]),
            reflection=[(float(z.real), float(z.imag)) for z in data.reflection],
            discrete=[
                DiscretePairModel(
                    zeta=(complex(p.zeta).real, complex(p.zeta).imag),
                    norm=(complex(p.norm).real, complex(p.norm).imag),
                )
                for p in data.discrete
            ],
        )

    def to_domain(self) -> SpectralData:
        values = np.asarray(self.reflection, dtype=float)
        return SpectralData(
            side=self.side,
            dispersion=self.dispersion,
            xi_grid=np.linspace(self.xi_min, self.xi_max, len(self.reflection)),
            reflection=values[:, 0] + 1j * values[:, 1],
            discrete=[
                DiscretePair(zeta=complex(*p.zeta), norm=complex(*p.norm)) for p in self.discrete
            ],
        )


def save_spectral_data(data: SpectralData, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(SpectralDataFile.from_domain(data).model_dump_json(indent=2))
    return path


def load_spectral_data(path: Union[str, Path]) -> SpectralData:
    """
    Read a spectral data JSON file.

    Raises:
        SpectralDataError: The file is missing, malformed or violates the data invariants
    """
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
        return SpectralDataFile.model_validate(payload).to_domain()
    except (OSError, json.JSONDecodeError, ValidationError) as e:
        raise SpectralDataError(
            f"Cannot read spectral data from {path}: {e}", {"path": str(path)}
        ) from e


__all__ = ["DiscretePairModel", "SpectralDataFile", "load_spectral_data", "save_spectral_data"]
