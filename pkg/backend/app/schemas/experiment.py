import json
from pathlib import Path
from typing import List, Optional, Tuple, Union

from pydantic import BaseModel, Field, ValidationError, field_validator

from app.core.config import settings
from app.core.exceptions import ConfigurationError
from app.models.enums import (
    Dispersion,
    KernelMode,
    ScatterMethod,
    SchemeFamily,
    SignalKind,
    SplitMode,
    SweepMode,
)
from app.models.signal import ClosedForm


class SignalConfig(BaseModel):
    """Closed-form test signal and its parameters."""

    kind: SignalKind = Field(SignalKind.CHIRPED_SECH, description="Signal family")
    amplitude: float = Field(default_factory=lambda: settings.CHIRP_AMPLITUDE)
    chirp: float = Field(default_factory=lambda: settings.CHIRP_FACTOR)
    width: float = Field(2.0, gt=0, description="Rectangle width")
    zeta: Tuple[float, float] = Field((0.0, 0.5), description="Soliton eigenvalue [re, im]")
    norm: Tuple[float, float] = Field((1.0, 0.0), description="Soliton norming constant")

    @field_validator("zeta")
    @classmethod
    def upper_half_plane(cls, v):
        if v[1] <= 0:
            raise ValueError("soliton eigenvalue must have a positive imaginary part")
        return v

    def to_closed_form(self) -> ClosedForm:
        chirp = self.chirp if self.kind is SignalKind.CHIRPED_SECH else 0.0
        return ClosedForm(
            kind=self.kind,
            amplitude=self.amplitude,
            chirp=chirp,
            width=self.width,
            zeta=complex(*self.zeta),
            norm=complex(*self.norm),
        )


class ExperimentConfig(BaseModel):
    """Everything one convergence, pareto or pointwise run needs."""

    signal: SignalConfig = Field(default_factory=SignalConfig)
    dispersion: Dispersion = Field(Dispersion.ANOMALOUS)
    ladder: List[int] = Field(default_factory=lambda: list(settings.DEFAULT_LADDER))
    schemes: List[SchemeFamily] = Field(
        default_factory=lambda: [SchemeFamily.TIB, SchemeFamily.G6, SchemeFamily.G6D]
    )
    M_xi: int = Field(default_factory=lambda: settings.MXI, ge=2)
    L_xi: float = Field(default_factory=lambda: settings.LXI, gt=0)
    L: float = Field(default_factory=lambda: settings.SIGNAL_LENGTH, gt=0)
    split: SplitMode = Field(SplitMode.SPLIT_AT_ZERO)
    scatter_method: ScatterMethod = Field(ScatterMethod.ODE)
    sweep_mode: SweepMode = Field(SweepMode.INCREMENTAL)
    kernel_mode: KernelMode = Field(KernelMode.ON_DEMAND)
    output_dir: Path = Field(default_factory=lambda: Path(settings.OUTPUT_DIR))
    seed: int = Field(0, description="Seed recorded with every table row")
    workers: int = Field(default_factory=lambda: settings.WORKERS, ge=1)
    accuracy_target: float = Field(default_factory=lambda: settings.ACCURACY_TARGET, gt=0)

    @field_validator("ladder")
    @classmethod
    def powers_of_two(cls, v: List[int]) -> List[int]:
        if not v:
            raise ValueError("ladder must not be empty")
        for m in v:
            if m < 2 or m & (m - 1):
                raise ValueError(f"ladder entry {m} is not a power of two")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("ladder must be strictly increasing")
        return v

    @field_validator("schemes")
    @classmethod
    def nonempty(cls, v: List[SchemeFamily]) -> List[SchemeFamily]:
        if not v:
            raise ValueError("at least one scheme is required")
        return v

    @classmethod
    def from_file(cls, path: Union[str, Path], **overrides) -> "ExperimentConfig":
        """Load a JSON config; keyword overrides (e.g. from CLI flags) win."""
        try:
            payload = json.loads(Path(path).read_text())
            payload.update({k: v for k, v in overrides.items() if v is not None})
            return cls.model_validate(payload)
        except (OSError, json.JSONDecodeError, ValidationError) as e:
            raise ConfigurationError(f"Invalid experiment config {path}: {e}") from e

    @classmethod
    def build(cls, path: Optional[Union[str, Path]] = None, **overrides) -> "ExperimentConfig":
        if path is not None:
            return cls.from_file(path, **overrides)
        try:
            return cls.model_validate({k: v for k, v in overrides.items() if v is not None})
        except ValidationError as e:
            raise ConfigurationError(f"Invalid experiment options: {e}") from e


__all__ = ["ExperimentConfig", "SignalConfig"]
