from .enums import (
    Dispersion,
    KernelMode,
    ScatterMethod,
    SchemeFamily,
    Side,
    Sidedness,
    SignalKind,
    SplitMode,
    SweepMode,
)
from .potential import RecoveredPotential, relative_errors, rmse
from .scheme import GridConfig, SchemeSpec
from .signal import ClosedForm, ScatteringResult, SignalSamples
from .spectral import DiscretePair, KernelTrack, SpectralData

__all__ = [
    # Enums
    "Dispersion", "KernelMode", "ScatterMethod", "SchemeFamily", "Side",
    "Sidedness", "SignalKind", "SplitMode", "SweepMode",

    # Spectral side
    "DiscretePair", "KernelTrack", "SpectralData",

    # Signals and scattering
    "ClosedForm", "ScatteringResult", "SignalSamples",

    # Recovery
    "GridConfig", "SchemeSpec", "RecoveredPotential", "relative_errors", "rmse",
]
