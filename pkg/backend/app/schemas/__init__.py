from .experiment import ExperimentConfig, SignalConfig
from .spectral import (
    DiscretePairModel,
    SpectralDataFile,
    load_spectral_data,
    save_spectral_data,
)

__all__ = [
    # Experiments
    "ExperimentConfig", "SignalConfig",

    # Spectral data files
    "DiscretePairModel", "SpectralDataFile", "load_spectral_data", "save_spectral_data",
]
