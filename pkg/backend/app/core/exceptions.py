from typing import Any, Dict, Optional


class HgtibError(Exception):
    """Base class for every failure raised by the library."""

    def __init__(self, message: str, details: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details or {}

    def to_dict(self) -> Dict[str, Any]:
        return {"error": type(self).__name__, "message": self.message, **self.details}


class QuadratureError(HgtibError, ValueError):
    """Invalid Gregory order, grid too small for the edge corrections, or length mismatch."""


class SpectralDataError(HgtibError, ValueError):
    """Spectral data violating its invariants, or no way to obtain them."""


class LevinsonBreakdownError(HgtibError):
    """A leading block minor is singular or too badly conditioned to continue."""

    def __init__(self, size: int, condition: float):
        super().__init__(
            f"Levinson recursion broke down at block size {size} "
            f"(condition estimate {condition:.3e})",
            {"size": size, "condition": condition},
        )
        self.size = size
        self.condition = condition


class CapacitySingularError(HgtibError):
    """The r x r Woodbury capacity matrix E_r - VZ is numerically singular."""

    def __init__(self, rank: int, condition: float):
        super().__init__(
            f"Woodbury capacity matrix of rank {rank} is singular "
            f"(condition {condition:.3e})",
            {"rank": rank, "condition": condition},
        )
        self.rank = rank
        self.condition = condition


class OracleError(HgtibError):
    """Forward scattering could not produce the requested data."""


class NewtonConvergenceError(OracleError):
    def __init__(self, seed: complex, iterations: int, residual: float):
        super().__init__(
            f"Newton iteration from {seed:.4g} did not converge after "
            f"{iterations} iterations (|a| = {residual:.3e})",
            {"seed": [seed.real, seed.imag], "iterations": iterations, "residual": residual},
        )
        self.seed = seed
        self.iterations = iterations
        self.residual = residual


class ReferenceUnavailableError(HgtibError):
    """The pointwise error is undefined without a non-zero exact reference."""


class ConfigurationError(HgtibError, ValueError):
    """Bad experiment configuration or command-line arguments."""


__all__ = [
    "HgtibError",
    "QuadratureError",
    "SpectralDataError",
    "LevinsonBreakdownError",
    "CapacitySingularError",
    "OracleError",
    "NewtonConvergenceError",
    "ReferenceUnavailableError",
    "ConfigurationError",
]
