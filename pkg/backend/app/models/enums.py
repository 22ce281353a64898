from enum import Enum


class Dispersion(str, Enum):
    """NLSE regime. Anomalous takes the upper (minus) sign of the ZS system."""

    ANOMALOUS = "anomalous"
    NORMAL = "normal"

    @property
    def sign(self) -> int:
        return -1 if self is Dispersion.ANOMALOUS else 1


class Side(str, Enum):
    LEFT = "left"
    RIGHT = "right"


class Sidedness(str, Enum):
    TWO_SIDED = "two_sided"
    LEFT_SIDED = "left_sided"
    RIGHT_SIDED = "right_sided"


class SchemeFamily(str, Enum):
    TIB = "TIB"
    G2 = "G2"
    G3 = "G3"
    G4 = "G4"
    G5 = "G5"
    G6 = "G6"
    G2D = "G2d"
    G3D = "G3d"
    G4D = "G4d"
    G5D = "G5d"
    G6D = "G6d"


class SignalKind(str, Enum):
    CHIRPED_SECH = "chirped_sech"
    SECH = "sech"
    RECTANGLE = "rectangle"
    SOLITON = "soliton"


class SplitMode(str, Enum):
    SPLIT_AT_ZERO = "split_at_zero"
    LEFT_ONLY = "left_only"


class SweepMode(str, Enum):
    INCREMENTAL = "incremental"
    RESOLVE = "resolve"


class KernelMode(str, Enum):
    ON_DEMAND = "on_demand"
    CACHED = "cached"


class ScatterMethod(str, Enum):
    TRANSFER_MATRIX = "transfer_matrix"
    ODE = "ode"
