import numpy as np
import pytest

from app.models.enums import Dispersion, Side, SignalKind
from app.models.signal import ClosedForm
from app.models.spectral import DiscretePair, SpectralData

# i sech(t): eigenvalue i/2, norming constant 1, its own time reversal
SECH_ZETA = 0.5j
SECH_NORM = 1.0 + 0.0j


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def xi_grid():
    return np.linspace(-20.0, 20.0, 257)


@pytest.fixture
def soliton_signal():
    return ClosedForm(kind=SignalKind.SOLITON, zeta=SECH_ZETA, norm=SECH_NORM)


@pytest.fixture
def soliton_left(xi_grid):
    """Exact left data of i sech(t)."""
    return SpectralData(
        side=Side.LEFT,
        dispersion=Dispersion.ANOMALOUS,
        xi_grid=xi_grid,
        reflection=np.zeros_like(xi_grid, dtype=complex),
        discrete=[DiscretePair(zeta=SECH_ZETA, norm=SECH_NORM)],
    )


@pytest.fixture
def soliton_right(soliton_left):
    return SpectralData(
        side=Side.RIGHT,
        dispersion=soliton_left.dispersion,
        xi_grid=soliton_left.xi_grid,
        reflection=soliton_left.reflection,
        discrete=soliton_left.discrete,
    )


@pytest.fixture
def mixed_data(xi_grid):
    """Smooth reflection plus one eigenvalue; not the spectrum of any particular q."""
    return SpectralData(
        side=Side.LEFT,
        dispersion=Dispersion.ANOMALOUS,
        xi_grid=xi_grid,
        reflection=0.3 * np.exp(-(xi_grid**2) / 4.0) * np.exp(0.5j * xi_grid),
        discrete=[DiscretePair(zeta=0.2 + 0.6j, norm=0.8 - 0.3j)],
    )


@pytest.fixture
def normal_data(xi_grid):
    return SpectralData(
        side=Side.LEFT,
        dispersion=Dispersion.NORMAL,
        xi_grid=xi_grid,
        reflection=0.4 * np.exp(-(xi_grid**2) / 2.0),
    )
