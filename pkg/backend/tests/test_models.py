import logging

import numpy as np
import pytest

from app.core.config import Settings
from app.core.exceptions import ConfigurationError, ReferenceUnavailableError
from app.core.logging_config import setup_logging
from app.models.enums import Dispersion, SchemeFamily, Sidedness, SignalKind, SplitMode
from app.models.potential import RecoveredPotential, relative_errors, rmse
from app.models.scheme import GridConfig, SchemeSpec
from app.models.signal import ClosedForm, ScatteringResult, log_sech


@pytest.mark.parametrize(
    "family, n, sidedness, rank",
    [("TIB", 1, Sidedness.TWO_SIDED, 4), ("G2", 2, Sidedness.LEFT_SIDED, 4),
     ("G6", 6, Sidedness.LEFT_SIDED, 12), ("G3d", 3, Sidedness.TWO_SIDED, 12)],
)
def test_scheme_from_family(family, n, sidedness, rank):
    scheme = SchemeSpec.from_family(family)
    assert (scheme.n, scheme.sidedness, scheme.rank) == (n, sidedness, rank)


def test_unknown_scheme():
    with pytest.raises(ConfigurationError):
        SchemeSpec.from_family("G9")


def test_grid_split_at_zero():
    grid = GridConfig(L=40.0, M_out=1024)
    assert grid.tau == pytest.approx(40.0 / 1024)
    assert grid.h == pytest.approx(2 * grid.tau)
    assert grid.M == 512
    assert grid.P == pytest.approx(40.0)
    assert grid.t_grid[0] == -20.0 and grid.t_grid[512] == pytest.approx(0.0)


def test_grid_left_only_spans_twice_the_interval():
    grid = GridConfig(L=40.0, M_out=1024, split=SplitMode.LEFT_ONLY)
    assert grid.M == 1024
    assert grid.P == pytest.approx(80.0)


@pytest.mark.parametrize("M_out", [0, 1, 63])
def test_grid_rejects_bad_sizes(M_out):
    with pytest.raises(ConfigurationError):
        GridConfig(L=10.0, M_out=M_out)


def test_grid_check_scheme():
    with pytest.raises(ConfigurationError):
        GridConfig(L=10.0, M_out=16).check_scheme(SchemeSpec.from_family(SchemeFamily.G5D))
    GridConfig(L=10.0, M_out=20).check_scheme(SchemeSpec.from_family(SchemeFamily.G5D))


def test_chirped_sech_profile():
    signal = ClosedForm(kind=SignalKind.CHIRPED_SECH, amplitude=5.2, chirp=4.0)
    t = np.array([-1.0, 0.0, 2.0])
    expected = 5.2 / np.cosh(t) * np.exp(-4.0j * np.log(np.cosh(t)))
    assert np.allclose(signal(t), expected)
    assert np.isfinite(signal(np.array([800.0]))).all()


def test_log_sech_is_stable():
    assert log_sech(np.array([0.0]))[0] == pytest.approx(0.0)
    assert log_sech(np.array([1000.0]))[0] == pytest.approx(np.log(2.0) - 1000.0)


def test_soliton_closed_form_is_i_sech(soliton_signal):
    t = np.linspace(-5, 5, 11)
    assert np.allclose(soliton_signal(t), 1j / np.cosh(t))
    assert np.allclose(soliton_signal.flipped()(t), soliton_signal(-t))


def test_unitarity_defect_sign():
    xi = np.linspace(-1, 1, 3)
    a = np.full(3, np.sqrt(2.0), dtype=complex)
    b = np.ones(3, dtype=complex)
    assert ScatteringResult(xi, a, b, Dispersion.NORMAL).unitarity_defect() == pytest.approx(0.0)
    assert ScatteringResult(xi, a, b, Dispersion.ANOMALOUS).unitarity_defect() == pytest.approx(2.0)


def test_relative_errors_and_rmse():
    reference = np.array([1.0, 2.0, 4.0])
    eps = relative_errors(np.array([1.0, 2.4, 4.0]), reference)
    assert np.allclose(eps, [0.0, 0.1, 0.0])
    assert rmse(eps) == pytest.approx(0.1 / np.sqrt(3.0))
    with pytest.raises(ReferenceUnavailableError):
        relative_errors(np.ones(3), np.zeros(3))


def test_potential_without_reference():
    potential = RecoveredPotential(
        t_grid=np.linspace(0, 1, 3), q=np.zeros(3, complex), scheme=SchemeSpec.from_family("G2")
    )
    assert "eps" not in potential.to_frame()
    with pytest.raises(ReferenceUnavailableError):
        potential.rmse()


def test_settings_from_environment(monkeypatch):
    monkeypatch.setenv("DEFAULT_LADDER", "[256, 512]")
    monkeypatch.setenv("MXI", "513")
    settings = Settings()
    assert settings.DEFAULT_LADDER == [256, 512]
    assert settings.MXI == 513


def test_settings_ladder_accepts_comma_list():
    assert Settings(DEFAULT_LADDER="64,128").DEFAULT_LADDER == [64, 128]


@pytest.mark.parametrize("json_output", [False, True])
def test_setup_logging(json_output):
    setup_logging("debug", json_output=json_output)
    root = logging.getLogger()
    assert root.level == logging.DEBUG
    assert len(root.handlers) == 1
