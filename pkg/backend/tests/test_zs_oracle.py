import numpy as np
import pytest

from app.core.exceptions import OracleError
from app.models.enums import Dispersion, ScatterMethod, Side, SignalKind
from app.models.signal import ClosedForm
from app.schemas.experiment import ExperimentConfig, SignalConfig
from app.services.experiments import build_spectra, run_convergence
from app.services.zs_oracle import (
    boundary_warnings,
    find_eigenvalues,
    forward_scatter,
    left_spectrum,
    make_signal,
    norming_constant,
    ode_scatter,
    peak_index,
    scatter_model,
    transfer_matrix_scatter,
    xi_grid,
)


def sech(amplitude):
    return ClosedForm(kind=SignalKind.SECH, amplitude=amplitude)


def test_make_signal_grid():
    samples = make_signal(sech(1.0), 20.0, 8)
    assert samples.t_grid[0] == -10.0 and samples.t_grid[-1] == pytest.approx(10.0)
    assert samples.tau == pytest.approx(2.5)
    assert samples.q[4] == pytest.approx(1.0)


@pytest.mark.parametrize("dispersion", list(Dispersion))
def test_transfer_matrix_is_unitary(dispersion):
    chirp = ClosedForm(kind=SignalKind.CHIRPED_SECH, amplitude=2.0, chirp=3.0)
    samples = make_signal(chirp, 30.0, 1024)
    result = forward_scatter(samples, xi_grid(64, 20.0), dispersion, discrete=False)
    assert result.unitarity_defect() < 1e-10
    assert result.discrete == []


def test_unit_sech_is_reflectionless():
    samples = make_signal(sech(1.0), 30.0, 2048)
    a, b, _ = transfer_matrix_scatter(
        samples.q, samples.tau, samples.t_grid[0], np.linspace(-5, 5, 41), Dispersion.ANOMALOUS
    )
    assert np.max(np.abs(b)) < 1e-3
    assert np.allclose(np.abs(a), 1.0, atol=1e-6)


def test_ode_agrees_with_transfer_matrix():
    signal = sech(1.5)
    samples = make_signal(signal, 30.0, 4096)
    zeta = np.linspace(-3.0, 3.0, 13).astype(complex)
    a_tm, b_tm, _ = transfer_matrix_scatter(
        samples.q, samples.tau, samples.t_grid[0], zeta, Dispersion.ANOMALOUS
    )
    a_ode, b_ode, _ = ode_scatter(signal, -15.0, 15.0, zeta, Dispersion.ANOMALOUS)
    assert np.allclose(a_ode, a_tm, atol=1e-4)
    assert np.allclose(b_ode, b_tm, atol=1e-4)


def test_sech_eigenvalues():
    # A sech(t) has eigenvalues i (A - 1/2 - k) for k = 0, 1, ... while positive
    samples = make_signal(sech(2.5), 30.0, 4096)
    report = find_eigenvalues(samples, Dispersion.ANOMALOUS)

    assert report.expected_count == 2
    assert [p.zeta for p in report.pairs] == pytest.approx([2.0j, 1.0j], abs=1e-3)
    assert report.failures == []
    assert report.warnings == []


def test_normal_dispersion_has_no_eigenvalues():
    report = find_eigenvalues(make_signal(sech(2.5), 30.0, 256), Dispersion.NORMAL)
    assert report.pairs == []
    assert report.expected_count == 0


def test_newton_failures_are_reported_not_raised():
    samples = make_signal(sech(2.5), 30.0, 1024)
    report = find_eigenvalues(samples, Dispersion.ANOMALOUS, tol=1e-300)

    assert report.pairs == []
    assert len(report.failures) == 2
    assert {f["error"] for f in report.failures} == {"NewtonConvergenceError"}
    assert report.warnings


def test_soliton_norming_constant_matches_closed_form(soliton_signal):
    samples = make_signal(soliton_signal, 30.0, 1024)
    data = left_spectrum(samples, Dispersion.ANOMALOUS, M_xi=64, L_xi=20.0)

    assert data.side is Side.LEFT
    assert len(data.discrete) == 1
    assert data.discrete[0].zeta == pytest.approx(0.5j, abs=1e-5)
    assert data.discrete[0].norm == pytest.approx(1.0, abs=1e-3)
    assert np.max(np.abs(data.reflection)) < 1e-3


def test_ode_method_on_rectangle_falls_back():
    rect = ClosedForm(kind=SignalKind.RECTANGLE, amplitude=1.0, width=2.0)
    samples = make_signal(rect, 20.0, 512)
    result = forward_scatter(
        samples, xi_grid(32, 10.0), Dispersion.NORMAL, method=ScatterMethod.ODE
    )
    assert result.unitarity_defect() < 1e-10


def test_boundary_warning_for_non_decaying_signal():
    wide = ClosedForm(kind=SignalKind.RECTANGLE, amplitude=1.0, width=40.0)
    assert boundary_warnings(make_signal(wide, 20.0, 64))
    assert boundary_warnings(make_signal(sech(1.0), 40.0, 64)) == []


@pytest.mark.parametrize("method", list(ScatterMethod))
def test_matched_scattering_agrees_on_real_axis(method):
    samples = make_signal(sech(1.5), 30.0, 2048)
    xi = np.linspace(-3.0, 3.0, 13).astype(complex)
    a, b, _ = scatter_model(samples, Dispersion.ANOMALOUS, method)(xi)
    a_matched, _, _ = scatter_model(samples, Dispersion.ANOMALOUS, method, match=True)(xi)
    assert np.allclose(a_matched, a, atol=1e-8)


@pytest.mark.parametrize("method, atol", [(ScatterMethod.TRANSFER_MATRIX, 1e-3),
                                          (ScatterMethod.ODE, 1e-6)])
def test_bound_state_coefficients_of_even_signal(method, atol):
    # a real even signal has b_n = +-1, also far up the imaginary axis
    samples = make_signal(sech(3.5), 30.0, 4096)
    assert samples.t_grid[peak_index(samples)] == pytest.approx(0.0)
    evaluate = scatter_model(samples, Dispersion.ANOMALOUS, method, match=True)
    a, b, da = evaluate(np.array([3j, 2j, 1j]), True)

    assert np.allclose(np.abs(a), 0.0, atol=10 * atol)
    assert np.allclose(np.abs(b), 1.0, atol=atol)
    assert np.all(np.isfinite(da)) and np.all(np.abs(da) > 0)


def test_high_sech_norming_constants_are_finite():
    report = find_eigenvalues(make_signal(sech(3.5), 30.0, 4096), Dispersion.ANOMALOUS)
    assert [p.zeta for p in report.pairs] == pytest.approx([3j, 2j, 1j], abs=1e-3)
    assert report.failures == []
    for pair in report.pairs:
        assert np.isfinite(pair.norm) and abs(pair.norm) > 0


def test_norming_constant_rejects_degenerate_products():
    assert norming_constant(1j, 2.0) == pytest.approx(-0.5j)
    with pytest.raises(OracleError):
        norming_constant(0.0, 1.0)
    with pytest.raises(OracleError):
        norming_constant(complex(np.inf, 0.0), 1.0)


@pytest.mark.filterwarnings("error::RuntimeWarning")
def test_wide_seed_box_emits_no_overflow_warnings():
    samples = make_signal(sech(2.5), 30.0, 1024)
    report = find_eigenvalues(samples, Dispersion.ANOMALOUS, search_box=(6.0, 0.0, 12.0))
    assert [p.zeta for p in report.pairs] == pytest.approx([2.0j, 1.0j], abs=1e-3)


@pytest.mark.slow
def test_soliton_round_trip_through_oracle(tmp_path):
    cfg = ExperimentConfig(
        signal=SignalConfig(kind=SignalKind.SOLITON),
        ladder=[1024],
        schemes=["G6d"],
        L=40.0,
        output_dir=tmp_path,
    )
    frame = run_convergence(cfg).set_index("scheme")
    assert frame.loc["G6d", "status"] == "ok"
    assert frame.loc["G6d", "rmse"] <= 1e-6


@pytest.mark.slow
def test_three_eigenvalue_round_trip_through_oracle(tmp_path):
    cfg = ExperimentConfig(
        signal=SignalConfig(kind=SignalKind.SECH, amplitude=3.0),
        ladder=[2048],
        schemes=["G6d"],
        L=40.0,
        output_dir=tmp_path,
    )
    spectra = build_spectra(cfg)
    assert [p.zeta for p in spectra.left.discrete] == pytest.approx([2.5j, 1.5j, 0.5j], abs=1e-6)
    assert np.max(np.abs(spectra.left.reflection)) < 1e-6

    frame = run_convergence(cfg, spectra).set_index("scheme")
    assert frame.loc["G6d", "status"] == "ok"
    assert frame.loc["G6d", "rmse"] < 1e-5
