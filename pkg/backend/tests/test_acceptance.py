"""Full chirped-sech runs with oracle spectra. Minutes, not seconds: run with -m slow."""
import numpy as np
import pytest

from app.models.enums import Dispersion
from app.schemas.experiment import ExperimentConfig
from app.services.experiments import build_spectra, pareto_summary, run_convergence

pytestmark = pytest.mark.slow

LADDER = [1024, 2048, 4096, 8192]
TARGET_ORDER = {Dispersion.ANOMALOUS: 6.31, Dispersion.NORMAL: 7.33}
PARITY_ORDERS = range(2, 7)


def config(dispersion, ladder, schemes, output_dir):
    return ExperimentConfig(
        dispersion=dispersion, ladder=ladder, schemes=schemes, output_dir=output_dir
    )


@pytest.fixture(scope="module", params=list(Dispersion), ids=lambda d: d.value)
def dispersion(request):
    return request.param


@pytest.fixture(scope="module")
def spectra(dispersion, tmp_path_factory):
    cfg = config(dispersion, LADDER, ["TIB"], tmp_path_factory.mktemp("spectra"))
    return build_spectra(cfg)


@pytest.fixture(scope="module")
def ladder_frame(dispersion, spectra, tmp_path_factory):
    cfg = config(dispersion, LADDER, ["TIB", "G6", "G6d"], tmp_path_factory.mktemp("ladder"))
    return run_convergence(cfg, spectra)


def test_default_chirp_has_five_eigenvalues(dispersion, spectra):
    expected = 5 if dispersion is Dispersion.ANOMALOUS else 0
    assert len(spectra.left.discrete) == expected
    assert all(p.zeta.imag > 0 for p in spectra.left.discrete)
    if spectra.right is not None:
        assert len(spectra.right.discrete) == expected


def test_sixth_order_schemes_reach_target_order(dispersion, ladder_frame):
    assert (ladder_frame["status"] == "ok").all()
    for scheme in ("G6", "G6d"):
        orders = ladder_frame.loc[ladder_frame["scheme"] == scheme, "order"].dropna()
        assert len(orders) == len(LADDER) - 1
        assert orders.mean() == pytest.approx(TARGET_ORDER[dispersion], abs=0.8)


def test_trapezoid_is_second_order(ladder_frame):
    orders = ladder_frame.loc[ladder_frame["scheme"] == "TIB", "order"].dropna()
    assert orders.mean() == pytest.approx(2.0, abs=0.4)


def test_gregory_schemes_beat_trapezoid(ladder_frame):
    finest = ladder_frame[ladder_frame["M"] == max(LADDER)].set_index("scheme")
    assert finest.loc["G6d", "rmse"] < finest.loc["TIB", "rmse"]
    assert finest.loc["G6", "rmse"] < finest.loc["TIB", "rmse"]


def test_pareto_ordinals(ladder_frame):
    summary = pareto_summary(ladder_frame, accuracy_target=1e-4)
    assert summary["fastest_on_coarsest"]["scheme"] == "TIB"

    reached = ladder_frame[ladder_frame["rmse"] <= 1e-4]
    g6 = reached.loc[reached["scheme"] == "G6", "wall_time"]
    tib = reached.loc[reached["scheme"] == "TIB", "wall_time"]
    assert not g6.empty
    assert g6.min() < (tib.min() if not tib.empty else np.inf)


def test_one_sided_schemes_keep_two_sided_accuracy(dispersion, spectra, tmp_path):
    schemes = [f"G{n}" for n in PARITY_ORDERS] + [f"G{n}d" for n in PARITY_ORDERS]
    cfg = config(dispersion, [4096], schemes, tmp_path)
    frame = run_convergence(cfg, spectra).set_index("scheme")
    assert (frame["status"] == "ok").all()

    for n in PARITY_ORDERS:
        assert frame.loc[f"G{n}", "rmse"] <= 2.0 * frame.loc[f"G{n}d", "rmse"]
    # speed compared over all orders together
    one_sided = sum(frame.loc[f"G{n}", "sweep_time"] for n in PARITY_ORDERS)
    two_sided = sum(frame.loc[f"G{n}d", "sweep_time"] for n in PARITY_ORDERS)
    assert one_sided < two_sided
