import json

import numpy as np
import pytest

from app.core.exceptions import ConfigurationError, SpectralDataError
from app.models.enums import Dispersion, SchemeFamily, SplitMode
from app.schemas.experiment import ExperimentConfig, SignalConfig
from app.schemas.spectral import SpectralDataFile, load_spectral_data, save_spectral_data


def test_spectral_data_file_round_trip(tmp_path, mixed_data):
    path = save_spectral_data(mixed_data, tmp_path / "sd.json")
    loaded = load_spectral_data(path)

    assert loaded.dispersion is Dispersion.ANOMALOUS
    assert np.allclose(loaded.xi_grid, mixed_data.xi_grid, atol=1e-12)
    assert np.array_equal(loaded.reflection, mixed_data.reflection)
    assert loaded.discrete == mixed_data.discrete


def test_file_format_uses_pairs(mixed_data):
    payload = json.loads(SpectralDataFile.from_domain(mixed_data).model_dump_json())
    assert payload["side"] == "left"
    assert payload["xi_min"] == -20.0
    assert len(payload["reflection"][0]) == 2
    assert payload["discrete"][0]["zeta"] == [0.2, 0.6]


@pytest.mark.parametrize(
    "payload",
    [
        "not json",
        json.dumps({"dispersion": "anomalous", "xi_min": 0, "xi_max": 1, "reflection": [[0, 0]]}),
        json.dumps({"dispersion": "normal", "xi_min": 0, "xi_max": 1, "reflection": [[0, 0], [0, 0]],
                    "discrete": [{"zeta": [0, 1], "norm": [1, 0]}]}),
        json.dumps({"dispersion": "sideways", "xi_min": 0, "xi_max": 1, "reflection": [[0, 0], [0, 0]]}),
    ],
)
def test_invalid_files_raise_spectral_data_error(tmp_path, payload):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    with pytest.raises(SpectralDataError):
        load_spectral_data(path)


def test_experiment_defaults():
    cfg = ExperimentConfig()
    assert cfg.schemes == [SchemeFamily.TIB, SchemeFamily.G6, SchemeFamily.G6D]
    assert cfg.split is SplitMode.SPLIT_AT_ZERO
    assert cfg.signal.amplitude == pytest.approx(5.2)
    assert cfg.signal.chirp == pytest.approx(4.0)


@pytest.mark.parametrize(
    "overrides",
    [{"ladder": [64, 48]}, {"ladder": [128, 64]}, {"ladder": []}, {"schemes": []},
     {"schemes": ["G7"]}, {"M_xi": 1}],
)
def test_invalid_experiment_options(overrides):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.build(**overrides)


def test_config_file_with_overrides(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"dispersion": "normal", "ladder": [32, 64], "seed": 3}))
    cfg = ExperimentConfig.build(path, seed=9, workers=None)
    assert cfg.dispersion is Dispersion.NORMAL
    assert cfg.ladder == [32, 64]
    assert cfg.seed == 9


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        ExperimentConfig.from_file(tmp_path / "absent.json")


def test_soliton_eigenvalue_must_be_in_upper_half_plane():
    with pytest.raises(ValueError):
        SignalConfig(kind="soliton", zeta=(0.0, -0.5))


def test_signal_config_drops_chirp_for_plain_sech():
    assert SignalConfig(kind="sech", chirp=3.0).to_closed_form().chirp == 0.0
