"""Tests for YAML configuration loading and validation."""

import dataclasses

import pytest
import yaml

from app.models.errors import ConfigError
from app.models.experiment_model import ExperimentConfig
from app.services.config_service import ConfigService


def _write(tmp_path, text):
    path = tmp_path / "experiment.yaml"
    path.write_text(text, encoding="utf-8")
    return path


class TestLoad:
    """File parsing and defaults."""

    def test_empty_file_gives_defaults(self, tmp_path):
        config = ConfigService().load_config(_write(tmp_path, ""))
        assert config == ExperimentConfig()
        assert config.T_t + config.T_d == config.block_length == 500

    def test_values_and_units(self, tmp_path):
        config = ConfigService().load_config(_write(tmp_path, (
            "scenario: flat_iid\nK: 2\nN: 16\nT_t: 40\nsnr_grid_dB: [0, 10, 20]\n"
            "tol: 1e-5\ndetector: ml\ntrials: 3\n"
        )))
        assert config.snr_grid_dB == (0.0, 10.0, 20.0)
        assert config.T_d == 460
        assert config.tol == pytest.approx(1e-5)
        assert config.detector == "ml"

    def test_block_length_derived_from_t_d(self, tmp_path):
        config = ConfigService().load_config(_write(tmp_path, "T_t: 10\nT_d: 90\n"))
        assert config.block_length == 100

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="не найден"):
            ConfigService().load_config(tmp_path / "absent.yaml")

    def test_not_a_mapping(self, tmp_path):
        with pytest.raises(ConfigError, match="словарь"):
            ConfigService().load_config(_write(tmp_path, "- 1\n- 2\n"))

    def test_broken_yaml(self, tmp_path):
        with pytest.raises(ConfigError, match="YAML"):
            ConfigService().load_config(_write(tmp_path, "K: [1, 2\n"))


class TestRoundTrip:
    """parse(dump(config)) == config."""

    @pytest.mark.parametrize("config", [
        ExperimentConfig(),
        ExperimentConfig(scenario="flat_correlated", estimator="svm_correlated", snr_grid_dB=(20.0, 30.0)),
        ExperimentConfig(scenario="ofdm", K=2, N=8, Nc=64, Ncp=8, L=4, estimator="perfect_csi", detector="ofdm_svm"),
        ExperimentConfig(estimator="joint_ce_dd", gamma_override=2.0, refine_rounds=2, tol=1e-3),
    ])
    def test_roundtrip(self, config):
        service = ConfigService()
        assert service.parse_mapping(yaml.safe_load(service.dump_config(config))) == config


class TestValidation:
    """Every inconsistency is a ConfigError raised before computation."""

    @pytest.mark.parametrize("text, message", [
        ("colour: red\n", "Неизвестные ключи"),
        ("K: two\n", "Некорректное значение K"),
        ("K: 1.5\n", "Некорректное значение K"),
        ("trials: true\n", "Некорректное значение trials"),
        ("scenario: 7\n", "строкой"),
        ("scenario: mmwave\n", "scenario"),
        ("snr_grid_dB: 5\n", "snr_grid_dB"),
        ("snr_grid_dB: []\n", "пустым"),
        ("snr_grid_dB: [0, 0]\n", "повторы"),
        ("T_t: 20\nT_d: 100\nblock_length: 500\n", "block_length"),
        ("K: 8\nN: 4\n", "N ≥ K"),
        ("trials: 0\n", "trials"),
        ("C: 0\n", "C должно"),
        ("estimator: svm_correlated\n", "flat_correlated"),
        ("detector: ofdm_svm\n", "не для плоского"),
        ("detector: ml\nconstellation: 16QAM\nK: 5\n", "ML-перебор"),
        ("scenario: ofdm\ndetector: svm_two_stage\n", "не для OFDM"),
        ("scenario: ofdm\ndetector: ofdm_svm\nestimator: joint_ce_dd\n", "не для OFDM"),
        ("scenario: ofdm\ndetector: ofdm_svm\nNc: 100\n", "степень двойки"),
        ("scenario: ofdm\ndetector: ofdm_svm\nL: 20\n", "Ncp"),
        ("gamma_override: 0.5\n", "gamma_override"),
        ("weight_mode: cosine\n", "weight_mode"),
    ])
    def test_rejected(self, tmp_path, text, message):
        with pytest.raises(ConfigError, match=message):
            ConfigService().load_config(_write(tmp_path, text))

    def test_errors_are_value_errors(self):
        with pytest.raises(ValueError):
            ConfigService().validate(ExperimentConfig(K=0))


class TestOverrides:
    def test_seed_override(self):
        config = ConfigService().with_overrides(ExperimentConfig(), master_seed=99)
        assert config.master_seed == 99
        assert dataclasses.replace(config, master_seed=0) == ExperimentConfig()

    def test_no_override(self):
        config = ExperimentConfig(trials=4)
        assert ConfigService().with_overrides(config) is config

    def test_seed_range(self):
        with pytest.raises(ConfigError, match="u64"):
            ConfigService().with_overrides(ExperimentConfig(), master_seed=-1)
