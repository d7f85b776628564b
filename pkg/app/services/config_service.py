"""Загрузка, проверка и эхо-вывод YAML-конфига эксперимента.

Принципы:
- SRP: только конфиг; все ошибки обнаруживаются до начала вычислений.
- Чистый код: результат — неизменяемый `ExperimentConfig`.
"""
from __future__ import annotations

import dataclasses
import logging
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml

from app.models.errors import ConfigError
from app.models.experiment_model import (
    CONSTELLATIONS,
    DETECTORS,
    ESTIMATORS,
    LOG_PHI_MODES,
    ML_LIKELIHOODS,
    SCENARIOS,
    WEIGHT_MODES,
    ExperimentConfig,
)
from app.services.channel_service import CONSTELLATION_ORDERS
from app.services.detection_service import ML_MAX_CANDIDATES

logger = logging.getLogger(__name__)

INT_FIELDS = (
    "K", "N", "T_t", "T_d", "block_length", "Nc", "Ncp", "L",
    "ofdm_data_symbols", "trials", "master_seed", "max_iter", "refine_rounds",
)
FLOAT_FIELDS = ("C", "tol", "angle_spread_deg", "element_spacing", "mean_angle_range_deg")
CHOICES = {
    "scenario": SCENARIOS,
    "estimator": ESTIMATORS,
    "detector": DETECTORS,
    "constellation": CONSTELLATIONS,
    "pilot_constellation": CONSTELLATIONS,
    "weight_mode": WEIGHT_MODES,
    "log_phi_mode": LOG_PHI_MODES,
    "ml_likelihood": ML_LIKELIHOODS,
}
FLAT_ESTIMATORS = ("svm", "svm_correlated", "joint_ce_dd", "perfect_csi")
FLAT_DETECTORS = ("svm_two_stage", "svm_stage1", "ml")
OFDM_ESTIMATORS = ("svm", "perfect_csi")
U64_MAX = 2 ** 64 - 1


class ConfigService:
    def load_config(self, file_path: str | Path) -> ExperimentConfig:
        """Читает YAML и возвращает проверенный конфиг.

        Raises:
            ConfigError: файл не найден, не YAML, неизвестные ключи, типы или несогласованные значения.
        """
        path = Path(file_path)
        if not path.exists() or not path.is_file():
            raise ConfigError(f"Файл не найден: {path}")
        try:
            raw = yaml.safe_load(path.read_text(encoding="utf-8"))
        except yaml.YAMLError as exc:
            raise ConfigError(f"Файл не является корректным YAML: {path}: {exc}") from exc
        if raw is None:
            raw = {}
        if not isinstance(raw, Mapping):
            raise ConfigError(f"Ожидался словарь ключ→значение в {path}")
        config = self.parse_mapping(raw)
        logger.info("Конфиг %s: сценарий %s, %d точек SNR", path, config.scenario, len(config.snr_grid_dB))
        return config

    def parse_mapping(self, raw: Mapping[str, Any]) -> ExperimentConfig:
        """Словарь → `ExperimentConfig` с выводом T_d из block_length (и наоборот)."""
        known = set(ExperimentConfig.field_names())
        unknown = sorted(str(k) for k in raw if k not in known)
        if unknown:
            raise ConfigError(f"Неизвестные ключи: {', '.join(unknown)}")

        values = {name: self._coerce(name, value) for name, value in raw.items()}
        defaults = ExperimentConfig()
        T_t = values.get("T_t", defaults.T_t)
        if "T_d" not in values:
            values["T_d"] = values.get("block_length", defaults.block_length) - T_t
        elif "block_length" not in values:
            values["block_length"] = T_t + values["T_d"]
        config = ExperimentConfig(**values)
        self.validate(config)
        return config

    def dump_config(self, config: ExperimentConfig) -> str:
        """YAML-эхо; `parse_mapping(yaml.safe_load(...))` возвращает равный конфиг."""
        data = dataclasses.asdict(config)
        data["snr_grid_dB"] = [float(v) for v in config.snr_grid_dB]
        return yaml.safe_dump(data, sort_keys=False, allow_unicode=True)

    def with_overrides(
        self, config: ExperimentConfig, master_seed: Optional[int] = None
    ) -> ExperimentConfig:
        """Переопределения из командной строки (сейчас только зерно)."""
        if master_seed is None:
            return config
        updated = dataclasses.replace(config, master_seed=int(master_seed))
        self.validate(updated)
        return updated

    def validate(self, config: ExperimentConfig) -> None:
        """Проверяет диапазоны и совместимость сценария, оценщика и детектора.

        Raises:
            ConfigError: при первом найденном нарушении.
        """
        for name, choices in CHOICES.items():
            if getattr(config, name) not in choices:
                raise ConfigError(f"{name}={getattr(config, name)!r}: допустимо {', '.join(choices)}")
        if not config.snr_grid_dB:
            raise ConfigError("snr_grid_dB не может быть пустым")
        if len(set(config.snr_grid_dB)) != len(config.snr_grid_dB):
            raise ConfigError("snr_grid_dB содержит повторы")
        self._require(config.N >= config.K >= 1, f"Нужно N ≥ K ≥ 1, получено N={config.N}, K={config.K}")
        self._require(config.trials >= 1, f"trials должно быть ≥ 1, получено {config.trials}")
        self._require(0 <= config.master_seed <= U64_MAX, "master_seed должен быть u64")
        self._require(config.C > 0, f"C должно быть > 0, получено {config.C}")
        self._require(config.tol > 0, f"tol должен быть > 0, получено {config.tol}")
        self._require(config.max_iter >= 1, f"max_iter должно быть ≥ 1, получено {config.max_iter}")
        self._require(config.refine_rounds >= 1, f"refine_rounds должно быть ≥ 1, получено {config.refine_rounds}")
        if config.gamma_override is not None:
            self._require(config.gamma_override >= 1, f"gamma_override должно быть ≥ 1, получено {config.gamma_override}")

        if config.scenario == "ofdm":
            self._validate_ofdm(config)
        else:
            self._validate_flat(config)

    # ---------- Вспомогательные функции ----------
    def _validate_flat(self, config: ExperimentConfig) -> None:
        self._require(config.T_t >= 1, f"T_t должно быть ≥ 1, получено {config.T_t}")
        self._require(config.T_d >= 1, f"T_d должно быть ≥ 1, получено {config.T_d}")
        self._require(
            config.block_length == config.T_t + config.T_d,
            f"block_length={config.block_length} ≠ T_t + T_d = {config.T_t + config.T_d}",
        )
        self._require(config.estimator in FLAT_ESTIMATORS, f"Оценщик {config.estimator} не для плоского канала")
        self._require(config.detector in FLAT_DETECTORS, f"Детектор {config.detector} не для плоского канала")
        if config.estimator == "svm_correlated":
            self._require(config.scenario == "flat_correlated", "svm_correlated требует scenario=flat_correlated")
        if config.scenario == "flat_correlated":
            self._require(config.angle_spread_deg > 0, "angle_spread_deg должен быть > 0")
            self._require(config.element_spacing > 0, "element_spacing должен быть > 0")
            self._require(0 <= config.mean_angle_range_deg <= 90, "mean_angle_range_deg вне [0, 90]")
        if config.detector == "ml":
            total = CONSTELLATION_ORDERS[config.constellation] ** config.K
            self._require(total <= ML_MAX_CANDIDATES, f"ML-перебор M^K={total} больше {ML_MAX_CANDIDATES}")

    def _validate_ofdm(self, config: ExperimentConfig) -> None:
        self._require(config.Nc >= 1 and not config.Nc & (config.Nc - 1), f"Nc={config.Nc} не степень двойки")
        self._require(config.L >= 1, f"L должно быть ≥ 1, получено {config.L}")
        self._require(
            config.L - 1 <= config.Ncp <= config.Nc,
            f"Нужно L − 1 ≤ Ncp ≤ Nc, получено L={config.L}, Ncp={config.Ncp}, Nc={config.Nc}",
        )
        self._require(config.Nc >= config.K * config.L, f"Нужно Nc ≥ KL, получено Nc={config.Nc}, KL={config.K * config.L}")
        self._require(config.ofdm_data_symbols >= 1, "ofdm_data_symbols должно быть ≥ 1")
        self._require(config.estimator in OFDM_ESTIMATORS, f"Оценщик {config.estimator} не для OFDM")
        self._require(config.detector == "ofdm_svm", f"Детектор {config.detector} не для OFDM")

    def _require(self, condition: bool, message: str) -> None:
        if not condition:
            raise ConfigError(message)

    def _coerce(self, name: str, value: Any) -> Any:
        # PyYAML читает "1e-6" как строку, поэтому числа из строк тоже принимаются
        try:
            if name in INT_FIELDS:
                if isinstance(value, bool) or isinstance(value, float) and not value.is_integer():
                    raise TypeError
                return int(value)
            if name in FLOAT_FIELDS:
                if isinstance(value, bool):
                    raise TypeError
                return float(value)
            if name == "gamma_override":
                return None if value is None else float(value)
            if name == "snr_grid_dB":
                if isinstance(value, (str, bytes)) or not hasattr(value, "__iter__"):
                    raise TypeError
                return tuple(float(v) for v in value)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"Некорректное значение {name}: {value!r}") from exc
        if not isinstance(value, str):
            raise ConfigError(f"{name} должно быть строкой, получено {value!r}")
        return value
