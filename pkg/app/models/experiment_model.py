"""Модели эксперимента Монте-Карло: конфиг, записи испытаний, таблица метрик."""
from __future__ import annotations

from dataclasses import dataclass, field, fields
from typing import Optional, Tuple

SCENARIOS = ("flat_iid", "flat_correlated", "ofdm")
ESTIMATORS = ("svm", "svm_correlated", "joint_ce_dd", "perfect_csi")
DETECTORS = ("svm_two_stage", "svm_stage1", "ml", "ofdm_svm")
CONSTELLATIONS = ("QPSK", "16QAM")
WEIGHT_MODES = ("llr", "unweighted")
LOG_PHI_MODES = ("asymptotic", "osd")
ML_LIKELIHOODS = ("log", "direct")

METRICS = ("NMSE", "BER", "mean_candidates", "flagged_rows")


@dataclass(frozen=True)
class ExperimentConfig:
    """Параметры одного прогона. Значения по умолчанию — как в численных опытах.

    Fields: см. README, раздел «Конфиг». SNR всегда в дБ.
    """
    scenario: str = "flat_iid"
    K: int = 4
    N: int = 32
    T_t: int = 20
    T_d: int = 480
    block_length: int = 500
    Nc: int = 256
    Ncp: int = 16
    L: int = 8
    ofdm_data_symbols: int = 1
    constellation: str = "QPSK"
    pilot_constellation: str = "QPSK"
    snr_grid_dB: Tuple[float, ...] = (0.0, 5.0, 10.0)
    estimator: str = "svm"
    detector: str = "svm_two_stage"
    trials: int = 10
    master_seed: int = 0
    C: float = 1.0
    tol: float = 1e-6
    max_iter: int = 10000
    gamma_override: Optional[float] = None
    refine_rounds: int = 1
    weight_mode: str = "llr"
    log_phi_mode: str = "asymptotic"
    ml_likelihood: str = "log"
    angle_spread_deg: float = 10.0
    element_spacing: float = 0.5
    mean_angle_range_deg: float = 60.0

    @classmethod
    def field_names(cls) -> Tuple[str, ...]:
        return tuple(f.name for f in fields(cls))


@dataclass(frozen=True)
class TrialRecord:
    """Наблюдения одного испытания (одна реализация канала на одном SNR).

    Fields:
        snr_index, trial_index: Координаты испытания.
        nmse: ‖Ĥ − H̄‖²_F / (KN); None при perfect_csi.
        bit_errors, bits: Ошибочные и все переданные биты.
        candidate_total, vectors: Σ|X| и число детектированных векторов.
        flagged: Нулевые строки оценки + несошедшиеся решения.
    """
    snr_index: int
    trial_index: int
    nmse: Optional[float]
    bit_errors: int
    bits: int
    candidate_total: int
    vectors: int
    flagged: int


@dataclass(frozen=True)
class MetricRow:
    snr_dB: float
    metric: str
    mean: float
    stderr: float
    n: int


@dataclass(frozen=True)
class MetricTable:
    """Агрегированные метрики, строка на пару (SNR, метрика)."""
    rows: Tuple[MetricRow, ...] = field(default=())

    def get(self, snr_dB: float, metric: str) -> MetricRow:
        for row in self.rows:
            if row.metric == metric and row.snr_dB == snr_dB:
                return row
        raise KeyError(f"Нет метрики {metric} для SNR={snr_dB} дБ")

    def series(self, metric: str) -> Tuple[Tuple[float, float], ...]:
        return tuple((r.snr_dB, r.mean) for r in self.rows if r.metric == metric)
