"""Монте-Карло движок: испытания по сетке SNR и агрегирование метрик.

Испытание (snr_index, t) получает собственный поток RNG из
SeedSequence(master_seed, spawn_key=(snr_index, t)), поэтому результат не зависит
от числа процессов и порядка выполнения. Записи сводятся в порядке индексов.
"""
from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.models.channel_model import Constellation, CorrelationSpec
from app.models.experiment_model import METRICS, ExperimentConfig, MetricRow, MetricTable, TrialRecord
from app.models.ofdm_model import OfdmConfig
from app.models.signal_model import QuantizedMatrix
from app.services.channel_service import ChannelService
from app.services.config_service import ConfigService
from app.services.detection_service import DetectionService
from app.services.estimation_service import EstimationService
from app.services.lifting_service import LiftingService
from app.services.ofdm_service import OfdmService

logger = logging.getLogger(__name__)

SEED_BOUND = 2 ** 31


def _run_trial_task(task: Tuple[ExperimentConfig, int, int]) -> TrialRecord:
    # точка входа для дочерних процессов (должна импортироваться по имени)
    config, snr_index, trial_index = task
    return ExperimentService().run_trial(config, snr_index, trial_index)


class ExperimentService:
    """Прогон эксперимента: испытания → `TrialRecord` → `MetricTable`."""

    def __init__(
        self,
        channel: Optional[ChannelService] = None,
        lifting: Optional[LiftingService] = None,
        estimation: Optional[EstimationService] = None,
        detection: Optional[DetectionService] = None,
        ofdm: Optional[OfdmService] = None,
        config_service: Optional[ConfigService] = None,
    ) -> None:
        self._channel = channel or ChannelService()
        self._lifting = lifting or LiftingService()
        self._estimation = estimation or EstimationService(lifting=self._lifting)
        self._detection = detection or DetectionService(lifting=self._lifting)
        self._ofdm = ofdm or OfdmService(lifting=self._lifting, channel=self._channel)
        self._config_service = config_service or ConfigService()

    def run_experiment(self, config: ExperimentConfig, workers: int = 1) -> MetricTable:
        """Все испытания на всех точках SNR.

        Args:
            config: Проверенный конфиг (проверяется повторно до вычислений).
            workers: Число процессов; 1 — в текущем процессе.

        Raises:
            ConfigError: некорректный конфиг.
        """
        self._config_service.validate(config)
        if workers < 1:
            raise ValueError(f"Число потоков должно быть ≥ 1, получено {workers}")
        tasks = [
            (config, s, t)
            for s in range(len(config.snr_grid_dB))
            for t in range(config.trials)
        ]
        logger.info(
            "Эксперимент %s: оценщик %s, детектор %s, %d испытаний, процессов %d",
            config.scenario, config.estimator, config.detector, len(tasks), workers,
        )
        if workers == 1:
            records = [self.run_trial(*task) for task in tasks]
        else:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                records = list(pool.map(_run_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
        table = self.aggregate(config, records)
        logger.info("Эксперимент завершён: %d строк метрик", len(table.rows))
        return table

    def trial_rng(self, master_seed: int, snr_index: int, trial_index: int) -> np.random.Generator:
        """Независимый поток для испытания (master_seed, snr_index, trial_index)."""
        sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(snr_index, trial_index))
        return np.random.default_rng(sequence)

    def run_trial(self, config: ExperimentConfig, snr_index: int, trial_index: int) -> TrialRecord:
        """Одна реализация канала и блок данных на одной точке SNR."""
        rng = self.trial_rng(config.master_seed, snr_index, trial_index)
        if config.scenario == "ofdm":
            return self._run_ofdm_trial(config, snr_index, trial_index, rng)
        return self._run_flat_trial(config, snr_index, trial_index, rng)

    def aggregate(self, config: ExperimentConfig, records: Sequence[TrialRecord]) -> MetricTable:
        """Средние и стандартные ошибки по испытаниям, строки в порядке (SNR, метрика)."""
        rows: List[MetricRow] = []
        for s, snr_db in enumerate(config.snr_grid_dB):
            point = sorted((r for r in records if r.snr_index == s), key=lambda r: r.trial_index)
            if not point:
                continue
            nmse = [r.nmse for r in point if r.nmse is not None]
            if nmse:
                rows.append(self._metric_row(snr_db, "NMSE", float(np.mean(nmse)), nmse))
            bits = sum(r.bits for r in point)
            if bits:
                per_trial = [r.bit_errors / r.bits for r in point if r.bits]
                rows.append(self._metric_row(snr_db, "BER", sum(r.bit_errors for r in point) / bits, per_trial))
            vectors = sum(r.vectors for r in point)
            if vectors:
                per_trial = [r.candidate_total / r.vectors for r in point if r.vectors]
                rows.append(self._metric_row(
                    snr_db, "mean_candidates", sum(r.candidate_total for r in point) / vectors, per_trial
                ))
            flagged = [float(r.flagged) for r in point]
            rows.append(self._metric_row(snr_db, "flagged_rows", float(np.mean(flagged)), flagged))
            logger.info(
                "SNR %g дБ: %s",
                snr_db,
                ", ".join(f"{row.metric}={row.mean:.4g}" for row in rows if row.snr_dB == snr_db),
            )
        order = {name: i for i, name in enumerate(METRICS)}
        rows.sort(key=lambda row: (config.snr_grid_dB.index(row.snr_dB), order[row.metric]))
        return MetricTable(rows=tuple(rows))

    # ---------- Плоский канал ----------
    def _run_flat_trial(
        self, config: ExperimentConfig, snr_index: int, trial_index: int, rng: np.random.Generator
    ) -> TrialRecord:
        snr_db = config.snr_grid_dB[snr_index]
        constellation = self._channel.constellation(config.constellation)
        pilots = self._channel.constellation(config.pilot_constellation)

        covariances = None
        if config.scenario == "flat_correlated":
            angles = self._channel.draw_mean_angles(config.K, config.mean_angle_range_deg, rng)
            spec = CorrelationSpec(config.angle_spread_deg, angles, config.element_spacing)
            covariances = self._channel.laplacian_covariance(spec, config.N)
            H = self._channel.gen_correlated_channel(covariances, rng).H
        else:
            H = self._channel.gen_iid_channel(config.N, config.K, rng).H

        X_t = self._channel.gen_symbols(config.K, config.T_t, pilots, rng)
        data = self._channel.gen_symbol_indices(config.K, config.T_d, constellation, rng)
        N0 = self._channel.noise_power(snr_db)
        Y_t = self._lifting.one_bit_quantize(H @ X_t + self._channel.awgn((config.N, config.T_t), N0, rng))
        Y_d = self._lifting.one_bit_quantize(
            H @ constellation.points[data] + self._channel.awgn((config.N, config.T_d), N0, rng)
        )
        seed = int(rng.integers(SEED_BOUND))

        H_hat, flagged, detection = self._estimate_and_detect(
            config, H, covariances, X_t, Y_t, Y_d, constellation, snr_db, seed
        )
        bit_errors = int(np.count_nonzero(constellation.bits(detection.indices) != constellation.bits(data)))
        return TrialRecord(
            snr_index=snr_index,
            trial_index=trial_index,
            nmse=None if config.estimator == "perfect_csi" else self._estimation.nmse(H_hat, H),
            bit_errors=bit_errors,
            bits=int(data.size * constellation.bits_per_symbol),
            candidate_total=int(detection.candidate_sizes.sum()),
            vectors=int(config.T_d),
            flagged=flagged + int(detection.flagged),
        )

    def _estimate_and_detect(
        self,
        config: ExperimentConfig,
        H: np.ndarray,
        covariances,
        X_t: np.ndarray,
        Y_t: QuantizedMatrix,
        Y_d: QuantizedMatrix,
        constellation: Constellation,
        snr_db: float,
        seed: int,
    ):
        ce = self._lifting.realify_ce(Y_t, X_t)
        Y_d_real = self._lifting.stack_columns(Y_d.complex)
        solver = dict(C=config.C, tol=config.tol, max_iter=config.max_iter, seed=seed)

        if config.estimator == "perfect_csi":
            return H, 0, self._detect(config, Y_d_real, H, constellation, snr_db, seed)
        if config.estimator == "svm_correlated":
            estimate = self._estimation.svm_ce_correlated(ce.Y_t, ce.X_t, covariances, **solver)
        else:
            estimate = self._estimation.svm_ce_uncorrelated(ce.Y_t, ce.X_t, **solver)
        flagged = estimate.flagged_count
        detection = self._detect(config, Y_d_real, estimate.H_hat, constellation, snr_db, seed)

        if config.estimator == "joint_ce_dd":
            for round_index in range(config.refine_rounds):
                data_forms = self._lifting.lift_det_data_for_ce(Y_d, constellation.points[detection.indices])
                estimate = self._estimation.joint_ce_dd_refine(
                    ce.Y_t, ce.X_t, data_forms.Y_t, data_forms.X_t, initial=estimate, **solver
                )
                flagged = estimate.flagged_count
                detection = self._detect(config, Y_d_real, estimate.H_hat, constellation, snr_db, seed)
                logger.debug("CE-DD раунд %d завершён", round_index + 1)
        return estimate.H_hat, flagged, detection

    def _detect(self, config, Y_d_real, H_hat, constellation, snr_db, seed):
        solver = dict(C=config.C, tol=config.tol, max_iter=config.max_iter, seed=seed)
        if config.detector == "ml":
            return self._detection.ml_detect_block(
                Y_d_real, H_hat, snr_db, constellation,
                likelihood=config.ml_likelihood, log_phi_mode=config.log_phi_mode,
            )
        if config.detector == "svm_stage1":
            return self._detection.stage1_detect(Y_d_real, H_hat, constellation, **solver)
        return self._detection.two_stage_detect(
            Y_d_real, H_hat, constellation, snr_db, gamma=config.gamma_override,
            weight_mode=config.weight_mode, log_phi_mode=config.log_phi_mode, **solver,
        )

    # ---------- OFDM ----------
    def _run_ofdm_trial(
        self, config: ExperimentConfig, snr_index: int, trial_index: int, rng: np.random.Generator
    ) -> TrialRecord:
        snr_db = config.snr_grid_dB[snr_index]
        constellation = self._channel.constellation(config.constellation)
        pilots = self._channel.constellation(config.pilot_constellation)
        ofdm_config = OfdmConfig(Nc=config.Nc, Ncp=config.Ncp, L=config.L, constellation=constellation)
        taps = self._channel.gen_freq_selective(config.N, config.K, config.L, rng).taps
        N0 = self._channel.noise_power(snr_db)

        X_p = self._channel.gen_symbols(config.K, config.Nc, pilots, rng)
        pilot_obs = self._ofdm.simulate_ofdm_rx(taps, X_p, N0, rng, ofdm_config)
        data = np.stack([
            self._channel.gen_symbol_indices(config.K, config.Nc, constellation, rng)
            for _ in range(config.ofdm_data_symbols)
        ])
        data_obs = [
            self._ofdm.simulate_ofdm_rx(taps, constellation.points[d], N0, rng, ofdm_config).y_TD
            for d in data
        ]
        seed = int(rng.integers(SEED_BOUND))
        solver = dict(C=config.C, tol=config.tol, max_iter=config.max_iter, seed=seed)

        nmse = None
        flagged = 0
        taps_hat = taps
        if config.estimator == "svm":
            estimate = self._ofdm.svm_ce_ofdm(pilot_obs.y_TD, X_p, config.L, **solver)
            taps_hat = self._ofdm.taps_from_estimate(estimate, config.K, config.L)
            nmse = float(np.linalg.norm(taps_hat - taps) ** 2 / (config.K * config.N))
            flagged = estimate.flagged_count
        detection = self._ofdm.svm_detect_ofdm(data_obs, taps_hat, constellation, **solver)
        bit_errors = int(np.count_nonzero(constellation.bits(detection.indices) != constellation.bits(data)))
        return TrialRecord(
            snr_index=snr_index,
            trial_index=trial_index,
            nmse=nmse,
            bit_errors=bit_errors,
            bits=int(data.size * constellation.bits_per_symbol),
            candidate_total=0,
            vectors=0,
            flagged=flagged + detection.flagged,
        )

    # ---------- Вспомогательные функции ----------
    def _metric_row(self, snr_db: float, metric: str, mean: float, samples: Sequence[float]) -> MetricRow:
        n = len(samples)
        stderr = float(np.std(samples, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
        return MetricRow(snr_dB=float(snr_db), metric=metric, mean=float(mean), stderr=stderr, n=n)
