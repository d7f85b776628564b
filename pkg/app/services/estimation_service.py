"""Оценка канала через SVM: некоррелированный, коррелированный каналы и уточнение CE-DD.

Принципы:
- SRP: только оценка канала; решатель и раскладки — зависимости (`SvmService`, `LiftingService`).
- DIP: зависимости передаются в конструктор, по умолчанию создаются свои экземпляры.
"""
from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np

from app.models.receiver_model import GLOBAL_SQRT_KN, PER_ROW_SQRT_K, ChannelEstimate
from app.services.lifting_service import LiftingService
from app.services.svm_service import DEFAULT_MAX_ITER, DEFAULT_TOL, SvmService

logger = logging.getLogger(__name__)

ZERO_NORM = 1e-12


class EstimationService:
    """SVM-оценщики канала по однобитным пилотам."""

    def __init__(self, svm: Optional[SvmService] = None, lifting: Optional[LiftingService] = None) -> None:
        self._svm = svm or SvmService()
        self._lifting = lifting or LiftingService()

    def svm_ce_uncorrelated(
        self,
        Y_t: np.ndarray,
        X_t: np.ndarray,
        C: float = 1.0,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
    ) -> ChannelEstimate:
        """N независимых SVM (по одной на антенну) и нормировка ‖ĥ_{t,i}‖² = K.

        Args:
            Y_t: N×2T_t знаки [Re Ȳ_t, Im Ȳ_t].
            X_t: 2K×2T_t вещественные пилоты (`LiftingService.realify_ce`).

        Returns:
            `ChannelEstimate` с соглашением `per_row_sqrtK` и двойственными переменными 2T_t×N.
        """
        Y_t, X_t = self._check_ce_inputs(Y_t, X_t)
        solutions = self._svm.solve_soft_margin_batch(X_t.T, Y_t.T, C, tol=tol, max_iter=max_iter, seed=seed)
        return self._row_normalized(solutions, X_t.shape[0] // 2)

    def svm_ce_correlated(
        self,
        Y_t: np.ndarray,
        X_t: np.ndarray,
        covariances: Sequence[np.ndarray],
        C: float = 1.0,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
    ) -> ChannelEstimate:
        """Совместная оценка с отступом Махаланобиса и нормировкой ‖Ĥ‖_F = √(KN).

        Args:
            covariances: K комплексных N×N ковариаций C̄_k; поднимаются в
                [[Re, −Im], [Im, Re]].
        """
        Y_t, X_t = self._check_ce_inputs(Y_t, X_t)
        n_ant, n_cols = Y_t.shape
        k_users = X_t.shape[0] // 2
        if len(covariances) != k_users:
            raise ValueError(f"Нужно K={k_users} ковариаций, получено {len(covariances)}")
        spec = self._svm.build_mahalanobis_spec([self._lifting.lift_block(c) for c in covariances])
        if spec.antennas != n_ant:
            raise ValueError(f"Размер ковариаций ({spec.antennas}) не равен N={n_ant}")

        x_rows = np.tile(X_t.T, (n_ant, 1))
        antennas = np.repeat(np.arange(n_ant), n_cols)
        H_tilde, solution = self._svm.solve_mahalanobis_margin(
            x_rows, Y_t.ravel(), antennas, spec, C, tol=tol, max_iter=max_iter, seed=seed
        )
        norm = float(np.linalg.norm(H_tilde))
        flagged = np.zeros(n_ant, dtype=bool)
        if norm <= ZERO_NORM:
            logger.warning("Коррелированная оценка: нулевое решение, все строки помечены")
            H_hat_t = np.zeros_like(H_tilde)
            flagged[:] = True
        else:
            H_hat_t = H_tilde * (math.sqrt(k_users * n_ant) / norm)
        return ChannelEstimate(
            H_hat=self._lifting.derealify_ce_channel(H_hat_t),
            per_row_converged=np.full(n_ant, solution.converged),
            norm_convention=GLOBAL_SQRT_KN,
            flagged_rows=flagged,
        )

    def joint_ce_dd_refine(
        self,
        Y_t: np.ndarray,
        X_t: np.ndarray,
        Y_d2: np.ndarray,
        X_hat_d2: np.ndarray,
        C: float = 1.0,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
        initial: Optional[ChannelEstimate] = None,
    ) -> ChannelEstimate:
        """Уточнение оценки: пилоты плюс детектированные данные как псевдопилоты.

        Args:
            Y_d2: N×2T_d знаки данных [Re Ȳ_d, Im Ȳ_d].
            X_hat_d2: 2K×2T_d детектированные данные в раскладке пилотов.
            initial: Оценка по пилотам; её двойственные переменные — тёплый старт
                (нули для ограничений данных).
        """
        Y_t, X_t = self._check_ce_inputs(Y_t, X_t)
        Y_d2 = np.atleast_2d(np.asarray(Y_d2, dtype=np.float64))
        X_hat_d2 = np.atleast_2d(np.asarray(X_hat_d2, dtype=np.float64))
        if (
            Y_d2.shape[0] != Y_t.shape[0]
            or X_hat_d2.shape[0] != X_t.shape[0]
            or Y_d2.shape[1] != X_hat_d2.shape[1]
        ):
            raise ValueError(f"Y_d2 {Y_d2.shape} и X̂_d2 {X_hat_d2.shape} не согласованы")
        features = np.concatenate([X_t, X_hat_d2], axis=1).T
        labels = np.concatenate([Y_t, Y_d2], axis=1).T
        init = self._warm_start(initial, features.shape[0], Y_t.shape[0])
        solutions = self._svm.solve_soft_margin_batch(
            features, labels, C, tol=tol, max_iter=max_iter, seed=seed, init_duals=init
        )
        logger.debug("CE-DD: %d пилотных + %d ограничений данных", X_t.shape[1], X_hat_d2.shape[1])
        return self._row_normalized(solutions, X_t.shape[0] // 2)

    def nmse(self, H_hat: np.ndarray, H: np.ndarray) -> float:
        """‖Ĥ − H̄‖²_F / (KN) для одной реализации."""
        H = np.asarray(H)
        return float(np.linalg.norm(np.asarray(H_hat) - H) ** 2 / H.size)

    # ---------- Вспомогательные функции ----------
    def _check_ce_inputs(self, Y_t: np.ndarray, X_t: np.ndarray):
        Y_t = np.atleast_2d(np.asarray(Y_t, dtype=np.float64))
        X_t = np.atleast_2d(np.asarray(X_t, dtype=np.float64))
        if Y_t.shape[1] != X_t.shape[1]:
            raise ValueError(f"Y_t {Y_t.shape} и X_t {X_t.shape}: разное число обучающих точек")
        if X_t.shape[0] % 2:
            raise ValueError(f"X_t должна иметь 2K строк, получено {X_t.shape[0]}")
        return Y_t, X_t

    def _warm_start(self, initial: Optional[ChannelEstimate], n_points: int, n_ant: int) -> Optional[np.ndarray]:
        if initial is None or initial.duals is None:
            return None
        duals = np.asarray(initial.duals)
        if duals.shape[1] != n_ant or duals.shape[0] > n_points:
            return None
        init = np.zeros((n_points, n_ant))
        init[: duals.shape[0]] = duals
        return init

    def _row_normalized(self, solutions, k_users: int) -> ChannelEstimate:
        H_tilde = np.stack([s.weights for s in solutions])
        norms = np.linalg.norm(H_tilde, axis=1)
        flagged = norms <= ZERO_NORM
        scale = np.where(flagged, 0.0, math.sqrt(k_users) / np.where(flagged, 1.0, norms))
        if flagged.any():
            logger.warning("Оценка канала: %d строк с нулевым решением", int(flagged.sum()))
        return ChannelEstimate(
            H_hat=self._lifting.derealify_ce_channel(H_tilde * scale[:, None]),
            per_row_converged=np.array([s.converged for s in solutions]),
            norm_convention=PER_ROW_SQRT_K,
            flagged_rows=flagged,
            duals=np.stack([s.duals for s in solutions], axis=1),
        )
