"""OFDM с циклическим префиксом и однобитным АЦП во временной области.

После удаления CP канал пользователя k на антенне i — циркулянт G_{i,k}, поэтому
r_i = Σ_k G_{i,k} Fᴴ x_k + z_i. Оценка: G_{i,k} Fᴴ x_k = Φ_k g_{i,k}, и ненулевыми
остаются первые L отсчётов g. Детектирование: y = G_FD x с G_FD из блоков G_{i,k} Fᴴ.
"""
from __future__ import annotations

import logging
import math
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import circulant, dft

from app.models.channel_model import Constellation
from app.models.ofdm_model import OfdmConfig, OfdmDetection, OfdmObservation
from app.models.receiver_model import PER_ROW_SQRT_K, ChannelEstimate
from app.services.channel_service import ChannelService
from app.services.lifting_service import LiftingService
from app.services.svm_service import DEFAULT_MAX_ITER, DEFAULT_TOL, SvmService

logger = logging.getLogger(__name__)

ZERO_NORM = 1e-12


class OfdmService:
    """Модель приёма OFDM, SVM-оценка отводов и SVM-детектирование по символу."""

    def __init__(
        self,
        svm: Optional[SvmService] = None,
        lifting: Optional[LiftingService] = None,
        channel: Optional[ChannelService] = None,
    ) -> None:
        self._svm = svm or SvmService()
        self._lifting = lifting or LiftingService()
        self._channel = channel or ChannelService()

    # ---------- Матрицы ----------
    def circulant(self, first_column: np.ndarray) -> np.ndarray:
        """Циркулянт с заданным первым столбцом: столбец j — циклический сдвиг на j."""
        return circulant(np.asarray(first_column))

    def dft_matrix(self, Nc: int) -> np.ndarray:
        """Унитарная ДПФ: F Fᴴ = I."""
        return dft(Nc, scale="sqrtn")

    def channel_circulant(self, taps: np.ndarray, Nc: int) -> np.ndarray:
        """G = circ([g_0, …, g_{L−1}, 0, …, 0]) размера Nc×Nc."""
        taps = np.asarray(taps)
        if taps.size > Nc:
            raise ValueError(f"Отводов ({taps.size}) больше, чем поднесущих ({Nc})")
        column = np.zeros(Nc, dtype=np.complex128)
        column[: taps.size] = taps
        return self.circulant(column)

    # ---------- Приём ----------
    def simulate_ofdm_rx(
        self,
        taps: np.ndarray,
        X_FD: np.ndarray,
        N0: float,
        rng: np.random.Generator,
        config: OfdmConfig,
    ) -> OfdmObservation:
        """Однобитные наблюдения одного OFDM-символа.

        Args:
            taps: N×K×L отводы канала.
            X_FD: K×Nc символы на поднесущих.
            N0: Мощность шума на отсчёт (0 — без шума).

        Returns:
            `OfdmObservation` с N×Nc знаками ±1±j.
        """
        taps = np.asarray(taps)
        X_FD = np.atleast_2d(np.asarray(X_FD, dtype=np.complex128))
        n_ant, k_users, n_taps = taps.shape
        if X_FD.shape != (k_users, config.Nc):
            raise ValueError(f"X_FD должна быть {k_users}×{config.Nc}, получено {X_FD.shape}")
        if n_taps != config.L:
            raise ValueError(f"Число отводов {n_taps} не равно L={config.L}")
        if N0 < 0:
            raise ValueError(f"N0 должно быть ≥ 0, получено {N0}")
        x_TD = np.fft.ifft(X_FD, axis=1, norm="ortho")
        received = np.zeros((n_ant, config.Nc), dtype=np.complex128)
        for i in range(n_ant):
            for k in range(k_users):
                received[i] += self.channel_circulant(taps[i, k], config.Nc) @ x_TD[k]
        if N0 > 0:
            received = received + self._channel.awgn(received.shape, N0, rng)
        return OfdmObservation(y_TD=self._lifting.one_bit_quantize(received).complex)

    # ---------- Оценка ----------
    def pilot_matrix(self, X_FD: np.ndarray, L: int) -> np.ndarray:
        """Φ̄_L = [Φ_{1,L}, …, Φ_{K,L}] размера Nc×KL, Φ_k = circ(Fᴴ x_k)."""
        X_FD = np.atleast_2d(np.asarray(X_FD, dtype=np.complex128))
        x_TD = np.fft.ifft(X_FD, axis=1, norm="ortho")
        return np.concatenate([self.circulant(x)[:, :L] for x in x_TD], axis=1)

    def svm_ce_ofdm(
        self,
        y_TD: np.ndarray,
        X_FD: np.ndarray,
        L: int,
        C: float = 1.0,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
    ) -> ChannelEstimate:
        """SVM-оценка отводов всех антенн по одному пилотному OFDM-символу.

        Args:
            y_TD: N×Nc (или Nc) знаки во временной области.
            X_FD: K×Nc пилоты на поднесущих.

        Returns:
            `ChannelEstimate`, строка i — [h̄_{i,1}; …; h̄_{i,K}] длины KL, ‖ĥ_i‖² = K.

        Raises:
            ValueError: 2Nc < 2KL (ограничений меньше, чем неизвестных).
        """
        Y = np.atleast_2d(np.asarray(y_TD, dtype=np.complex128))
        X_FD = np.atleast_2d(np.asarray(X_FD, dtype=np.complex128))
        k_users, n_sub = X_FD.shape
        if Y.shape[1] != n_sub:
            raise ValueError(f"y_TD {Y.shape} и X_FD {X_FD.shape}: разное Nc")
        if 2 * n_sub < 2 * k_users * L:
            raise ValueError(f"Недоопределённая оценка: 2Nc={2 * n_sub} < 2KL={2 * k_users * L}")
        Phi = self._lifting.lift_block(self.pilot_matrix(X_FD, L))
        labels = self._lifting.stack_columns(Y.T)
        solutions = self._svm.solve_soft_margin_batch(Phi, labels, C, tol=tol, max_iter=max_iter, seed=seed)
        H_tilde = np.stack([self._lifting.unstack_columns(s.weights) for s in solutions])
        norms = np.linalg.norm(H_tilde, axis=1)
        flagged = norms <= ZERO_NORM
        scale = np.where(flagged, 0.0, math.sqrt(k_users) / np.where(flagged, 1.0, norms))
        if flagged.any():
            logger.warning("OFDM-оценка: %d антенн с нулевым решением", int(flagged.sum()))
        return ChannelEstimate(
            H_hat=H_tilde * scale[:, None],
            per_row_converged=np.array([s.converged for s in solutions]),
            norm_convention=PER_ROW_SQRT_K,
            flagged_rows=flagged,
        )

    def taps_from_estimate(self, estimate: ChannelEstimate, K: int, L: int) -> np.ndarray:
        """N×KL строки оценки → N×K×L отводы."""
        H_hat = np.asarray(estimate.H_hat)
        return H_hat.reshape(H_hat.shape[0], K, L)

    # ---------- Детектирование ----------
    def build_g_fd(self, taps: np.ndarray, Nc: int) -> np.ndarray:
        """Ḡ_FD размера N·Nc × K·Nc: блок (i, k) равен G_{i,k} Fᴴ."""
        taps = np.asarray(taps)
        n_ant, k_users, _ = taps.shape
        F_H = self.dft_matrix(Nc).conj().T
        return np.block([
            [self.channel_circulant(taps[i, k], Nc) @ F_H for k in range(k_users)]
            for i in range(n_ant)
        ])

    def svm_detect_ofdm(
        self,
        y_TD: Sequence[np.ndarray],
        taps_hat: np.ndarray,
        constellation: Constellation,
        C: float = 1.0,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
    ) -> OfdmDetection:
        """SVM-детектирование всех поднесущих для одного или нескольких OFDM-символов.

        Решение x̃ ∈ R^{2K·Nc} нормируется к ‖x̀‖² = K·Nc, затем символ на каждой
        поднесущей выбирается ближайшей точкой созвездия.

        Args:
            y_TD: N×Nc знаки или последовательность таких матриц (один канал на блок).
            taps_hat: N×K×L отводы (истинные или оценка).
        """
        observations = np.asarray(y_TD, dtype=np.complex128)
        if observations.ndim == 2:
            observations = observations[None]
        taps_hat = np.asarray(taps_hat)
        n_ant, k_users, _ = taps_hat.shape
        n_sym, n_rows, n_sub = observations.shape
        if n_rows != n_ant:
            raise ValueError(f"Число антенн в y_TD ({n_rows}) не равно N={n_ant}")
        G = self._lifting.lift_block(self.build_g_fd(taps_hat, n_sub))
        labels = self._lifting.stack_columns(observations.reshape(n_sym, n_ant * n_sub).T)
        solutions = self._svm.solve_soft_margin_batch(G, labels, C, tol=tol, max_iter=max_iter, seed=seed)

        soft = np.zeros((n_sym, k_users, n_sub), dtype=np.complex128)
        indices = np.zeros((n_sym, k_users, n_sub), dtype=int)
        flagged = 0
        for s, solution in enumerate(solutions):
            x = self._lifting.unstack_columns(solution.weights)
            norm = float(np.linalg.norm(x))
            if norm <= ZERO_NORM or not solution.converged:
                flagged += 1
            if norm > ZERO_NORM:
                x = x * (math.sqrt(k_users * n_sub) / norm)
                soft[s] = x.reshape(k_users, n_sub)
                indices[s] = constellation.slice(soft[s])
        logger.debug("OFDM-детектирование: %d символов, помечено %d", n_sym, flagged)
        return OfdmDetection(indices=indices, soft=soft, flagged=flagged)
