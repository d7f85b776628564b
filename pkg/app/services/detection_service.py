"""Детектирование данных по однобитным наблюдениям.

- Первая стадия: SVM с весами x ∈ R^{2K}, ограничения y_{d,i} · h_{d,i}ᵀ x ≥ 1 − ξ.
- Вторая стадия: кандидаты вокруг x̌ и выбор по взвешенному расстоянию Хэмминга.
- Эталон: ML полным перебором M^K векторов.
"""
from __future__ import annotations

import itertools
import logging
import math
from typing import Optional, Sequence, Tuple

import numpy as np
from scipy.special import log_ndtr, ndtr

from app.models.channel_model import Constellation
from app.models.errors import EnumerationError
from app.models.receiver_model import BlockDetection, DetectionResult
from app.services.lifting_service import LiftingService
from app.services.svm_service import DEFAULT_MAX_ITER, DEFAULT_TOL, SvmService

logger = logging.getLogger(__name__)

ML_MAX_CANDIDATES = 2 ** 16
ML_CHUNK_ELEMENTS = 2 ** 22
ASYMPTOTIC_CUTOFF = -8.0
ZERO_NORM = 1e-12
LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


class DetectionService:
    """Двухстадийный SVM-детектор и ML-эталон."""

    def __init__(self, svm: Optional[SvmService] = None, lifting: Optional[LiftingService] = None) -> None:
        self._svm = svm or SvmService()
        self._lifting = lifting or LiftingService()

    # ---------- Первая стадия ----------
    def svm_detect_stage1(
        self,
        Y_d: np.ndarray,
        H_d: np.ndarray,
        C: float = 1.0,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """SVM-решения для всех столбцов Y_d одним пакетом.

        Args:
            Y_d: 2N×T знаки [Re; Im] (или один столбец длины 2N).
            H_d: 2N×2K вещественный канал [[Re, −Im], [Im, Re]].

        Returns:
            (2K×T мягкие решения с ‖x̀‖² = K, T флагов «нулевое решение или несходимость»).
            Для помеченных столбцов мягкое решение нулевое.
        """
        H_d = np.asarray(H_d, dtype=np.float64)
        Y = np.asarray(Y_d, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y.reshape(-1, 1)
        if Y.shape[0] != H_d.shape[0]:
            raise ValueError(f"Y_d {Y.shape} и H_d {H_d.shape}: разное число вещественных антенн")
        k_users = H_d.shape[1] // 2
        solutions = self._svm.solve_soft_margin_batch(H_d, Y, C, tol=tol, max_iter=max_iter, seed=seed)
        X_tilde = np.stack([s.weights for s in solutions], axis=1)
        norms = np.linalg.norm(X_tilde, axis=0)
        zero = norms <= ZERO_NORM
        scale = np.where(zero, 0.0, math.sqrt(k_users) / np.where(zero, 1.0, norms))
        flagged = zero | ~np.array([s.converged for s in solutions])
        return X_tilde * scale[None, :], flagged

    def symbol_decide(self, soft: np.ndarray, constellation: Constellation) -> np.ndarray:
        """x̌_k = argmin_{s ∈ O} |x̀_k − s|; при равенстве — меньший индекс."""
        return constellation.slice(self._lifting.unstack_columns(np.asarray(soft)))

    def build_candidates(
        self,
        soft: np.ndarray,
        hard: np.ndarray,
        gamma: float,
        constellation: Constellation,
    ) -> Tuple[Tuple[int, ...], ...]:
        """X = X_1 × … × X_K, X_k = {s : |x̀_k − s| / |x̀_k − x̌_k| < γ} ∪ {x̌_k}.

        Если x̀_k совпадает с x̌_k, то X_k = {x̌_k}.

        Raises:
            ValueError: γ < 1.
        """
        if gamma < 1.0:
            raise ValueError(f"γ должно быть ≥ 1, получено {gamma}")
        symbols = self._lifting.unstack_columns(np.asarray(soft, dtype=np.float64))
        hard = np.asarray(hard, dtype=int)
        per_user = []
        for k, s_k in enumerate(symbols):
            denom = abs(s_k - constellation.points[hard[k]])
            if denom <= 0.0:
                per_user.append((int(hard[k]),))
                continue
            ratio = np.abs(s_k - constellation.points) / denom
            members = set(np.flatnonzero(ratio < gamma).tolist())
            members.add(int(hard[k]))
            per_user.append(tuple(sorted(members)))
        return tuple(itertools.product(*per_user))

    def gamma_schedule(self, snr_db: float, constellation: Constellation) -> float:
        """γ в дБ-шкале: QPSK — min(ρ/10 + 1.5, 3), 16QAM — min(ρ/10 + 1.3, 1.5)."""
        if constellation.name == "QPSK":
            return min(snr_db / 10.0 + 1.5, 3.0)
        if constellation.name == "16QAM":
            return min(snr_db / 10.0 + 1.3, 1.5)
        raise ValueError(f"Нет расписания γ для созвездия {constellation.name}")

    # ---------- Вторая стадия ----------
    def log_phi(self, t: np.ndarray, mode: str = "asymptotic") -> np.ndarray:
        """log Φ(t) без переполнения снизу.

        asymptotic: точное значение при t ≥ −8, иначе −t²/2 − log√(2π) − log(−t).
        osd: Φ(−|t|) ≈ ½·exp(−0.374t² − 0.777|t|).
        """
        t = np.asarray(t, dtype=np.float64)
        if mode == "asymptotic":
            tail = t < ASYMPTOTIC_CUTOFF
            safe = np.where(tail, -1.0, t)
            exact = log_ndtr(np.where(tail, 0.0, t))
            return np.where(tail, -0.5 * t * t - LOG_SQRT_2PI - np.log(-safe), exact)
        if mode == "osd":
            log_q = math.log(0.5) - 0.374 * t * t - 0.777 * np.abs(t)
            return np.where(t < 0, log_q, np.log1p(-np.exp(log_q)))
        raise ValueError(f"Неизвестный режим log Φ: {mode}")

    def weighted_hamming_select(
        self,
        candidates: Sequence[Tuple[int, ...]],
        y_d: np.ndarray,
        H_d: np.ndarray,
        snr_db: float,
        constellation: Constellation,
        stage1_hard: Optional[Sequence[int]] = None,
        weight_mode: str = "llr",
        log_phi_mode: str = "asymptotic",
    ) -> Tuple[int, ...]:
        """Кандидат с минимальным Σ_i w_i·1[ŷ_i ≠ y_i].

        ŷ = sign(H_d ẋ), w_i = log Φ(t_i) − log Φ(−t_i), t_i = √(2ρ)|h_{d,i}ᵀẋ|
        (w ≡ 1 в режиме unweighted). Равенство расстояний: сначала x̌, затем меньший индекс.
        """
        if not candidates:
            raise ValueError("Пустое множество кандидатов")
        cand = np.asarray(candidates, dtype=int)
        Z = self._real_candidates(cand, constellation) @ np.asarray(H_d, dtype=np.float64).T
        y_hat = np.where(Z >= 0, 1.0, -1.0)
        mismatch = y_hat != np.asarray(y_d, dtype=np.float64)[None, :]
        if weight_mode == "unweighted":
            weights = np.ones_like(Z)
        elif weight_mode == "llr":
            t = math.sqrt(2.0 * 10.0 ** (snr_db / 10.0)) * np.abs(Z)
            weights = self.log_phi(t, log_phi_mode) - self.log_phi(-t, log_phi_mode)
        else:
            raise ValueError(f"Неизвестный режим весов: {weight_mode}")
        distance = (weights * mismatch).sum(axis=1)
        best = np.flatnonzero(distance == distance.min())
        if stage1_hard is not None:
            preferred = tuple(int(v) for v in stage1_hard)
            for idx in best:
                if tuple(cand[idx]) == preferred:
                    return preferred
        return tuple(int(v) for v in cand[best[0]])

    def detect_vector(
        self,
        y_d: np.ndarray,
        H_hat: np.ndarray,
        constellation: Constellation,
        snr_db: float,
        C: float = 1.0,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
        gamma: Optional[float] = None,
        weight_mode: str = "llr",
        log_phi_mode: str = "asymptotic",
    ) -> DetectionResult:
        """Обе стадии для одного вещественного вектора наблюдений длины 2N."""
        H_d = self._lifting.lift_block(H_hat)
        soft, flagged = self.svm_detect_stage1(y_d, H_d, C, tol=tol, max_iter=max_iter, seed=seed)
        return self._second_stage(
            np.asarray(y_d, dtype=np.float64).ravel(), H_d, soft[:, 0], bool(flagged[0]), constellation,
            snr_db, self._effective_gamma(gamma, snr_db, constellation), weight_mode, log_phi_mode,
        )

    def two_stage_detect(
        self,
        Y_d: np.ndarray,
        H_hat: np.ndarray,
        constellation: Constellation,
        snr_db: float,
        C: float = 1.0,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
        gamma: Optional[float] = None,
        weight_mode: str = "llr",
        log_phi_mode: str = "asymptotic",
    ) -> BlockDetection:
        """Двухстадийное детектирование блока 2N×T_d.

        Args:
            H_hat: N×K комплексная оценка канала.
            gamma: Явное γ; иначе расписание по SNR (не меньше 1).
        """
        Y = np.asarray(Y_d, dtype=np.float64)
        H_d = self._lifting.lift_block(H_hat)
        soft, flagged = self.svm_detect_stage1(Y, H_d, C, tol=tol, max_iter=max_iter, seed=seed)
        gamma = self._effective_gamma(gamma, snr_db, constellation)
        k_users, n_vectors = H_d.shape[1] // 2, Y.shape[1]
        indices = np.zeros((k_users, n_vectors), dtype=int)
        sizes = np.zeros(n_vectors, dtype=int)
        for m in range(n_vectors):
            result = self._second_stage(
                Y[:, m], H_d, soft[:, m], bool(flagged[m]), constellation, snr_db, gamma, weight_mode, log_phi_mode
            )
            indices[:, m] = result.final
            sizes[m] = result.candidate_cardinality
        logger.debug("Двухстадийное детектирование: T=%d, γ=%.3f, средний |X|=%.2f", n_vectors, gamma, sizes.mean())
        return BlockDetection(indices=indices, candidate_sizes=sizes, flagged=int(flagged.sum()))

    def stage1_detect(
        self,
        Y_d: np.ndarray,
        H_hat: np.ndarray,
        constellation: Constellation,
        C: float = 1.0,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
    ) -> BlockDetection:
        """Только первая стадия: посимвольное решение по x̀."""
        Y = np.asarray(Y_d, dtype=np.float64)
        soft, flagged = self.svm_detect_stage1(
            Y, self._lifting.lift_block(H_hat), C, tol=tol, max_iter=max_iter, seed=seed
        )
        hard = self.symbol_decide(soft, constellation)
        hard[:, np.linalg.norm(soft, axis=0) <= ZERO_NORM] = 0
        return BlockDetection(
            indices=hard,
            candidate_sizes=np.ones(Y.shape[1], dtype=int), flagged=int(flagged.sum()),
        )

    # ---------- ML ----------
    def ml_detect(
        self,
        Y_d: np.ndarray,
        H_d: np.ndarray,
        snr_db: float,
        constellation: Constellation,
        likelihood: str = "log",
        log_phi_mode: str = "asymptotic",
    ) -> np.ndarray:
        """argmax_x Π_i Φ(√(2ρ) y_i h_iᵀx) перебором; при равенстве — меньший индекс.

        Args:
            Y_d: 2N×T (или вектор 2N) вещественные знаки.
            H_d: 2N×2K вещественный канал (истинный или оценка).
            likelihood: "log" — сумма log Φ; "direct" — произведение Φ как есть
                (при переполнении снизу все кандидаты равны и выбирается первый).

        Returns:
            K×T индексы (K для вектора).

        Raises:
            EnumerationError: M^K > 2^16.
        """
        H_d = np.asarray(H_d, dtype=np.float64)
        k_users = H_d.shape[1] // 2
        total = constellation.size ** k_users
        if total > ML_MAX_CANDIDATES:
            raise EnumerationError(f"Перебор M^K = {total} превышает {ML_MAX_CANDIDATES}")
        if likelihood not in ("log", "direct"):
            raise ValueError(f"Неизвестный режим правдоподобия: {likelihood}")
        Y = np.asarray(Y_d, dtype=np.float64)
        single = Y.ndim == 1
        Y = Y.reshape(H_d.shape[0], -1)

        cand = np.array(list(itertools.product(range(constellation.size), repeat=k_users)), dtype=int)
        Z = math.sqrt(2.0 * 10.0 ** (snr_db / 10.0)) * (self._real_candidates(cand, constellation) @ H_d.T)
        best = np.zeros(Y.shape[1], dtype=int)
        step = max(1, ML_CHUNK_ELEMENTS // Z.size)
        for start in range(0, Y.shape[1], step):
            chunk = Y[:, start:start + step]
            t = Z[:, :, None] * chunk[None, :, :]
            if likelihood == "log":
                score = self.log_phi(t, log_phi_mode).sum(axis=1)
            else:
                score = ndtr(t).prod(axis=1)
            best[start:start + chunk.shape[1]] = np.argmax(score, axis=0)
        out = cand[best].T
        return out[:, 0] if single else out

    def ml_detect_block(
        self,
        Y_d: np.ndarray,
        H_hat: np.ndarray,
        snr_db: float,
        constellation: Constellation,
        likelihood: str = "log",
        log_phi_mode: str = "asymptotic",
    ) -> BlockDetection:
        """ML для блока с комплексной оценкой канала."""
        indices = self.ml_detect(
            Y_d, self._lifting.lift_block(H_hat), snr_db, constellation,
            likelihood=likelihood, log_phi_mode=log_phi_mode,
        )
        return BlockDetection(
            indices=indices,
            candidate_sizes=np.full(indices.shape[1], constellation.size ** indices.shape[0]),
        )

    # ---------- Вспомогательные функции ----------
    def _effective_gamma(self, gamma: Optional[float], snr_db: float, constellation: Constellation) -> float:
        if gamma is None:
            gamma = self.gamma_schedule(snr_db, constellation)
        return max(float(gamma), 1.0)

    def _real_candidates(self, cand: np.ndarray, constellation: Constellation) -> np.ndarray:
        symbols = constellation.points[cand]
        return np.concatenate([symbols.real, symbols.imag], axis=1)

    def _second_stage(
        self,
        y_d: np.ndarray,
        H_d: np.ndarray,
        soft: np.ndarray,
        flagged: bool,
        constellation: Constellation,
        snr_db: float,
        gamma: float,
        weight_mode: str,
        log_phi_mode: str,
    ) -> DetectionResult:
        if not np.any(soft):
            # нулевое решение: первая точка созвездия, без второй стадии
            hard = np.zeros(H_d.shape[1] // 2, dtype=int)
            return DetectionResult(
                stage1_soft=soft, stage1_hard=hard, candidate_set=(tuple(hard.tolist()),),
                final=hard, flagged=True,
            )
        hard = self.symbol_decide(soft, constellation)
        candidates = self.build_candidates(soft, hard, gamma, constellation)
        final = self.weighted_hamming_select(
            candidates, y_d, H_d, snr_db, constellation,
            stage1_hard=hard, weight_mode=weight_mode, log_phi_mode=log_phi_mode,
        )
        return DetectionResult(
            stage1_soft=soft, stage1_hard=hard, candidate_set=candidates,
            final=np.asarray(final, dtype=int), flagged=flagged,
        )
