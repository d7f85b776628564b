"""Решатели мягкого SVM без смещения.

- `solve_soft_margin`: ½‖w‖² + C Σ max(0, 1 − y_q wᵀx_q), двойственный координатный спуск
  по ящику [0, C]; без смещения в двойственной задаче нет ограничения-равенства, поэтому
  каждый шаг по координате точный.
- `solve_soft_margin_batch`: много задач с общими признаками и разными метками
  (все антенны при оценке канала, все столбцы данных при детектировании).
- `solve_mahalanobis_margin`: ½ Σ_k h_kᵀ C_k⁻¹ h_k + C Σ ξ через отбеливание
  u_k = C_k^{−1/2} h_k и обычный SVM в совместных координатах.

Остановка по зазору двойственности: primal(w(α)) − dual(α) ≤ tol.
"""
from __future__ import annotations

import logging
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import block_diag, eigh

from app.models.errors import CovarianceError
from app.models.svm_model import MahalanobisSpec, SvmProblem, SvmSolution

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-6
DEFAULT_MAX_ITER = 10000
EIGEN_FLOOR = 1e-10


class SvmService:
    """Детерминированные решатели SVM: порядок эпох задаёт `seed`."""

    def solve_soft_margin(
        self,
        problem: SvmProblem,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
        init_duals: Optional[np.ndarray] = None,
    ) -> SvmSolution:
        """Решает одну задачу мягкого SVM без смещения.

        Args:
            problem: Признаки, метки ±1, штраф C.
            tol: Допуск на зазор двойственности (> 0).
            max_iter: Максимум эпох.
            seed: Зерно перестановок порядка координат.
            init_duals: Тёплый старт α (проецируется на [0, C]).

        Returns:
            `SvmSolution`; при исчерпании `max_iter` — лучшее найденное с `converged=False`.
        """
        labels = np.asarray(problem.labels, dtype=np.float64).reshape(-1, 1)
        init = None if init_duals is None else np.asarray(init_duals, dtype=np.float64).reshape(-1, 1)
        return self.solve_soft_margin_batch(
            problem.features, labels, problem.penalty, tol=tol, max_iter=max_iter, seed=seed, init_duals=init
        )[0]

    def solve_soft_margin_batch(
        self,
        features: np.ndarray,
        labels: np.ndarray,
        C: float,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
        init_duals: Optional[np.ndarray] = None,
    ) -> List[SvmSolution]:
        """Решает B задач с общими признаками P×D и метками P×B.

        Каждая задача замораживается, как только её зазор ≤ tol, поэтому её решение
        не зависит от соседей по пакету (с точностью до порядка суммирования в BLAS).
        """
        X = np.asarray(features, dtype=np.float64)
        Y = np.asarray(labels, dtype=np.float64)
        if Y.ndim == 1:
            Y = Y.reshape(-1, 1)
        self._validate(X, Y, C, tol)

        W, A, gaps, objective, epochs, converged = self._dual_coordinate_descent(
            X, Y, float(C), float(tol), int(max_iter), seed, init_duals
        )
        if not converged.all():
            logger.warning(
                "SVM: %d из %d задач не сошлись за %d эпох (max gap=%.3e)",
                int(np.count_nonzero(~converged)), converged.size, max_iter, float(gaps.max()),
            )
        logger.debug("SVM: P=%d D=%d B=%d, эпох до %d", X.shape[0], X.shape[1], Y.shape[1], int(epochs.max(initial=0)))
        return [
            SvmSolution(
                weights=W[:, b].copy(),
                duals=A[:, b].copy(),
                objective=float(objective[b]),
                gap=float(gaps[b]),
                iterations=int(epochs[b]),
                converged=bool(converged[b]),
            )
            for b in range(Y.shape[1])
        ]

    # ---------- Махаланобис ----------
    def build_mahalanobis_spec(self, block_covariances: Sequence[np.ndarray]) -> MahalanobisSpec:
        """Проверяет C_k и кэширует симметричные корни C_k^{1/2}.

        Собственные числа ниже 1e−10·λ_max поднимаются до этого порога.

        Raises:
            CovarianceError: несимметричная, отрицательно определённая или пустая матрица.
        """
        covs = tuple(np.asarray(c, dtype=np.float64) for c in block_covariances)
        if not covs:
            raise CovarianceError("Нужна хотя бы одна ковариация C_k")
        size = covs[0].shape
        roots = []
        for k, cov in enumerate(covs):
            if cov.ndim != 2 or cov.shape != size or size[0] != size[1] or size[0] % 2:
                raise CovarianceError(f"C_{k}: ожидалась квадратная 2N×2N матрица, получено {cov.shape}")
            scale = float(np.max(np.abs(cov))) or 1.0
            if not np.allclose(cov, cov.T, atol=1e-10 * scale):
                raise CovarianceError(f"C_{k} не симметрична")
            eigvals, eigvecs = eigh(cov)
            lam_max = float(eigvals[-1])
            if lam_max <= 0 or float(eigvals[0]) < -1e-8 * lam_max:
                raise CovarianceError(f"C_{k} не положительно определена (λ_min={eigvals[0]:.3e})")
            floored = np.maximum(eigvals, EIGEN_FLOOR * lam_max)
            roots.append((eigvecs * np.sqrt(floored)) @ eigvecs.T)
        return MahalanobisSpec(block_covariances=covs, whitening=tuple(roots))

    def joint_features(self, spec: MahalanobisSpec, x_rows: np.ndarray, antennas: np.ndarray) -> np.ndarray:
        """Строки ограничений y·h_{t,i}ᵀx в координатах совместного вектора [h_1; …; h_K]."""
        x_rows = np.atleast_2d(np.asarray(x_rows, dtype=np.float64))
        antennas = np.asarray(antennas, dtype=int)
        k_users, n_ant = spec.users, spec.antennas
        if x_rows.shape[1] != 2 * k_users:
            raise ValueError(f"Точки должны иметь 2K={2 * k_users} признаков, получено {x_rows.shape[1]}")
        if antennas.shape != (x_rows.shape[0],) or antennas.min(initial=0) < 0 or antennas.max(initial=0) >= n_ant:
            raise ValueError("Индексы антенн вне диапазона или не согласованы с числом строк")
        rows = np.arange(x_rows.shape[0])
        out = np.zeros((x_rows.shape[0], 2 * n_ant * k_users))
        for k in range(k_users):
            base = 2 * n_ant * k
            out[rows, base + antennas] = x_rows[:, k]
            out[rows, base + n_ant + antennas] = x_rows[:, k_users + k]
        return out

    def solve_mahalanobis_margin(
        self,
        x_rows: np.ndarray,
        labels: np.ndarray,
        antennas: np.ndarray,
        spec: MahalanobisSpec,
        C: float,
        tol: float = DEFAULT_TOL,
        max_iter: int = DEFAULT_MAX_ITER,
        seed: int = 0,
    ) -> Tuple[np.ndarray, SvmSolution]:
        """Совместная оценка всех строк канала с метрикой Махаланобиса.

        Args:
            x_rows: P×2K точки x (столбцы вещественных пилотов).
            labels: P меток ±1.
            antennas: P индексов антенн i, к строке которых относится ограничение.
            spec: Ковариации и корни (`build_mahalanobis_spec`).

        Returns:
            (H̃ размера N×2K в раскладке [Re, Im], решение SVM в отбеленных координатах).
        """
        if not spec.whitening:
            spec = self.build_mahalanobis_spec(spec.block_covariances)
        joint = self.joint_features(spec, x_rows, antennas)
        root = block_diag(*spec.whitening)
        whitened = joint @ root
        solution = self.solve_soft_margin(
            SvmProblem(features=whitened, labels=np.asarray(labels, dtype=np.float64), penalty=C),
            tol=tol, max_iter=max_iter, seed=seed,
        )
        theta = root @ solution.weights
        return self._unflatten_joint(theta, spec.users, spec.antennas), solution

    # ---------- Вспомогательные функции ----------
    def _unflatten_joint(self, theta: np.ndarray, k_users: int, n_ant: int) -> np.ndarray:
        blocks = theta.reshape(k_users, 2, n_ant)  # [k, re/im, i]
        return np.concatenate([blocks[:, 0, :].T, blocks[:, 1, :].T], axis=1)

    def _validate(self, X: np.ndarray, Y: np.ndarray, C: float, tol: float) -> None:
        if X.ndim != 2:
            raise ValueError(f"Признаки должны быть матрицей P×D, получено {X.shape}")
        if Y.shape[0] != X.shape[0]:
            raise ValueError(f"Число меток {Y.shape[0]} не равно числу точек {X.shape[0]}")
        if not np.all(np.abs(Y) == 1.0):
            raise ValueError("Метки должны быть ±1")
        if not C > 0:
            raise ValueError(f"Штраф C должен быть > 0, получено {C}")
        if not tol > 0:
            raise ValueError(f"tol должен быть > 0, получено {tol}")

    def _duality_gap(
        self, X: np.ndarray, Y: np.ndarray, A: np.ndarray, W: np.ndarray, C: float
    ) -> Tuple[np.ndarray, np.ndarray]:
        margins = Y * (X @ W)
        half_norm = 0.5 * np.einsum("ij,ij->j", W, W)
        primal = half_norm + C * np.maximum(0.0, 1.0 - margins).sum(axis=0)
        dual = A.sum(axis=0) - half_norm
        return primal - dual, primal

    def _dual_coordinate_descent(
        self,
        X: np.ndarray,
        Y: np.ndarray,
        C: float,
        tol: float,
        max_iter: int,
        seed: int,
        init_duals: Optional[np.ndarray],
    ):
        """Циклический спуск по α_q со случайной перестановкой на каждой эпохе.

        Шаг по координате: α_q ← clip(α_q − (y_q x_qᵀw − 1)/‖x_q‖², 0, C),
        затем w += Δα_q · y_q · x_q.
        """
        n_points = X.shape[0]
        n_problems = Y.shape[1]
        q_diag = np.einsum("ij,ij->i", X, X)
        if init_duals is None:
            A = np.zeros((n_points, n_problems))
        else:
            A = np.clip(np.asarray(init_duals, dtype=np.float64).reshape(n_points, n_problems), 0.0, C)
        # нулевая точка: оптимум α_q = C (вклад в дуал без штрафа)
        A[q_diag <= 0.0, :] = C
        W = X.T @ (A * Y)

        gaps, objective = self._duality_gap(X, Y, A, W, C)
        active = gaps > tol
        epochs = np.zeros(n_problems, dtype=int)
        order_pool = np.flatnonzero(q_diag > 0.0)
        rng = np.random.default_rng(seed)

        epoch = 0
        while active.any() and epoch < max_iter:
            epoch += 1
            cols = np.flatnonzero(active)
            W_a = W[:, cols]
            A_a = A[:, cols]
            Y_a = Y[:, cols]
            for q in rng.permutation(order_pool):
                x_q = X[q]
                y_q = Y_a[q]
                grad = y_q * (x_q @ W_a) - 1.0
                old = A_a[q]
                new = np.clip(old - grad / q_diag[q], 0.0, C)
                delta = new - old
                if np.any(delta):
                    W_a += np.outer(x_q, delta * y_q)
                    A_a[q] = new
            W[:, cols] = W_a
            A[:, cols] = A_a
            epochs[cols] = epoch
            gaps_a, objective_a = self._duality_gap(X, Y_a, A_a, W_a, C)
            gaps[cols] = gaps_a
            objective[cols] = objective_a
            active[cols] = gaps_a > tol

        converged = gaps <= tol
        return W, A, gaps, objective, epochs, converged
