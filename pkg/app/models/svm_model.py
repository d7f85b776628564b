"""Модели задачи SVM без смещения и её решения."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np


@dataclass(frozen=True)
class SvmProblem:
    """Задача мягкого SVM без смещения.

    Fields:
        features: P×D матрица, строки — обучающие точки x_q.
        labels: P меток ±1.
        penalty: C > 0.
    """
    features: np.ndarray
    labels: np.ndarray
    penalty: float = 1.0


@dataclass(frozen=True)
class SvmSolution:
    """Решение SVM с двойственным сертификатом.

    Fields:
        weights: D-вектор w = Σ α_q y_q x_q.
        duals: P-вектор α ∈ [0, C].
        objective: Значение прямой цели ½‖w‖² + C Σ hinge.
        gap: Зазор двойственности в момент остановки.
        iterations: Число эпох координатного спуска.
        converged: gap ≤ tol достигнут до исчерпания max_iter.
    """
    weights: np.ndarray
    duals: np.ndarray
    objective: float
    gap: float
    iterations: int
    converged: bool


@dataclass(frozen=True)
class MahalanobisSpec:
    """Блочные ковариации C_k и их кэшированные корни C_k^{1/2}.

    Совместный вектор весов — [h_1; …; h_K], h_k = [Re h̄_k; Im h̄_k] ∈ R^{2N}.

    Fields:
        block_covariances: K вещественных симметричных 2N×2N матриц.
        whitening: C_k^{1/2} (после подрезки малых собственных чисел).
    """
    block_covariances: Tuple[np.ndarray, ...]
    whitening: Tuple[np.ndarray, ...] = field(default=())

    @property
    def users(self) -> int:
        return len(self.block_covariances)

    @property
    def antennas(self) -> int:
        return int(self.block_covariances[0].shape[0]) // 2

    @property
    def layout(self) -> List[Tuple[int, str, int]]:
        """Индекс совместного вектора → (пользователь k, "re"/"im", антенна i)."""
        n = self.antennas
        out: List[Tuple[int, str, int]] = []
        for k in range(self.users):
            out.extend((k, "re", i) for i in range(n))
            out.extend((k, "im", i) for i in range(n))
        return out
