"""Результаты оценки канала и детектирования."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

PER_ROW_SQRT_K = "per_row_sqrtK"
GLOBAL_SQRT_KN = "global_sqrtKN"


@dataclass(frozen=True)
class ChannelEstimate:
    """Оценка канала после нормировки.

    Fields:
        H_hat: Комплексная оценка N×K.
        per_row_converged: Сошёлся ли решатель для каждой антенны.
        norm_convention: PER_ROW_SQRT_K (‖ĥ_i‖² = K) или GLOBAL_SQRT_KN (‖Ĥ‖_F = √(KN)).
        flagged_rows: Антенны с нулевым решением (строка оставлена нулевой).
        duals: Двойственные переменные (P×N) для тёплого старта уточнения.
    """
    H_hat: np.ndarray
    per_row_converged: np.ndarray
    norm_convention: str
    flagged_rows: np.ndarray
    duals: Optional[np.ndarray] = None

    @property
    def flagged_count(self) -> int:
        return int(np.count_nonzero(self.flagged_rows)) + int(np.count_nonzero(~self.per_row_converged))


@dataclass(frozen=True)
class DetectionResult:
    """Детектирование одного вектора данных двумя стадиями.

    Fields:
        stage1_soft: x̀ ∈ R^{2K}, ‖x̀‖² = K.
        stage1_hard: x̌ — посимвольное решение (индексы созвездия).
        candidate_set: Кандидаты как кортежи индексов созвездия.
        final: x̂ — индексы выбранного кандидата.
        flagged: Нулевое решение SVM или несходимость.
    """
    stage1_soft: np.ndarray
    stage1_hard: np.ndarray
    candidate_set: Tuple[Tuple[int, ...], ...]
    final: np.ndarray
    flagged: bool = False

    @property
    def candidate_cardinality(self) -> int:
        return len(self.candidate_set)


@dataclass(frozen=True)
class BlockDetection:
    """Детектирование блока T_d векторов.

    Fields:
        indices: K×T_d индексы созвездия.
        candidate_sizes: |X| для каждого столбца.
        flagged: Число столбцов с нулевым/несошедшимся решением SVM.
    """
    indices: np.ndarray
    candidate_sizes: np.ndarray
    flagged: int = 0
