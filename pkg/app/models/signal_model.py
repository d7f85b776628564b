"""Модели сигналов после однобитного квантования и их вещественные представления.

Принципы:
- SRP: только структура данных, без логики обработки.
- Чистый код: неизменяемость (`frozen=True`) для предсказуемости.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np


@dataclass(frozen=True)
class QuantizedMatrix:
    """Выход пары однобитных АЦП для каждого элемента комплексной матрицы.

    Fields:
        real: Знаки вещественных частей, значения ±1.
        imag: Знаки мнимых частей, значения ±1.
    """
    real: np.ndarray
    imag: np.ndarray

    @property
    def rows(self) -> int:
        return int(self.real.shape[0])

    @property
    def cols(self) -> int:
        return int(self.real.shape[1])

    @property
    def complex(self) -> np.ndarray:
        """Те же знаки как комплексная матрица sign(Re) + j·sign(Im)."""
        return self.real + 1j * self.imag


@dataclass(frozen=True)
class CeRealForms:
    """Вещественные формы для оценки канала (Re/Im «бок о бок»).

    Fields:
        Y_t: N×2T_t матрица знаков [Re Ȳ_t, Im Ȳ_t].
        X_t: 2K×2T_t пилоты [[Re, Im], [−Im, Re]].
        H_t: N×2K строки канала [Re H̄, Im H̄] (если канал передан).
    """
    Y_t: np.ndarray
    X_t: np.ndarray
    H_t: Optional[np.ndarray] = None


@dataclass(frozen=True)
class DetRealForms:
    """Вещественные формы для детектирования (Re над Im).

    Fields:
        Y_d: 2N×T_d матрица знаков.
        H_d: 2N×2K канал [[Re, −Im], [Im, Re]].
        X_d: 2K×T_d данные (если переданы).
    """
    Y_d: Optional[np.ndarray]
    H_d: np.ndarray
    X_d: Optional[np.ndarray] = None
