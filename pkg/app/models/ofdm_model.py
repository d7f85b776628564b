"""Модели OFDM с циклическим префиксом."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from app.models.channel_model import Constellation


@dataclass(frozen=True)
class OfdmConfig:
    """Параметры OFDM.

    Fields:
        Nc: Число поднесущих (степень двойки).
        Ncp: Длина циклического префикса, L − 1 ≤ Ncp ≤ Nc.
        L: Число отводов канала.
        constellation: Созвездие данных.
    """
    Nc: int
    Ncp: int
    L: int
    constellation: Constellation

    def __post_init__(self) -> None:
        if self.Nc < 1 or self.Nc & (self.Nc - 1):
            raise ValueError(f"Nc должно быть степенью двойки, получено {self.Nc}")
        if not (self.L - 1 <= self.Ncp <= self.Nc):
            raise ValueError(f"Нужно L − 1 ≤ Ncp ≤ Nc, получено L={self.L}, Ncp={self.Ncp}, Nc={self.Nc}")


@dataclass(frozen=True)
class OfdmObservation:
    """Принятый OFDM-символ после однобитного АЦП.

    Fields:
        y_TD: N×Nc комплексные знаки во временной области.
    """
    y_TD: np.ndarray


@dataclass(frozen=True)
class OfdmDetection:
    """Решения SVM-детектора для нескольких OFDM-символов.

    Fields:
        indices: S×K×Nc индексы созвездия по поднесущим.
        soft: S×K×Nc мягкие решения, E|x|² = 1 в каждом символе.
        flagged: Число символов с нулевым или несошедшимся решением.
    """
    indices: np.ndarray
    soft: np.ndarray
    flagged: int = 0
