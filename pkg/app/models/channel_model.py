"""Модели канала, созвездий и пространственной корреляции."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np


@dataclass(frozen=True)
class Constellation:
    """Конечный алфавит символов с единичной средней энергией и меткой Грея.

    Fields:
        name: "QPSK" или "16QAM".
        points: Комплексные точки, порядок задаёт индекс символа.
        bits_per_symbol: log2(числа точек).
        bit_map: Матрица M×bits_per_symbol меток Грея (0/1).
    """
    name: str
    points: np.ndarray
    bits_per_symbol: int
    bit_map: np.ndarray

    @property
    def size(self) -> int:
        return int(self.points.size)

    def slice(self, soft: np.ndarray) -> np.ndarray:
        """Индексы ближайших точек; при равенстве расстояний — меньший индекс."""
        soft = np.asarray(soft)
        dists = np.abs(soft[..., None] - self.points)
        return np.argmin(dists, axis=-1)

    def index_of(self, symbols: np.ndarray) -> np.ndarray:
        """Индексы точек для символов, лежащих на созвездии."""
        return self.slice(symbols)

    def bits(self, indices: np.ndarray) -> np.ndarray:
        """Биты Грея для массива индексов (последняя ось — биты)."""
        return self.bit_map[np.asarray(indices)]


@dataclass(frozen=True)
class CorrelationSpec:
    """Параметры ULA с лапласовским угловым спектром мощности.

    Fields:
        angle_spread_deg: Угловой разброс (СКО лапласиана), градусы.
        mean_angles_deg: Средний угол прихода для каждого пользователя.
        element_spacing: Шаг решётки в длинах волн.
    """
    angle_spread_deg: float
    mean_angles_deg: Tuple[float, ...]
    element_spacing: float = 0.5


@dataclass(frozen=True)
class ChannelRealization:
    """Одна реализация канала N×K.

    Fields:
        H: Комплексная матрица N×K (для OFDM — не используется, см. taps).
        kind: "iid" | "correlated" | "freq_selective".
        taps: N×K×L отсчёты импульсной характеристики.
        covariances: Ковариации C̄_k столбцов (для коррелированного канала).
    """
    H: np.ndarray
    kind: str
    taps: Optional[np.ndarray] = None
    covariances: Optional[Tuple[np.ndarray, ...]] = None
