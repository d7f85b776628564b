"""Генерация каналов, созвездий, символов и шума.

Все генераторы — чистые функции от (параметры, rng): одинаковое зерно даёт побитно
одинаковую реализацию.
"""
from __future__ import annotations

import logging
import math
from typing import Sequence, Tuple

import numpy as np
from scipy.integrate import trapezoid
from scipy.linalg import eigh, toeplitz

from app.models.channel_model import ChannelRealization, Constellation, CorrelationSpec
from app.models.errors import CovarianceError, QuadratureError

logger = logging.getLogger(__name__)

CONSTELLATION_ORDERS = {"QPSK": 4, "16QAM": 16}
QUADRATURE_POINTS = 4096
QUADRATURE_SPAN = 10.0  # ± столько разбросов вокруг среднего угла
QUADRATURE_TOL = 1e-4


class ChannelService:
    """Случайные модели канала и вспомогательные генераторы сигналов."""

    # ---------- Созвездия ----------
    def constellation(self, name: str) -> Constellation:
        """Квадратная QAM с меткой Грея по каждой оси и E|x|² = 1.

        Точки перечисляются как (I-уровень, Q-уровень) по возрастанию, поэтому
        для QPSK порядок: (−1−j), (−1+j), (1−j), (1+j), делённые на √2.
        """
        if name not in CONSTELLATION_ORDERS:
            raise ValueError(f"Неизвестное созвездие: {name}")
        order = CONSTELLATION_ORDERS[name]
        side = math.isqrt(order)
        axis_bits = int(math.log2(side))
        levels = np.arange(-(side - 1), side, 2, dtype=np.float64)
        li, lq = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
        li, lq = li.ravel(), lq.ravel()
        points = levels[li] + 1j * levels[lq]
        points = points / np.sqrt(np.mean(np.abs(points) ** 2))
        bit_map = np.concatenate([self._gray_bits(li, axis_bits), self._gray_bits(lq, axis_bits)], axis=1)
        return Constellation(name=name, points=points, bits_per_symbol=2 * axis_bits, bit_map=bit_map)

    # ---------- Каналы ----------
    def gen_iid_channel(self, N: int, K: int, rng: np.random.Generator) -> ChannelRealization:
        """Канал N×K с элементами CN(0, 1)."""
        if not N >= K >= 1:
            raise ValueError(f"Нужно N ≥ K ≥ 1, получено N={N}, K={K}")
        return ChannelRealization(H=self._complex_normal((N, K), 1.0, rng), kind="iid")

    def laplacian_covariance(self, spec: CorrelationSpec, N: int) -> Tuple[np.ndarray, ...]:
        """Ковариации C̄_k для ULA и лапласовского спектра вокруг среднего угла пользователя.

        [C̄_k]_{mn} = ∫ exp(j·2π·Δ·(m−n)·sinθ) p_k(θ) dθ, трапеция по 4096 точкам на
        интервале μ_k ± 10σ с перенормировкой плотности.

        Raises:
            ValueError: неположительный разброс.
            QuadratureError: результат не устойчив к удвоению шага сетки.
        """
        if not spec.angle_spread_deg > 0:
            raise ValueError(f"Угловой разброс должен быть > 0, получено {spec.angle_spread_deg}")
        out = []
        for mean_deg in spec.mean_angles_deg:
            fine = self._laplacian_correlation(spec, mean_deg, N, QUADRATURE_POINTS)
            coarse = self._laplacian_correlation(spec, mean_deg, N, QUADRATURE_POINTS // 2)
            if not np.all(np.isfinite(fine)) or np.max(np.abs(fine - coarse)) > QUADRATURE_TOL:
                raise QuadratureError(
                    f"Квадратура не сошлась для угла {mean_deg}° и разброса {spec.angle_spread_deg}°"
                )
            out.append(toeplitz(fine, fine.conj()))
        return tuple(out)

    def gen_correlated_channel(
        self, covariances: Sequence[np.ndarray], rng: np.random.Generator
    ) -> ChannelRealization:
        """Столбец k = C̄_k^{1/2} g, g ~ CN(0, I).

        Raises:
            CovarianceError: матрица не эрмитова или не PSD.
        """
        covs = tuple(np.asarray(c, dtype=np.complex128) for c in covariances)
        columns = []
        for k, cov in enumerate(covs):
            root = self._hermitian_sqrt(cov, k)
            g = self._complex_normal((cov.shape[0],), 1.0, rng)
            columns.append(root @ g)
        return ChannelRealization(H=np.stack(columns, axis=1), kind="correlated", covariances=covs)

    def gen_freq_selective(self, N: int, K: int, L: int, rng: np.random.Generator) -> ChannelRealization:
        """Отводы N×K×L с CN(0, 1/L); поле H — частотный отклик на нулевой поднесущей."""
        if L < 1:
            raise ValueError(f"L должно быть ≥ 1, получено {L}")
        taps = self._complex_normal((N, K, L), 1.0 / L, rng)
        return ChannelRealization(H=taps.sum(axis=2), kind="freq_selective", taps=taps)

    def draw_mean_angles(self, K: int, range_deg: float, rng: np.random.Generator) -> Tuple[float, ...]:
        """Средние углы пользователей, равномерно в [−range, range] градусов."""
        return tuple(float(a) for a in rng.uniform(-range_deg, range_deg, size=K))

    # ---------- Символы и шум ----------
    def gen_symbol_indices(
        self, K: int, T: int, constellation: Constellation, rng: np.random.Generator
    ) -> np.ndarray:
        if T < 1:
            raise ValueError(f"T должно быть ≥ 1, получено {T}")
        return rng.integers(0, constellation.size, size=(K, T))

    def gen_symbols(self, K: int, T: int, constellation: Constellation, rng: np.random.Generator) -> np.ndarray:
        """K×T равновероятных символов созвездия (пилоты и данные)."""
        return constellation.points[self.gen_symbol_indices(K, T, constellation, rng)]

    def noise_power(self, snr_db: float) -> float:
        """N0 = 10^(−ρ_dB/10), ρ = 1/N0."""
        return float(10.0 ** (-float(snr_db) / 10.0))

    def awgn(self, shape: Tuple[int, ...], N0: float, rng: np.random.Generator) -> np.ndarray:
        """Шум CN(0, N0)."""
        if not N0 > 0:
            raise ValueError(f"N0 должно быть > 0, получено {N0}")
        return self._complex_normal(shape, N0, rng)

    # ---------- Вспомогательные функции ----------
    def _complex_normal(self, shape, variance: float, rng: np.random.Generator) -> np.ndarray:
        scale = math.sqrt(variance / 2.0)
        return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))

    def _gray_bits(self, levels: np.ndarray, width: int) -> np.ndarray:
        gray = levels ^ (levels >> 1)
        shifts = np.arange(width - 1, -1, -1)
        return (gray[:, None] >> shifts) & 1

    def _laplacian_correlation(self, spec: CorrelationSpec, mean_deg: float, N: int, points: int) -> np.ndarray:
        sigma = math.radians(spec.angle_spread_deg)
        mu = math.radians(mean_deg)
        theta = np.linspace(mu - QUADRATURE_SPAN * sigma, mu + QUADRATURE_SPAN * sigma, points)
        # лапласиан с СКО sigma: масштаб b = sigma/√2
        density = np.exp(-np.abs(theta - mu) * math.sqrt(2.0) / sigma)
        norm = trapezoid(density, theta)
        lags = np.arange(N)[:, None]
        phase = np.exp(1j * 2.0 * np.pi * spec.element_spacing * lags * np.sin(theta)[None, :])
        return trapezoid(phase * density[None, :], theta, axis=1) / norm

    def _hermitian_sqrt(self, cov: np.ndarray, k: int) -> np.ndarray:
        if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
            raise CovarianceError(f"C̄_{k}: ожидалась квадратная матрица, получено {cov.shape}")
        scale = float(np.max(np.abs(cov))) or 1.0
        if not np.allclose(cov, cov.conj().T, atol=1e-10 * scale):
            raise CovarianceError(f"C̄_{k} не эрмитова")
        eigvals, eigvecs = eigh(cov)
        if float(eigvals[0]) < -1e-8 * max(float(eigvals[-1]), 1e-300):
            raise CovarianceError(f"C̄_{k} не PSD (λ_min={eigvals[0]:.3e})")
        return (eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))) @ eigvecs.conj().T
