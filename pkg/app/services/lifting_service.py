"""Однобитное квантование и переходы «комплексное → вещественное».

Два соглашения о раскладке:
- оценка канала: Re и Im «бок о бок» (строки канала — веса SVM);
- детектирование: Re над Im (столбцы данных — веса SVM).

Все функции чистые: входы не мутируются, возвращаются новые массивы.
"""
from __future__ import annotations

from typing import Optional, Union

import numpy as np

from app.models.signal_model import CeRealForms, DetRealForms, QuantizedMatrix

ComplexLike = Union[np.ndarray, QuantizedMatrix]


class LiftingService:
    """Квантование и вещественные подъёмы матриц."""

    def one_bit_quantize(self, r: np.ndarray) -> QuantizedMatrix:
        """Знак вещественной и мнимой частей поэлементно, sign(0) = +1.

        Args:
            r: Комплексная матрица (вектор приводится к строке 1×n).

        Returns:
            `QuantizedMatrix` с элементами ±1 той же формы.
        """
        arr = np.atleast_2d(np.asarray(r, dtype=np.complex128))
        real = np.where(arr.real >= 0, 1.0, -1.0)
        imag = np.where(arr.imag >= 0, 1.0, -1.0)
        return QuantizedMatrix(real=real, imag=imag)

    # ---------- Базовые блочные раскладки ----------
    def lift_block(self, M: np.ndarray) -> np.ndarray:
        """[[Re M, −Im M], [Im M, Re M]] — комплексное умножение в вещественном виде."""
        M = np.asarray(M)
        return np.block([[M.real, -M.imag], [M.imag, M.real]])

    def lift_side_by_side(self, X: np.ndarray) -> np.ndarray:
        """[[Re X, Im X], [−Im X, Re X]] — раскладка пилотов для оценки канала."""
        X = np.asarray(X)
        return np.block([[X.real, X.imag], [-X.imag, X.real]])

    def stack_columns(self, X: np.ndarray) -> np.ndarray:
        """[Re X; Im X]."""
        X = np.asarray(X)
        return np.concatenate([X.real, X.imag], axis=0)

    def unstack_columns(self, x: np.ndarray) -> np.ndarray:
        """Обратное к `stack_columns`: первая половина строк — Re, вторая — Im."""
        x = np.asarray(x)
        half = x.shape[0] // 2
        return x[:half] + 1j * x[half:]

    # ---------- Оценка канала ----------
    def realify_ce(
        self,
        Y_t: ComplexLike,
        X_t: np.ndarray,
        H: Optional[np.ndarray] = None,
    ) -> CeRealForms:
        """Вещественные формы задачи оценки канала.

        Args:
            Y_t: N×T_t знаки (комплексные ±1±j или `QuantizedMatrix`).
            X_t: K×T_t комплексные пилоты.
            H: N×K канал (необязательно).

        Returns:
            `CeRealForms` с Y_t = [Re, Im], X_t в блочной форме поворота, H_t = [Re, Im].

        Raises:
            ValueError: при несогласованных размерах.
        """
        Y = self._as_complex(Y_t)
        X = np.atleast_2d(np.asarray(X_t, dtype=np.complex128))
        if Y.shape[1] != X.shape[1]:
            raise ValueError(f"Длины пилотов не совпадают: Y_t {Y.shape}, X_t {X.shape}")
        H_t = None
        if H is not None:
            H = np.atleast_2d(np.asarray(H, dtype=np.complex128))
            if H.shape != (Y.shape[0], X.shape[0]):
                raise ValueError(f"Канал {H.shape} не согласован с N={Y.shape[0]}, K={X.shape[0]}")
            H_t = np.concatenate([H.real, H.imag], axis=1)
        return CeRealForms(
            Y_t=np.concatenate([Y.real, Y.imag], axis=1),
            X_t=self.lift_side_by_side(X),
            H_t=H_t,
        )

    def derealify_pilots(self, X_t: np.ndarray) -> np.ndarray:
        """Комплексные пилоты K×T_t из верхней половины блочной формы."""
        X_t = np.asarray(X_t)
        k, t = X_t.shape[0] // 2, X_t.shape[1] // 2
        return X_t[:k, :t] + 1j * X_t[:k, t:]

    def derealify_ce_channel(self, H_t: np.ndarray) -> np.ndarray:
        """Комплексный канал N×K из строк [Re, Im]."""
        H_t = np.asarray(H_t)
        k = H_t.shape[1] // 2
        return H_t[:, :k] + 1j * H_t[:, k:]

    # ---------- Детектирование ----------
    def realify_det(
        self,
        Y_d: Optional[ComplexLike],
        H: np.ndarray,
        X_d: Optional[np.ndarray] = None,
    ) -> DetRealForms:
        """Вещественные формы задачи детектирования.

        Args:
            Y_d: N×T_d знаки (или None, если нужен только H_d).
            H: N×K канал (или его оценка).
            X_d: K×T_d данные (необязательно).

        Raises:
            ValueError: при несогласованных размерах.
        """
        H = np.atleast_2d(np.asarray(H, dtype=np.complex128))
        n, k = H.shape
        Y_real = None
        if Y_d is not None:
            Y = self._as_complex(Y_d)
            if Y.shape[0] != n:
                raise ValueError(f"Число антенн в Y_d ({Y.shape[0]}) не равно N={n}")
            Y_real = self.stack_columns(Y)
        X_real = None
        if X_d is not None:
            X = np.atleast_2d(np.asarray(X_d, dtype=np.complex128))
            if X.shape[0] != k:
                raise ValueError(f"Число пользователей в X_d ({X.shape[0]}) не равно K={k}")
            if Y_real is not None and X.shape[1] != Y_real.shape[1]:
                raise ValueError(f"Длина данных {X.shape[1]} не равна T_d={Y_real.shape[1]}")
            X_real = self.stack_columns(X)
        return DetRealForms(Y_d=Y_real, H_d=self.lift_block(H), X_d=X_real)

    def lift_det_data_for_ce(self, Y_d: ComplexLike, X_hat_d: np.ndarray) -> CeRealForms:
        """Детектированные данные как дополнительные пилоты (Y_d2, X̂_d2)."""
        return self.realify_ce(Y_d, X_hat_d)

    def _as_complex(self, Y: ComplexLike) -> np.ndarray:
        if isinstance(Y, QuantizedMatrix):
            return Y.complex
        return np.atleast_2d(np.asarray(Y, dtype=np.complex128))
