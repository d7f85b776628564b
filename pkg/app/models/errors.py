"""Исключения приложения с машиночитаемым кодом.

CLI печатает `code` в строке ошибки, поэтому каждый класс задаёт свой код.
"""
from __future__ import annotations


class SimulationError(Exception):
    """Базовая ошибка симулятора."""
    code: str = "simulation"

    def __init__(self, message: str) -> None:
        super().__init__(message)
        self.message = message

    def as_record(self) -> dict:
        return {"error": self.code, "message": self.message}


class ConfigError(SimulationError, ValueError):
    """Некорректный конфиг эксперимента (обнаруживается до вычислений)."""
    code = "config"


class OutputError(SimulationError, OSError):
    """Не удалось записать результаты."""
    code = "output"


class EnumerationError(SimulationError, ValueError):
    """Полный перебор M^K кандидатов слишком велик."""
    code = "enumeration"


class CovarianceError(SimulationError, ValueError):
    """Ковариационная матрица не симметрична / не (полу)положительно определена."""
    code = "covariance"


class QuadratureError(SimulationError, ValueError):
    """Квадратура для ковариации не сошлась."""
    code = "quadrature"


class UsageError(SimulationError, ValueError):
    """Неверные аргументы командной строки."""
    code = "usage"
