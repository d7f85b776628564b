"""Модели данных (frozen dataclass) и исключения приложения."""
