"""Приложение: компоновка командной строки, контроллера и обработки ошибок.

Принципы:
- SRP: приложение собирает компоненты и переводит исключения в коды выхода.
- DIP: логика вынесена в контроллер.
"""
from __future__ import annotations

import argparse
import logging
from typing import Optional, Sequence

from app.controllers.app_controller import AppController
from app.models.errors import ConfigError, OutputError, SimulationError, UsageError
from app.ui.cli import CommandLine

logger = logging.getLogger(__name__)

EXIT_OTHER = 1
EXIT_CONFIG = 2
EXIT_OUTPUT = 3


class OneBitSimulatorApp:
    """CLI-приложение симулятора."""

    def __init__(self, cli: Optional[CommandLine] = None) -> None:
        self._cli = cli or CommandLine()
        self._controller = AppController(cli=self._cli)
        self._controller.bind_commands()

    def parse(self, argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
        return self._cli.parse(argv)

    def execute(self, args: argparse.Namespace) -> int:
        """Выполняет команду; любая ожидаемая ошибка → JSON-строка в stderr и ненулевой код."""
        try:
            return self._cli.dispatch(args)
        except SimulationError as exc:
            return self.report(exc)
        except OSError as exc:
            self._cli.print_error({"error": "output", "message": str(exc)})
            return EXIT_OUTPUT
        except ValueError as exc:
            self._cli.print_error({"error": "value", "message": str(exc)})
            return EXIT_OTHER

    def report(self, exc: SimulationError) -> int:
        """Печатает ошибку JSON-строкой и возвращает код выхода."""
        logger.warning("%s: %s", exc.code, exc.message)
        self._cli.print_error(exc.as_record())
        if isinstance(exc, ConfigError):
            return EXIT_CONFIG
        if isinstance(exc, OutputError):
            return EXIT_OUTPUT
        return EXIT_OTHER

    def run(self, argv: Optional[Sequence[str]] = None) -> int:
        try:
            args = self.parse(argv)
        except UsageError as exc:
            return self.report(exc)
        return self.execute(args)
