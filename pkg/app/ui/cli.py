"""Командная строка симулятора: разбор аргументов и вывод для пользователя.

Принципы:
- SRP: только интерфейс командной строки; действия выполняет контроллер через `on_*` колбэки.
- ISP: компактное API (parse, dispatch, print_*), без знания о сервисах.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Iterable, List, NoReturn, Optional, Sequence, TextIO, Tuple

from app.models.errors import UsageError

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


class _ArgumentParser(argparse.ArgumentParser):
    """argparse без печати usage и выхода: ошибка разбора становится `UsageError`.

    Подкоманды создаются тем же классом, поэтому правило действует и для них.
    """

    def error(self, message: str) -> NoReturn:
        raise UsageError(f"{self.prog}: {message}")


class CommandLine:
    """Команды `run`, `list-scenarios`, `selftest`."""

    def __init__(self, prog: str = "onebit-sim", out: Optional[TextIO] = None, err: Optional[TextIO] = None) -> None:
        self._out = sys.stdout if out is None else out
        self._err = sys.stderr if err is None else err
        self._parser = self._build_parser(prog)

        self.on_run: Optional[Callable[[Path, Path, Optional[int], int], int]] = None
        self.on_list_scenarios: Optional[Callable[[], int]] = None
        self.on_selftest: Optional[Callable[[], int]] = None

    def parse(self, argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
        """Разбор аргументов.

        Raises:
            UsageError: неизвестная команда, пропущенный или неверный аргумент.
        """
        return self._parser.parse_args(argv)

    def dispatch(self, args: argparse.Namespace) -> int:
        """Вызывает колбэк выбранной команды и возвращает код выхода."""
        if args.command == "run":
            if self.on_run is None:
                return 1
            return self.on_run(Path(args.config), Path(args.out), args.seed, args.threads)
        if args.command == "list-scenarios":
            return self.on_list_scenarios() if self.on_list_scenarios else 1
        if args.command == "selftest":
            return self.on_selftest() if self.on_selftest else 1
        self._parser.print_help(self._err)
        return 1

    # ---- Вывод ----
    def print_scenarios(self, rows: Iterable[Tuple[str, str, Sequence[str], Sequence[str]]]) -> None:
        for name, description, estimators, detectors in rows:
            print(f"{name:<16} {description}", file=self._out)
            print(f"{'':<16} оценщики: {', '.join(estimators)}", file=self._out)
            print(f"{'':<16} детекторы: {', '.join(detectors)}", file=self._out)

    def print_outputs(self, paths: List[Path]) -> None:
        for path in paths:
            print(str(path), file=self._out)

    def print_error(self, record: dict) -> None:
        """Одна машиночитаемая JSON-строка в stderr."""
        print(json.dumps(record, ensure_ascii=False), file=self._err)

    # ---- Internal ----
    def _build_parser(self, prog: str) -> argparse.ArgumentParser:
        parser = _ArgumentParser(
            prog=prog,
            description="Монте-Карло симулятор SVM-приёмника с однобитными АЦП",
        )
        parser.add_argument("--log-level", default="INFO", choices=LOG_LEVELS, help="уровень логирования")
        commands = parser.add_subparsers(dest="command", required=True)

        run = commands.add_parser("run", help="прогнать эксперимент по YAML-конфигу")
        run.add_argument("config", help="путь к YAML-конфигу")
        run.add_argument("--out", default="results", help="каталог для metrics.csv и config.echo")
        run.add_argument("--seed", type=self._u64, default=None, help="переопределить master_seed")
        run.add_argument("--threads", type=self._positive_int, default=1, help="число процессов")

        commands.add_parser("list-scenarios", help="сценарии и допустимые оценщики/детекторы")
        commands.add_parser("selftest", help="быстрые тесты-оракулы и свойства")
        return parser

    def _u64(self, value: str) -> int:
        number = int(value)
        if not 0 <= number <= 2 ** 64 - 1:
            raise argparse.ArgumentTypeError(f"зерно должно быть u64, получено {value}")
        return number

    def _positive_int(self, value: str) -> int:
        number = int(value)
        if number < 1:
            raise argparse.ArgumentTypeError(f"ожидалось целое ≥ 1, получено {value}")
        return number
