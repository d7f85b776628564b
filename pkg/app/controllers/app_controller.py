"""Контроллер приложения: связывает команды CLI с сервисами.

SOLID:
- SRP: управляет порядком действий (конфиг → эксперимент → отчёт), без вычислений.
- DIP: сервисы — поля dataclass, их можно подменить в тестах.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from app.models.errors import SimulationError
from app.services.config_service import FLAT_DETECTORS, FLAT_ESTIMATORS, OFDM_ESTIMATORS, ConfigService
from app.services.experiment_service import ExperimentService
from app.services.report_service import ReportService
from app.ui.cli import CommandLine

logger = logging.getLogger(__name__)

SCENARIO_TABLE = (
    ("flat_iid", "плоский канал, элементы CN(0, 1)", FLAT_ESTIMATORS[:1] + FLAT_ESTIMATORS[2:], FLAT_DETECTORS),
    ("flat_correlated", "плоский канал, ULA с лапласовским угловым спектром", FLAT_ESTIMATORS, FLAT_DETECTORS),
    ("ofdm", "частотно-селективный канал, OFDM с CP", OFDM_ESTIMATORS, ("ofdm_svm",)),
)
TESTS_DIR = Path(__file__).resolve().parents[2] / "tests"


@dataclass
class AppController:
    """Связывает `CommandLine` с прикладной логикой.

    Ответственности:
    - Бинд колбэков команд.
    - Прогон эксперимента и запись metrics.csv, config.echo, plotdata.csv/png.
    - Запуск самотестов.
    """
    cli: CommandLine

    _config_service: ConfigService = field(default_factory=ConfigService)
    _experiment_service: ExperimentService = field(default_factory=ExperimentService)
    _report_service: ReportService = field(default_factory=ReportService)

    def bind_commands(self) -> None:
        self.cli.on_run = self._handle_run
        self.cli.on_list_scenarios = self._handle_list_scenarios
        self.cli.on_selftest = self._handle_selftest

    # ---- Handlers ----
    def _handle_run(self, config_path: Path, out_dir: Path, seed: Optional[int], threads: int) -> int:
        config = self._config_service.load_config(config_path)
        config = self._config_service.with_overrides(config, master_seed=seed)
        table = self._experiment_service.run_experiment(config, workers=threads)
        written = [
            self._report_service.emit_csv(table, out_dir / "metrics.csv"),
            self._report_service.write_text(out_dir / "config.echo", self._config_service.dump_config(config)),
            self._report_service.emit_plotdata(table, out_dir / "plotdata.csv"),
        ]
        self.cli.print_outputs(written)
        return 0

    def _handle_list_scenarios(self) -> int:
        self.cli.print_scenarios(SCENARIO_TABLE)
        return 0

    def _handle_selftest(self) -> int:
        if not TESTS_DIR.is_dir():
            raise SimulationError(f"Каталог тестов не найден: {TESTS_DIR}")
        import pytest  # только для selftest

        logger.info("Самотест: %s", TESTS_DIR)
        return int(pytest.main(["-q", "-m", "not slow", str(TESTS_DIR)]))
