"""Запись результатов: CSV метрик, данные для графиков, эхо конфига.

Формат CSV: заголовок `snr_dB,metric,mean,stderr,n`, по строке на пару (SNR, метрика);
числа пишутся через `repr(float)`, что даёт кратчайшее точное представление.
"""
from __future__ import annotations

import csv
import io
import logging
from pathlib import Path
from typing import Optional

from app.models.errors import OutputError
from app.models.experiment_model import MetricRow, MetricTable
from app.ui.plot_renderer import PlotRenderer

logger = logging.getLogger(__name__)

CSV_HEADER = ("snr_dB", "metric", "mean", "stderr", "n")


class ReportService:
    def __init__(self, renderer: Optional[PlotRenderer] = None) -> None:
        self._renderer = renderer or PlotRenderer()

    def format_csv(self, table: MetricTable) -> str:
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in table.rows:
            writer.writerow((repr(float(row.snr_dB)), row.metric, repr(float(row.mean)), repr(float(row.stderr)), int(row.n)))
        return buffer.getvalue()

    def emit_csv(self, table: MetricTable, path: str | Path) -> Path:
        """Пишет таблицу метрик в CSV.

        Raises:
            OutputError: путь недоступен для записи.
        """
        return self._write_text(Path(path), self.format_csv(table))

    def emit_plotdata(self, table: MetricTable, path: str | Path) -> Path:
        """CSV в том же формате плюс PNG с кривыми рядом (тот же путь, суффикс .png)."""
        target = self._write_text(Path(path), self.format_csv(table))
        image_path = target.with_suffix(".png")
        try:
            self._renderer.render(table).savefig(image_path, format="png")
        except OSError as exc:
            raise OutputError(f"Не удалось записать {image_path}: {exc}") from exc
        logger.info("График: %s", image_path)
        return target

    def read_csv(self, path: str | Path) -> MetricTable:
        """Обратное к `emit_csv`."""
        path = Path(path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"Не удалось прочитать {path}: {exc}") from exc
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if tuple(header or ()) != CSV_HEADER:
            raise ValueError(f"Неожиданный заголовок CSV: {header}")
        rows = tuple(
            MetricRow(snr_dB=float(snr), metric=metric, mean=float(mean), stderr=float(stderr), n=int(n))
            for snr, metric, mean, stderr, n in reader
        )
        return MetricTable(rows=rows)

    def write_text(self, path: str | Path, text: str) -> Path:
        """Произвольный текстовый артефакт (например, config.echo)."""
        return self._write_text(Path(path), text)

    def _write_text(self, path: Path, text: str) -> Path:
        try:
            path.parent.mkdir(parents=True, exist_ok=True)
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise OutputError(f"Не удалось записать {path}: {exc}") from exc
        logger.debug("Записан %s", path)
        return path
