"""Отрисовка кривых метрик через matplotlib (бэкенд Agg, без окна).

Принципы:
- SRP: только представление `MetricTable` в виде фигуры; запись файла делает `ReportService`.
"""
from __future__ import annotations

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from app.models.experiment_model import METRICS, MetricTable

PANEL_INCHES = (4.0, 3.0)
DPI = 100


class PlotRenderer:
    """Одна панель на метрику: NMSE в дБ, BER в логарифмическом масштабе, остальные — линейно."""

    def render(self, table: MetricTable) -> Figure:
        metrics = [metric for metric in METRICS if table.series(metric)]
        width, height = PANEL_INCHES
        figure = Figure(figsize=(width * max(len(metrics), 1), height), dpi=DPI)
        FigureCanvasAgg(figure)
        axes = figure.subplots(1, max(len(metrics), 1), squeeze=False)[0]

        if not metrics:
            axes[0].text(0.5, 0.5, "no data", ha="center", va="center")
            axes[0].set_axis_off()
            return figure

        for ax, metric in zip(axes, metrics):
            snr, values = np.array(table.series(metric), dtype=float).T
            self._draw_panel(ax, metric, snr, values)
        figure.tight_layout()
        return figure

    def _draw_panel(self, ax, metric: str, snr: np.ndarray, values: np.ndarray) -> None:
        if metric == "NMSE":
            keep = values > 0
            ax.plot(snr[keep], 10.0 * np.log10(values[keep]), "-o")
            ax.set_ylabel("NMSE, dB")
        elif metric == "BER":
            # нулевой BER на логарифмической оси не изобразить
            keep = values > 0
            ax.semilogy(snr[keep], values[keep], "-*")
            ax.set_ylabel("BER")
        else:
            ax.plot(snr, values, "-o")
            ax.set_ylabel(metric)
        ax.set_xlabel("SNR, dB")
        ax.grid(True, which="major", axis="both")
