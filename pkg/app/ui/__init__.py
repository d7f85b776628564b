"""UI-слой: командная строка и отрисовка графиков."""
