"""Сервисы: квантование, SVM-решатели, каналы, оценка, детектирование, OFDM, эксперимент, отчёты."""
