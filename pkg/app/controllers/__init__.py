"""Контроллеры: связывают команды CLI и доменную логику (сервисы)."""
