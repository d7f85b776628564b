"""Пакет симулятора: точка входа, контроллер, сервисы, CLI и модели."""
