"""Точка входа: `python -m app.main run configs/flat_iid_ce_sweep.yaml`."""
from __future__ import annotations

import logging
import sys
from typing import Optional, Sequence

from app.app import OneBitSimulatorApp
from app.models.errors import UsageError

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Настраивает логирование и выполняет команду."""
    app = OneBitSimulatorApp()
    try:
        args = app.parse(argv)
    except UsageError as exc:
        return app.report(exc)
    logging.basicConfig(level=getattr(logging, args.log_level), format=LOG_FORMAT)
    return app.execute(args)


if __name__ == "__main__":
    sys.exit(main())
