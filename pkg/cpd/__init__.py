from __future__ import annotations

import logging

from asfeslib.core.logger import Logger

from cpd.core.config import settings
from cpd.core.paths import LOG_DIR

__version__ = settings.VERSION


LOG_LEVEL = logging.DEBUG if settings.DEV else getattr(logging, settings.LOG_LEVEL.upper(), logging.INFO)

log = Logger(
    name="cpd",
    log_to_file=settings.LOG_TO_FILE,
    log_file=str(LOG_DIR / "cpd.log"),
    level=LOG_LEVEL,
)
