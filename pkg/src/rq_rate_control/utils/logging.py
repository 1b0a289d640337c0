"""Loguru sink setup shared by the CLI and scripts."""

import sys
from pathlib import Path
from typing import Optional, Union

from loguru import logger

from ..config import LOGGING

CONSOLE_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} [{level}] {name}: {message}"
ERROR_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} - {name} - {level} - {message} - {file}:{line}"


def setup_logging(
    level: Optional[str] = None,
    log_dir: Optional[Union[str, Path]] = None
) -> None:
    """Configure loguru sinks.

    Args:
        level: Console log level; defaults to ``LOGGING["level"]``.
        log_dir: Directory for the rotating error log; no file sink when None.
    """
    level = level or LOGGING["level"]
    log_dir = log_dir if log_dir is not None else LOGGING["directory"]

    logger.remove()
    logger.add(sys.stderr, level=level, format=CONSOLE_FORMAT)

    if log_dir:
        path = Path(log_dir)
        path.mkdir(parents=True, exist_ok=True)
        logger.add(
            path / "error.log",
            level="ERROR",
            format=ERROR_FORMAT,
            rotation="10 MB",
            retention=5,
            encoding="utf8",
        )

    logger.debug(f"Logging configured: level={level}, log_dir={log_dir}")
