import logging
import os
from enum import StrEnum
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
LOG_FORMAT_DEBUG = "%(levelname)s:%(message)s:%(pathname)s:%(funcName)s:%(lineno)d"
DEFAULT_LOG_LEVEL = os.getenv("MPQDPG_LOG_LEVEL", "INFO")


class LogLevels(StrEnum):
    info = "INFO"
    warn = "WARN"
    error = "ERROR"
    debug = "DEBUG"


def configure_logging(log_level: str = DEFAULT_LOG_LEVEL, log_file: Path | None = None):
    log_level = str(log_level).upper()
    log_levels = [level.value for level in LogLevels]

    if log_level not in log_levels:
        log_level = LogLevels.error

    log_format = LOG_FORMAT_DEBUG if log_level == LogLevels.debug else LOG_FORMAT
    logging.basicConfig(level=log_level, format=log_format, force=True)

    if log_file is not None:
        attach_log_file(log_file, log_format)


def attach_log_file(log_file: Path, log_format: str = LOG_FORMAT) -> logging.Handler:
    """Mirror the root logger into a run directory file."""
    log_file = Path(log_file)
    log_file.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(log_file, mode="a", encoding="utf-8")
    handler.setFormatter(logging.Formatter(log_format))
    logging.getLogger().addHandler(handler)
    return handler


def detach_log_file(handler: logging.Handler) -> None:
    logging.getLogger().removeHandler(handler)
    handler.close()
