import functools
import logging

from pydantic import ValidationError

from src.exceptions import MpqDpgError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_CONFIG = 2
EXIT_IO = 3


def handle_command_errors(command):
    """Turn a subcommand's exceptions into process exit codes."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs) -> int:
        try:
            result = command(*args, **kwargs)
            return EXIT_OK if result is None else int(result)
        except MpqDpgError as exc:
            logger.error(exc.detail)
            return exc.exit_code
        except ValidationError as exc:
            logger.error(f"Invalid input: {exc}")
            return EXIT_CONFIG
        except OSError as exc:
            logger.error(f"I/O failure: {exc}")
            return EXIT_IO
        except Exception as exc:
            logger.exception(str(exc))
            return EXIT_UNEXPECTED

    return wrapper
