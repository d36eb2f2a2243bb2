import functools
import logging
import os
import sys
import time
from typing import Callable, List, Optional, Union

from .config import APP_NAME, LOG_FORMAT, LOG_LEVEL

RUN_LOG_FORMAT = "%(asctime)s - %(levelname)s - [%(threadName)s] - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"

LOG_LEVELS = {
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
    'CRITICAL': logging.CRITICAL
}

# ANSI colours per level name for terminal output
LEVEL_COLORS = {
    'DEBUG': "\033[36m",
    'INFO': "\033[32m",
    'WARNING': "\033[33m",
    'ERROR': "\033[31m",
    'CRITICAL': "\033[35m\033[1m",
}
RESET = "\033[0m"


def _to_level(level: Union[str, int]) -> int:
    if isinstance(level, str):
        return LOG_LEVELS.get(level.upper(), logging.INFO)
    return level


class ColoredFormatter(logging.Formatter):
    """Formatter that wraps the level name in its terminal colour."""

    def format(self, record: logging.LogRecord) -> str:
        original = record.levelname
        if original in LEVEL_COLORS:
            record.levelname = f"{LEVEL_COLORS[original]}{original}{RESET}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


class Logger:
    """
    Centralized logger for the application.
    Console output always, plus a run log inside the output directory while a command runs.
    """

    def __init__(self, name: str = APP_NAME, level: Union[str, int] = 'INFO'):
        """
        Args:
            name: Logger name, used in logs
            level: Log level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
        """
        self.name = name
        self.logger = logging.getLogger(name)
        self.logger.setLevel(_to_level(level))
        self.handlers: List[logging.Handler] = []

        # module reloads must not stack handlers
        self.logger.handlers = []
        self.logger.propagate = False

        self.add_console_handler()

    def add_console_handler(self, level: Union[str, int] = 'DEBUG', format_str: str = LOG_FORMAT) -> None:
        """Console handler on stderr; coloured when stderr is a terminal."""
        console = logging.StreamHandler(sys.stderr)
        console.setLevel(_to_level(level))
        formatter_cls = ColoredFormatter if sys.stderr.isatty() else logging.Formatter
        console.setFormatter(formatter_cls(format_str, DATE_FORMAT))
        self._attach(console)

    def add_file_handler(self, filename: str, level: Union[str, int] = 'DEBUG',
                         format_str: str = RUN_LOG_FORMAT) -> logging.Handler:
        """
        Write records to `filename`, replacing an earlier run's file.

        Returns:
            The handler, so callers can detach it with remove_handler()
        """
        os.makedirs(os.path.dirname(os.path.abspath(filename)), exist_ok=True)
        handler = logging.FileHandler(filename, mode='w', encoding='utf-8')
        handler.setLevel(_to_level(level))
        handler.setFormatter(logging.Formatter(format_str, DATE_FORMAT))
        self._attach(handler)
        self.debug(f"Run log at {filename}")
        return handler

    def remove_handler(self, handler: logging.Handler) -> None:
        """Detach and close one handler."""
        handler.close()
        self.logger.removeHandler(handler)
        if handler in self.handlers:
            self.handlers.remove(handler)

    def _attach(self, handler: logging.Handler) -> None:
        self.logger.addHandler(handler)
        self.handlers.append(handler)

    def set_level(self, level: Union[int, str]) -> None:
        """
        Args:
            level: Log level (can be int or string like 'INFO', 'DEBUG')
        """
        level = _to_level(level)
        self.logger.setLevel(level)
        self.debug(f"Log level set to {logging.getLevelName(level)}")

    def debug(self, msg: str, *args, **kwargs) -> None:
        self.logger.debug(msg, *args, **kwargs)

    def info(self, msg: str, *args, **kwargs) -> None:
        self.logger.info(msg, *args, **kwargs)

    def warning(self, msg: str, *args, **kwargs) -> None:
        self.logger.warning(msg, *args, **kwargs)

    def error(self, msg: str, *args, **kwargs) -> None:
        self.logger.error(msg, *args, **kwargs)

    def measure_performance(self, func_name: Optional[str] = None) -> Callable:
        """
        Decorator logging the wall time of each call at DEBUG.

        Failures are logged at DEBUG too and re-raised; callers decide how loud they are.
        """
        def decorator(func):
            name = func_name or func.__name__

            @functools.wraps(func)
            def wrapper(*args, **kwargs):
                start = time.perf_counter()
                try:
                    result = func(*args, **kwargs)
                except Exception as e:
                    self.debug(f"{name} raised {type(e).__name__} after {time.perf_counter() - start:.4f}s")
                    raise
                self.debug(f"{name} took {time.perf_counter() - start:.4f}s")
                return result
            return wrapper
        return decorator


logger = Logger(APP_NAME, level=LOG_LEVEL)

__all__ = ['logger', 'Logger', 'LOG_LEVELS']
