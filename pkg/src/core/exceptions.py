# path: src/core/exceptions.py
from __future__ import annotations

from typing import Any


class LingerError(Exception):
    """Base class for every error raised by the library."""


class InputError(LingerError, ValueError):
    """Bad caller input: dimension mismatch, index out of range, k <= 0 for lowbit."""


class DataParseError(InputError):
    def __init__(self, message: str, *, path: str | None = None, line: int | None = None) -> None:
        self.path = path
        self.line = line
        where = ""
        if path is not None:
            where = f"{path}:{line}: " if line is not None else f"{path}: "
        elif line is not None:
            where = f"line {line}: "
        super().__init__(f"{where}{message}")


class ConfigError(LingerError, ValueError):
    """Invalid run config, grid or reference value."""


class ScheduleError(LingerError, RuntimeError):
    """Index schedule used out of order (missing prerequisite bucket)."""


class SolverAbort(LingerError, RuntimeError):
    """A run cannot continue; `diagnostics` carries iteration, passes and the offending values."""

    def __init__(self, message: str, **diagnostics: Any) -> None:
        super().__init__(message)
        self.diagnostics = diagnostics


EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_ABORT = 3


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, SolverAbort):
        return EXIT_ABORT
    if isinstance(exc, (ConfigError, InputError, FileNotFoundError)):
        return EXIT_CONFIG
    return 1
