from __future__ import annotations

from typing import Any, Dict


class CPDError(Exception):
    """Base error; `code` and `exit_code` drive the CLI error payload."""

    code: str = "error"
    exit_code: int = 1

    def __init__(self, msg: str, **extra: Any):
        super().__init__(msg)
        self.msg = msg
        self.extra: Dict[str, Any] = extra


class InputError(CPDError, ValueError):
    code = "invalid_input"
    exit_code = 2


class EmptySetError(InputError):
    code = "empty_set"


class PreconditionError(InputError):
    code = "precondition"


class ConfigError(InputError):
    code = "config"


class SolverError(CPDError, RuntimeError):
    code = "solver_failure"
    exit_code = 3


class CoverageError(CPDError):
    code = "coverage_failure"
    exit_code = 4
