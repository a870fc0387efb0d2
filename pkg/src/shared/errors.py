from dataclasses import dataclass
from enum import IntEnum
from typing import Dict, Optional, Tuple, Type

import structlog
from pydantic import BaseModel, Field

logger = structlog.get_logger(__name__)


class ExitCode(IntEnum):
    OK = 0
    OBSTRUCTION_NOT_EXACT = 2
    RESIDUAL_NONZERO = 3
    TOLERANCE = 4
    USAGE = 64


class ErrorReport(BaseModel):
    """Error summary written to the diagnostic stream when a command fails"""
    error: str = Field(
        ...,
        description="Error type"
    )
    detail: Optional[str] = Field(
        None,
        description="Detailed error message"
    )
    code: str = Field(
        ...,
        description="Stable machine readable code"
    )
    exit_code: int


@dataclass
class UsageError(Exception):
    """Invalid flags, config file entries or argument combinations"""
    message: str

    def __str__(self):
        return self.message


@dataclass
class CheckFailed(Exception):
    """A requested verification ran to completion and did not hold"""
    check: str
    detail: str
    numeric: bool = False

    def __str__(self):
        kind = "numeric" if self.numeric else "exact"
        return f"{kind} check '{self.check}' failed: {self.detail}"


_registry: Dict[Type[BaseException], Tuple[ExitCode, str]] = {}


def register_exit_code(
    exc_type: Type[BaseException], exit_code: ExitCode, code: str
) -> None:
    _registry[exc_type] = (exit_code, code)


def exit_code_for(exc: BaseException) -> Tuple[ExitCode, ErrorReport]:
    """
    Map an exception to its exit code using the most specific registered type.

    Unregistered exceptions are re-raised by the caller; this function only
    resolves registered ones and raises KeyError otherwise.
    """
    if isinstance(exc, CheckFailed):
        exit_code = ExitCode.TOLERANCE if exc.numeric else ExitCode.RESIDUAL_NONZERO
        code = "NUMERIC_CHECK_FAILED" if exc.numeric else "EXACT_CHECK_FAILED"
    else:
        for klass in type(exc).__mro__:
            if klass in _registry:
                exit_code, code = _registry[klass]
                break
        else:
            raise KeyError(type(exc).__name__)

    report = ErrorReport(
        error=type(exc).__name__,
        detail=str(exc),
        code=code,
        exit_code=int(exit_code),
    )
    return exit_code, report


register_exit_code(UsageError, ExitCode.USAGE, "USAGE_ERROR")
