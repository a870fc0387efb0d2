import structlog

from deform.errors import (
    CorrectionFailed,
    ObstructionNotExact,
    OrderNotReached,
    ResidualNonzero,
    TruncationTooShallow,
)
from diffalg.errors import (
    IrrationalConstant,
    JetTooShort,
    NotDivisible,
    NotExact,
    NotTame,
    TruncationMismatch,
)
from hierarchy.errors import LeadingTermMismatch, RecursionBroken
from numlab.errors import Blowup, LatticeError, PoleHit
from shared.errors import ExitCode, exit_code_for, register_exit_code

logger = structlog.get_logger(__name__)


def register_exit_codes() -> None:
    """Map every domain error to the process exit code the CLI reports for it."""
    register_exit_code(ObstructionNotExact, ExitCode.OBSTRUCTION_NOT_EXACT, "OBSTRUCTION_NOT_EXACT")

    register_exit_code(ResidualNonzero, ExitCode.RESIDUAL_NONZERO, "RESIDUAL_NONZERO")
    register_exit_code(CorrectionFailed, ExitCode.RESIDUAL_NONZERO, "CORRECTION_FAILED")
    register_exit_code(NotTame, ExitCode.RESIDUAL_NONZERO, "NOT_TAME")
    register_exit_code(NotExact, ExitCode.RESIDUAL_NONZERO, "NOT_EXACT")
    register_exit_code(NotDivisible, ExitCode.RESIDUAL_NONZERO, "NOT_DIVISIBLE")
    register_exit_code(RecursionBroken, ExitCode.RESIDUAL_NONZERO, "RECURSION_BROKEN")
    register_exit_code(LeadingTermMismatch, ExitCode.RESIDUAL_NONZERO, "LEADING_TERM_MISMATCH")

    register_exit_code(Blowup, ExitCode.TOLERANCE, "BLOWUP")
    register_exit_code(PoleHit, ExitCode.TOLERANCE, "POLE_HIT")

    register_exit_code(TruncationTooShallow, ExitCode.USAGE, "TRUNCATION_TOO_SHALLOW")
    register_exit_code(OrderNotReached, ExitCode.USAGE, "ORDER_NOT_REACHED")
    register_exit_code(LatticeError, ExitCode.USAGE, "LATTICE_ERROR")
    register_exit_code(JetTooShort, ExitCode.USAGE, "JET_TOO_SHORT")
    register_exit_code(TruncationMismatch, ExitCode.USAGE, "TRUNCATION_MISMATCH")
    register_exit_code(IrrationalConstant, ExitCode.USAGE, "IRRATIONAL_CONSTANT")

    logger.debug("Exit codes registered")


def report_error(exc: BaseException) -> ExitCode:
    """
    Log a mapped error once and return its exit code.

    Raises:
        KeyError: the exception type has no registered exit code
    """
    exit_code, report = exit_code_for(exc)
    log = logger.warning if exit_code == ExitCode.USAGE else logger.error
    log("Command failed", **report.model_dump())
    return exit_code
