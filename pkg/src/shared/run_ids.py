import uuid
from contextvars import ContextVar
from typing import Optional

import structlog

# run id of the command currently executing; worker threads started through
# shared.workers copy the context, so their log events carry the same id
run_id_var: ContextVar[Optional[str]] = ContextVar("run_id", default=None)


def get_run_id() -> Optional[str]:
    """Get the run ID for the current context."""
    return run_id_var.get()


def set_run_id(run_id: str) -> None:
    """Set the run ID for the current context and bind it into log events."""
    run_id_var.set(run_id)
    structlog.contextvars.bind_contextvars(run_id=run_id)


def generate_run_id(prefix: str = "run") -> str:
    """
    Generate a new run ID with a prefix.

    Args:
        prefix: Prefix for the run ID (default: "run"). Tests use "test".
    """
    return f"{prefix}-{uuid.uuid4()}"


def clear_run_id() -> None:
    """
    Clear the run ID from the current context.
    Useful for cleanup in testing.
    """
    run_id_var.set(None)
    structlog.contextvars.unbind_contextvars("run_id")
