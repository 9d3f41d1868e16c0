"""structlog configuration shared by the CLI and library callers."""

from __future__ import annotations

import sys
from typing import Any

import structlog

_LEVELS = {"DEBUG": 10, "INFO": 20, "WARNING": 30, "ERROR": 40}


def _stderr_logger(*args: Any) -> structlog.PrintLogger:
    # resolved per call so a swapped sys.stderr (test runners) is honoured
    return structlog.PrintLogger(sys.stderr)


def configure_logging(log_level: str = "WARNING") -> None:
    """Configure structlog for stderr output.

    Tables and result files never go through the logger, so console
    rendering here cannot disturb machine-readable output.
    """
    level = _LEVELS.get(log_level.upper(), 30)
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.TimeStamper(fmt="iso"),
            (
                structlog.dev.ConsoleRenderer()
                if sys.stderr.isatty()
                else structlog.processors.JSONRenderer()
            ),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        context_class=dict,
        logger_factory=_stderr_logger,
        cache_logger_on_first_use=False,
    )
