"""Logging configuration using structlog."""

import logging
import sys
from typing import TextIO

import structlog


def setup_logging(log_level: str = "INFO", stream: TextIO | None = None) -> None:
    """Configure structured logging; logs go to stderr so stdout carries results."""
    stream = stream or sys.stderr
    level = getattr(logging, log_level.upper(), logging.INFO)

    # Set up standard logging
    logging.basicConfig(format="%(message)s", stream=stream, level=level)

    # Configure structlog
    structlog.configure(
        processors=[
            structlog.contextvars.merge_contextvars,
            structlog.processors.add_log_level,
            structlog.processors.StackInfoRenderer(),
            structlog.dev.set_exc_info,
            structlog.processors.TimeStamper(fmt="iso"),
            structlog.dev.ConsoleRenderer(colors=stream.isatty()),
        ],
        wrapper_class=structlog.make_filtering_bound_logger(level),
        context_class=dict,
        logger_factory=structlog.PrintLoggerFactory(file=stream),
        cache_logger_on_first_use=False,
    )
