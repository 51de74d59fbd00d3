"""Structured JSON logging for analysis runs."""
import logging
import json
import sys
from typing import Any, Dict, Optional, TextIO

CONTEXT_FIELDS = ('subcommand', 'cycle_count', 'length_km', 'case', 'seed', 'intervals', 'duration_ms')


class JSONFormatter(logging.Formatter):
    """Formatter that outputs JSON-structured logs."""

    def format(self, record: logging.LogRecord) -> str:
        """
        Format log record as JSON.

        Args:
            record: Python log record

        Returns:
            JSON string
        """
        log_obj: Dict[str, Any] = {
            'level': record.levelname,
            'message': record.getMessage(),
            'timestamp': self.formatTime(record, self.datefmt),
            'logger': record.name,
        }

        if record.exc_info:
            log_obj['exception'] = self.formatException(record.exc_info)

        for name in CONTEXT_FIELDS:
            if hasattr(record, name):
                log_obj[name] = getattr(record, name)

        return json.dumps(log_obj)


def setup_logging(level: int = logging.INFO, stream: Optional[TextIO] = None) -> None:
    """
    Configure JSON logging for the application.

    Args:
        level: Logging level (default: INFO)
        stream: Output stream (default: stderr, keeping stdout free for results)
    """
    root_logger = logging.getLogger()

    # Remove existing handlers to prevent duplication
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    handler = logging.StreamHandler(stream or sys.stderr)
    handler.setFormatter(JSONFormatter())

    root_logger.setLevel(level)
    root_logger.addHandler(handler)


class RunContextFilter(logging.Filter):
    """
    Filter that adds CLI run context to log records.

    Use: handler.addFilter(RunContextFilter(subcommand='sweep', seed=1))
    """

    def __init__(
        self,
        subcommand: Optional[str] = None,
        cycle_count: Optional[int] = None,
        seed: Optional[int] = None,
    ):
        super().__init__()
        self.subcommand = subcommand
        self.cycle_count = cycle_count
        self.seed = seed

    def filter(self, record: logging.LogRecord) -> bool:
        """Add context fields to record."""
        if self.subcommand:
            record.subcommand = self.subcommand
        if self.cycle_count is not None:
            record.cycle_count = self.cycle_count
        if self.seed is not None:
            record.seed = self.seed
        return True
