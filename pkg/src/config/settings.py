"""
Module: settings

Environment-driven settings. `.env` is loaded with python-dotenv and values
are read with `os.getenv`:

    RELU_SPAN_THREADS    worker threads for parallel scans (0 = auto)
    RELU_SPAN_LOG_LEVEL  root log level (default WARNING)
"""

import logging
import os
from typing import Optional

from dotenv import load_dotenv

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"


def load_settings() -> None:
    """Load `.env` from the working directory without overriding real env vars."""
    load_dotenv(override=False)


def worker_count(override: Optional[int] = None) -> int:
    """
    Number of worker threads to use.

    Args:
        override (int, optional): Explicit value (e.g. from --threads); wins
            over RELU_SPAN_THREADS.

    Returns:
        int: At least 1; 0 means one worker per CPU.

    Raises:
        ValueError: negative or non-integer setting.
    """
    if override is None:
        raw = os.getenv("RELU_SPAN_THREADS", "0").strip() or "0"
        try:
            override = int(raw)
        except ValueError as exc:
            raise ValueError(f"RELU_SPAN_THREADS must be an integer, got {raw!r}") from exc
    if override < 0:
        raise ValueError(f"thread count must be >= 0, got {override}")
    return override or os.cpu_count() or 1


def configure_logging(verbosity: int = 0) -> None:
    """
    Install one stderr handler on the root logger.

    verbosity 0 uses RELU_SPAN_LOG_LEVEL (default WARNING), 1 INFO, 2+ DEBUG.
    """
    if verbosity >= 2:
        level = logging.DEBUG
    elif verbosity == 1:
        level = logging.INFO
    else:
        level = getattr(logging, os.getenv("RELU_SPAN_LOG_LEVEL", "WARNING").upper(), logging.WARNING)
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)
