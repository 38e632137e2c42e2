"""Logging configuration."""

import logging
import sys
from typing import Union

LOGGER_NAME = "zkcnn"


def setup_logger(name: str = LOGGER_NAME, level: Union[int, str] = logging.INFO) -> logging.Logger:
    """
    Set up and configure logger for the toolkit.

    Every module calls this at import time; the first call installs the
    stdout handler and later calls return the same logger untouched.

    Args:
        name: Logger name
        level: Logging level (default: INFO)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    logger.setLevel(level)

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(logging.DEBUG)

    formatter = logging.Formatter(
        "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )
    console_handler.setFormatter(formatter)

    logger.addHandler(console_handler)

    return logger


def set_log_level(level: Union[int, str], name: str = LOGGER_NAME) -> None:
    """
    Change the level of an already configured logger.

    Args:
        level: New level, either a logging constant or its name ("DEBUG")
        name: Logger name
    """
    if isinstance(level, str):
        level = level.upper()
    setup_logger(name).setLevel(level)
