import logging
import sys

from popsim.common.config import Config

# Package logger; child loggers propagate to it
logger = logging.getLogger("popsim")

# Configure logging to stderr (stdout carries CSV/JSON output and the MCP transport)
handler = logging.StreamHandler(sys.stderr)
handler.setLevel(logging.DEBUG)
formatter = logging.Formatter("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

handler.setFormatter(formatter)
logger.addHandler(handler)
logger.setLevel(getattr(logging, Config.LOG_LEVEL.upper(), logging.INFO))


def get_logger(name: str | None = None) -> logging.Logger:
    """Get a logger instance for the given name.

    Args:
        name: Optional logger name, usually ``__name__``. If not provided,
            returns the package logger.

    Returns:
        Configured logger instance.
    """
    if name:
        if name.startswith("popsim."):
            name = name[len("popsim.") :]
        return logging.getLogger(f"popsim.{name}")
    return logger


def set_level(level: str) -> None:
    """Change the package log level at runtime (used by the CLI ``--log-level`` flag)."""
    logger.setLevel(getattr(logging, level.upper(), logging.INFO))
