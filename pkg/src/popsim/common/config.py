# Common utilities and shared functionality
import os


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() == "true"


def _env_optional_int(name: str) -> int | None:
    raw = os.getenv(name, "").strip()
    return int(raw, 0) if raw else None


class Config:
    """
    Configuration management for popsim.

    Values come from environment variables with sensible defaults. Library
    calls always accept explicit parameters; these only provide the defaults
    used by the CLI and the MCP tools.
    """

    # Service identification
    SERVICE_NAME: str = os.getenv("SERVICE_NAME", "popsim")
    SERVICE_VERSION: str = os.getenv("SERVICE_VERSION", "0.1.0")

    # Logging configuration
    LOG_LEVEL: str = os.getenv("LOG_LEVEL", "INFO")

    # Randomness: unset means a fresh seed from OS entropy per run
    DEFAULT_SEED: int | None = _env_optional_int("POPSIM_SEED")

    # State-space enumeration
    STATE_CAP: int = int(os.getenv("POPSIM_STATE_CAP", "1000000"))

    # Hybrid scheduler
    SWITCH_FACTOR: float = float(os.getenv("POPSIM_SWITCH_FACTOR", "2.0"))

    # Assert engine invariants on every step (slow)
    DEBUG_CHECKS: bool = _env_bool("POPSIM_DEBUG_CHECKS", "false")

    # Performance settings
    WORKERS: int = int(os.getenv("POPSIM_WORKERS", "1"))
    MAX_SNAPSHOTS: int = int(os.getenv("POPSIM_MAX_SNAPSHOTS", "10000000"))

    @classmethod
    def validate(cls) -> None:
        """
        Validate that the configuration is usable.

        Raises:
            ValueError: If any configuration value is out of range
        """
        invalid_configs = []
        if cls.STATE_CAP < 1:
            invalid_configs.append("POPSIM_STATE_CAP")
        if cls.SWITCH_FACTOR <= 0:
            invalid_configs.append("POPSIM_SWITCH_FACTOR")
        if cls.WORKERS < 1:
            invalid_configs.append("POPSIM_WORKERS")
        if cls.MAX_SNAPSHOTS < 2:
            invalid_configs.append("POPSIM_MAX_SNAPSHOTS")
        if cls.DEFAULT_SEED is not None and cls.DEFAULT_SEED < 0:
            invalid_configs.append("POPSIM_SEED")

        if invalid_configs:
            raise ValueError(f"Invalid configuration: {', '.join(invalid_configs)}")


# Global configuration instance
config = Config()
