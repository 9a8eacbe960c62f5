"""Config management for lmcot runs.

Process-wide settings (log level, worker count, error monitoring, data paths)
come from the project's `.env` file and the environment. Here, we parse those
values and map them to specific config objects. Settings for a single
experiment live in its JSON document instead; see `lmcot/experiment_config.py`.

Most config values are documented on :class:`BaseConfig`, from which all other
classes inherit.

This module is kept outside the `lmcot` package so that library code never
reads the environment on its own.
"""

import logging
import os
from dotenv import load_dotenv

# Load dotenv early so that `_env` will work in the class definitions below.
load_dotenv()

#: The test environment. For unit tests only.
TESTING = "testing"
#: The development environment. For local runs.
DEVELOPMENT = "development"
#: The production environment. For long batch runs on shared machines.
PRODUCTION = "production"


def _env(key: str, default=None) -> str | None:
    """Fetch a value from the local environment.

    :param key: the environment variable to fetch
    :return: a value, or ``None`` if the variable is undefined.
    """
    return os.environ.get(key, default)


def _env_int(key: str, default: int) -> int:
    raw = _env(key)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{key} must be an integer, got {raw!r}.") from None


class BaseConfig:
    """Base settings for all configs."""

    # Core settings
    # -------------

    #: The run environment ("production", "development", etc.).
    LMC_ENVIRONMENT = DEVELOPMENT

    #: Logger setup
    LOG_LEVEL = logging.ERROR

    #: Default number of worker processes for trial sweeps. The `--threads`
    #: flag takes precedence.
    THREADS = _env_int("LMC_THREADS", 1)

    #: Directory holding the MNIST IDX files, used when an mnist data block
    #: names no files.
    DATA_DIR = _env("LMC_DATA_DIR", "data/mnist")

    # Services
    # --------

    #: Sentry data source name (DSN).
    #: We use Sentry to get notifications about failed batch runs.
    SENTRY_DSN = _env("SENTRY_DSN")


class UnitTestConfig(BaseConfig):
    """For unit tests."""

    LMC_ENVIRONMENT = TESTING
    THREADS = 1

    #: Logger setup
    LOG_LEVEL = logging.DEBUG


class DevelopmentConfig(BaseConfig):
    """For local runs."""

    LMC_ENVIRONMENT = DEVELOPMENT

    #: Logger setup
    LOG_LEVEL = logging.INFO


class ProductionConfig(BaseConfig):
    """For long batch runs."""

    LMC_ENVIRONMENT = PRODUCTION

    #: Logger setup
    LOG_LEVEL = logging.INFO


def _validate_config(config: BaseConfig):
    """Examine the given config and fail if the config is malformed.

    :param config: the config to test
    """
    assert config.LMC_ENVIRONMENT in {TESTING, DEVELOPMENT, PRODUCTION}

    if config.THREADS < 1:
        raise ValueError(f"LMC_THREADS must be >= 1, got {config.THREADS}.")

    if not config.DATA_DIR:
        raise ValueError("This config does not define DATA_DIR.")

    if config.LMC_ENVIRONMENT == PRODUCTION and config.SENTRY_DSN is not None:
        if not config.SENTRY_DSN.startswith("https://"):
            raise ValueError("SENTRY_DSN must be an https URL.")


def load_config_object(name: str):
    """Load a config object by name.

    :param name: the name of the config to load
    :return: a config object
    """
    configs = {
        TESTING: UnitTestConfig,
        DEVELOPMENT: DevelopmentConfig,
        PRODUCTION: ProductionConfig,
    }

    if name not in configs:
        raise ValueError(f"Unknown config name: {name}")

    config = configs[name]()
    _validate_config(config)
    return config
