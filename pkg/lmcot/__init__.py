"""Linear mode connectivity and optimal transport experiments.

For an overview of the experiments and how to run them, see the README at the
repository root.
"""

import logging
import sys

import sentry_sdk
from dotenv import load_dotenv

import config


def _initialize_sentry(sentry_dsn: str):
    """Initialize basic monitoring through the third-party Sentry service."""
    sentry_sdk.init(dsn=sentry_dsn, traces_sample_rate=0)


def setup_logging(log_level: int) -> None:
    """Initialize a simple logger for all commands."""
    root = logging.getLogger()
    root.setLevel(log_level)
    # Repeated calls (e.g. several CLI invocations in one test process) replace
    # our handler, so it always writes to the current stderr.
    for existing in list(root.handlers):
        if getattr(existing, "_lmcot", False):
            root.removeHandler(existing)

    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(
        logging.Formatter("[%(asctime)s] %(levelname)s in %(module)s: %(message)s")
    )
    handler._lmcot = True
    root.addHandler(handler)


def setup(config_env: str):
    """Load the named config, then start logging and monitoring for a run."""

    # We store all env variables in a `.env` file so that it's easier to manage
    # different configurations.
    load_dotenv(".env")
    config_spec = config.load_config_object(config_env)

    # Monitoring is for production batch runs only.
    if config_env == config.PRODUCTION and config_spec.SENTRY_DSN:
        _initialize_sentry(config_spec.SENTRY_DSN)

    assert config_env == config_spec.LMC_ENVIRONMENT
    setup_logging(config_spec.LOG_LEVEL)
    return config_spec
