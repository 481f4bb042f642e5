"""
config.py - Runtime settings and logging set-up.

Settings come from environment variables (optionally loaded from a ``.env``
file in the project root).  Command-line flags override them.

Environment Variables (set in .env file):
    - LIOS_LOG_LEVEL:        loguru level name, default INFO
    - LIOS_PLANNER_WEIGHT:   weight of the weighted-A* planner, default 2.0
    - LIOS_MAX_CANDIDATES:   containers considered by one LIOS policy, default 8
    - LIOS_WORLD_CONFIG:     path to the world catalog TOML file
    - LIOS_RESULTS_DB_URL:   SQLAlchemy URL of the results database
    - LIOS_MAX_REPLANS:      executive replanning guard, default 200
"""

import os
import sys
from pathlib import Path

from dotenv import load_dotenv
from loguru import logger

# Load environment variables from .env file
load_dotenv()

DEFAULT_WORLD_CONFIG = Path(__file__).resolve().parent / "resources" / "default_world.toml"


class Settings:
    """
    Runtime configuration read from the environment.

    Attributes:
        LOG_LEVEL (str): Minimum level written to stderr
        PLANNER_WEIGHT (float): ``w`` in ``f = g + w * h``
        MAX_CANDIDATES (int): LIOS subset size K
        WORLD_CONFIG (Path): Generator catalog used when no ``--config`` is given
        RESULTS_DB_URL (str): Where ``bench --db`` stores trial records
        MAX_REPLANS (int): Upper bound on plan/execute rounds per trial
    """

    DEFAULT_RESULTS_DB_URL = "sqlite:///results.db"

    def __init__(self):
        """Initialize settings from environment variables"""
        self.LOG_LEVEL = os.getenv("LIOS_LOG_LEVEL", "INFO").upper()
        self.PLANNER_WEIGHT = float(os.getenv("LIOS_PLANNER_WEIGHT", 2.0))
        self.MAX_CANDIDATES = int(os.getenv("LIOS_MAX_CANDIDATES", 8))
        self.WORLD_CONFIG = Path(os.getenv("LIOS_WORLD_CONFIG", str(DEFAULT_WORLD_CONFIG)))
        self.RESULTS_DB_URL = os.getenv("LIOS_RESULTS_DB_URL", self.DEFAULT_RESULTS_DB_URL)
        self.MAX_REPLANS = int(os.getenv("LIOS_MAX_REPLANS", 200))


def get_settings() -> Settings:
    """Return a fresh ``Settings`` snapshot of the current environment."""
    return Settings()


def configure_logging(level: str = "INFO") -> None:
    """
    Route loguru output to stderr at ``level``.

    Only entry points call this; library modules just ``from loguru import
    logger`` and log.
    """
    logger.remove()
    logger.add(
        sys.stderr,
        level=level,
        format="<green>{time:HH:mm:ss}</green> | <level>{level: <7}</level> | "
        "<cyan>{name}</cyan> - {message}",
    )
