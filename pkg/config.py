"""
Configuration settings for the application.

Values are read from the process environment (optionally populated from a
``.env`` file) and fall back to the defaults below.
"""

import os
from pathlib import Path

from dotenv import load_dotenv

load_dotenv()

# Application Settings
VERSION = "1.0.0"

BASE_DIR = Path(__file__).resolve().parent


def _env_bool(name: str, default: bool) -> bool:
    raw = os.getenv(name)
    if raw is None:
        return default
    return raw.strip().lower() in ("1", "true", "yes", "on")


# Logging Configuration
LOGGING = {
    "level": os.getenv("STACKELGUIDE_LOG_LEVEL", "INFO"),
    "format": "%(asctime)s - %(name)s - %(levelname)s - %(message)s",
    "file": os.getenv("STACKELGUIDE_LOG_FILE", "stackelguide.log"),
    "dir": os.getenv("STACKELGUIDE_LOG_DIR", "logs"),
    "console": _env_bool("STACKELGUIDE_LOG_CONSOLE", True),
}

# Planner Configuration
PLANNER = {
    "reachability_cap": int(os.getenv("STACKELGUIDE_REACHABILITY_CAP", "2000000")),
    "solver": os.getenv("STACKELGUIDE_SOLVER", "auto"),
}

# Scenario defaults applied when a scenario file leaves a field out
SCENARIO_DEFAULTS = {
    "horizon": 2,
    "discount": 1.0,
    "max_rounds": 20,
    "seed": 0,
    "planner": "sgcm",
    "p_fail": 0.1,
}

# Cost/reward defaults
COSTS = {
    "base_cost_axis": 1.0,
    "base_cost_diagonal": 1.0,
    "crowding_threshold": 2,
    "reward_weight": 2.0,
    "reward_offset": 50.0,
    "distance_metric": "manhattan",
}

# Output Configuration
OUTPUT = {
    "dir": os.getenv("STACKELGUIDE_OUTPUT_DIR", "out"),
}

SUITE_DIR = BASE_DIR / "scenarios"
