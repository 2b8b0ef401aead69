import os
from pathlib import Path


def find_env_file():
    """Find the .env.teamltl file: an explicit override first, then the project root."""
    if override := os.getenv("TEAMLTL_ENV_FILE"):
        return Path(override)
    return PROJECT_ROOT / ".env.teamltl"


_current_dir = Path(__file__).parent
PROJECT_ROOT = (_current_dir / "../../").resolve()

ENV_FILE_PATH = find_env_file()
LIMITS_ENV_NAME = "TEAMLTL_LIMITS"

# Resource guard defaults, overridable as e.g. TEAMLTL_LIMITS="traces=6,pos=8,depth=10"
DEFAULT_MAX_TRACES = 6
DEFAULT_MAX_POSITIONS = 8
DEFAULT_MAX_DEPTH = 10
DEFAULT_MAX_CONFIGURATIONS = 4096

DEFAULT_AUDIT_BOUND = 1
REPORT_SCHEMA_VERSION = 1

# CLI exit codes
EXIT_HOLDS = 0
EXIT_FAILS = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3

# Hard ceiling on enumeration steps per evaluation, independent of TEAMLTL_LIMITS
MAX_ENUMERATION = 1 << 20
