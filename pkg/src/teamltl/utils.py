import os
import re
from typing import Iterator, Optional

from dotenv import dotenv_values

from teamltl.datatypes import ModelFormatError, ResourceLimits
from teamltl.package_config import ENV_FILE_PATH, LIMITS_ENV_NAME

IDENT_PTRN = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
STEP_PTRN = re.compile(r"\{(?P<props>[^{}]*)\}")
STEPS_PTRN = re.compile(r"(?:\s*\{[^{}]*\})*\s*")

# Team files
TRACE_DECL_PTRN = re.compile(
    r"trace\s+(?P<name>[A-Za-z_]\w*)\s*=\s*(?P<prefix>[^/]*?)\s*/\s*(?P<loop>.*)"
)
MULTI_DECL_PTRN = re.compile(r"multi\s+(?P<name>[A-Za-z_]\w*)\s+x(?P<count>\d+)")

# Kripke files
STATES_PTRN = re.compile(r"states:\s*(?P<states>.*)")
INIT_PTRN = re.compile(r"init:\s*(?P<state>\S+)")
LABEL_PTRN = re.compile(r"label\s+(?P<state>\S+)\s+(?P<step>\{[^{}]*\})")
EDGE_PTRN = re.compile(r"edge\s+(?P<source>\S+)\s+(?P<target>\S+)")


def get_env_value(key: str) -> Optional[str]:
    """Read a specific value from the .env.teamltl file"""
    env_data = dotenv_values(ENV_FILE_PATH)
    return env_data.get(key)


def load_limits() -> ResourceLimits:
    """Resource limits: defaults, then the env file, then the environment."""
    limits = ResourceLimits()
    for spec in (get_env_value(LIMITS_ENV_NAME), os.getenv(LIMITS_ENV_NAME)):
        if spec:
            limits = ResourceLimits.from_string(spec, base=limits)
    return limits


def iter_content_lines(text: str) -> Iterator[tuple[int, str]]:
    """Yield (1-based line number, stripped line) skipping blanks and `#` comments."""
    for line_no, line in enumerate(text.splitlines(), 1):
        content = line.split("#", 1)[0].strip()
        if content:
            yield line_no, content


def parse_step(text: str, line_no: Optional[int] = None) -> frozenset[str]:
    """Parse a proposition set such as `{p, q}` or `{}`."""
    step_match = STEP_PTRN.fullmatch(text.strip())
    if step_match is None:
        raise ModelFormatError(f"invalid proposition set '{text}'", line_no)
    names = [name.strip() for name in step_match.group("props").split(",")]
    names = [name for name in names if name]
    for name in names:
        if not IDENT_PTRN.fullmatch(name):
            raise ModelFormatError(f"invalid proposition name '{name}'", line_no)
    return frozenset(names)


def parse_steps(text: str, line_no: Optional[int] = None) -> tuple[frozenset[str], ...]:
    """Parse a whitespace separated sequence of proposition sets."""
    if not STEPS_PTRN.fullmatch(text):
        raise ModelFormatError(f"invalid step sequence '{text.strip()}'", line_no)
    return tuple(
        parse_step(step_match.group(0), line_no) for step_match in STEP_PTRN.finditer(text)
    )


def render_step(letter: frozenset[str]) -> str:
    return "{" + ",".join(sorted(letter)) + "}"
