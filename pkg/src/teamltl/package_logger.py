import logging

LOG_LEVEL = "INFO"
logger = logging.getLogger("teamltl")
logger.setLevel(LOG_LEVEL)

# lark logs grammar construction at DEBUG
logging.getLogger("lark").setLevel(logging.WARNING)


def set_verbosity(verbose: bool) -> None:
    logger.setLevel(logging.DEBUG if verbose else LOG_LEVEL)
