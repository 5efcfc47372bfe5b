import logging
import logging.handlers
import os

import config


def setup_logging(
    log_level=None,
    log_file=None,
    log_dir=None,
    console_output=None,
):
    """
    Configure logging with both console and file handlers.

    Handlers are attached to the root logger so every module logger obtained
    through ``logging.getLogger(__name__)`` shares them.

    Args:
        log_level: Logging level or level name (default: config.LOGGING["level"])
        log_file: Name of the log file (default: config.LOGGING["file"])
        log_dir: Directory for log files (default: config.LOGGING["dir"])
        console_output: Whether to output to stderr (default: config.LOGGING["console"])

    Returns:
        logging.Logger: Configured root logger
    """
    log_level = config.LOGGING["level"] if log_level is None else log_level
    if isinstance(log_level, str):
        log_level = logging.getLevelName(log_level.upper())
    log_file = log_file or config.LOGGING["file"]
    log_dir = log_dir or config.LOGGING["dir"]
    console_output = config.LOGGING["console"] if console_output is None else console_output

    os.makedirs(log_dir, exist_ok=True)

    logger = logging.getLogger()
    logger.setLevel(log_level)

    # Remove existing handlers to avoid duplicates
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()

    formatter = logging.Formatter(
        fmt=config.LOGGING["format"],
        datefmt="%Y-%m-%d %H:%M:%S",
    )

    file_handler = logging.handlers.RotatingFileHandler(
        os.path.join(log_dir, log_file),
        maxBytes=10 * 1024 * 1024,  # 10MB
        backupCount=5,
    )
    file_handler.setLevel(log_level)
    file_handler.setFormatter(formatter)
    logger.addHandler(file_handler)

    if console_output:
        console_handler = logging.StreamHandler()
        console_handler.setLevel(log_level)
        console_handler.setFormatter(formatter)
        logger.addHandler(console_handler)

    return logger
