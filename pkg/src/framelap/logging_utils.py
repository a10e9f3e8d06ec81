import logging


class CustomFormatter(logging.Formatter):
    RED = "\033[0;31m"
    GREEN = "\033[0;32m"
    CYAN = "\033[0;36m"
    YELLOW = "\033[1;33m"
    LIGHT_RED = "\033[1;31m"
    reset = "\x1b[0m"
    message_format = "%(message)s"

    FORMATS = {
        logging.DEBUG: CYAN + "%(levelname)s" + reset + " - " + message_format,
        logging.INFO: GREEN + "%(levelname)s" + reset + " - " + message_format,
        logging.WARNING: YELLOW + "%(levelname)s" + reset + " - " + message_format,
        logging.ERROR: RED + "%(levelname)s" + reset + " - " + message_format,
        logging.CRITICAL: LIGHT_RED + "%(levelname)s" + reset + " - " + message_format,
    }

    def format(self, record: logging.LogRecord) -> str:
        formatter = logging.Formatter(self.FORMATS.get(record.levelno, "%(levelname)s - %(message)s"))
        return formatter.format(record)


def configure_logging(level: int = logging.INFO) -> logging.Logger:
    """Route all records through one coloured stream handler on the root logger."""
    logger = logging.getLogger()

    if logger.hasHandlers():
        logger.handlers.clear()

    handler = logging.StreamHandler()
    handler.setFormatter(CustomFormatter())

    logger.addHandler(handler)
    logger.setLevel(level)

    return logger
