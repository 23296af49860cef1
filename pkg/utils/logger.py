import logging
import os
from pathlib import Path

LOG_DIR = Path(os.environ.get("GSC_LOG_DIR", "logs"))
LOG_DIR.mkdir(parents=True, exist_ok=True)

logger = logging.getLogger("gsc")

if not logger.handlers:
    logger.setLevel(os.environ.get("GSC_LOG_LEVEL", "INFO").upper())
    _formato = logging.Formatter("%(asctime)s - %(levelname)s - %(message)s")
    for _handler in (logging.FileHandler(LOG_DIR / "gsc.log"), logging.StreamHandler()):
        _handler.setFormatter(_formato)
        logger.addHandler(_handler)
    logger.propagate = False


def log_info(mensaje):
    logger.info(mensaje)

def log_error(mensaje):
    logger.error(mensaje)

def log_warning(mensaje):
    logger.warning(mensaje)

def log_debug(mensaje):
    logger.debug(mensaje)
