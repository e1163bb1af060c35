import os
import sys

from dotenv import load_dotenv
from loguru import logger

load_dotenv()

class Config:
    # Runtime
    WORKERS = int(os.getenv("BIVOU_WORKERS", 1))
    SEED = int(os.getenv("BIVOU_SEED", 42))
    RESULTS_DIR = os.getenv("BIVOU_RESULTS_DIR", "results")

    # Logging
    LOG_LEVEL = os.getenv("LOG_LEVEL", "INFO")
    LOG_FILE = os.getenv("BIVOU_LOG_FILE")

    # Default estimation box J
    THETA_BOUNDS = (0.1, 100.0)
    SIGMA_SQ_BOUNDS = (1e-4, 1e4)
    RHO_BOUNDS = (-0.999, 0.999)

    # Numerical guards
    EQUIVALENCE_TOL = 1e-9
    DENSE_MAX_N = 4096
    MIN_GRID_GAP = 1e-12
    RHO_CLIP = 1e-9
    MAX_REPLICATIONS = 100_000
    MAX_FAILURE_RATE = 0.05

config = Config()


def configure_logging(level: str = None) -> None:
    """Replace loguru's default sink with one honouring LOG_LEVEL / BIVOU_LOG_FILE."""
    logger.remove()
    logger.add(sys.stderr, level=level or config.LOG_LEVEL)
    if config.LOG_FILE:
        logger.add(
            config.LOG_FILE,
            rotation="100 MB",
            retention="7 days",
            level="DEBUG",
        )
