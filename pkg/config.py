"""Configuration management for the trace reconstruction simulator."""
import os
from dotenv import load_dotenv
from pathlib import Path

load_dotenv()


class Config:
    """Application configuration."""

    # Experiments
    DEFAULT_TRIALS = int(os.getenv("TRACEREC_TRIALS", "1000"))
    DEFAULT_SEED = int(os.getenv("TRACEREC_SEED", "2021"))
    RETRY_LIMIT = int(os.getenv("TRACEREC_RETRY_LIMIT", "1000000"))
    WORKERS = int(os.getenv("TRACEREC_WORKERS", "1"))

    # Sampling: rejection is used while the exact acceptance rate stays above this
    MIN_REJECTION_ACCEPTANCE = float(os.getenv("TRACEREC_MIN_ACCEPTANCE", "0.01"))

    # Logging
    LOG_LEVEL = os.getenv("TRACEREC_LOG_LEVEL", "WARNING")

    # Storage
    RESULTS_DIR = Path(os.getenv("TRACEREC_RESULTS_DIR", "results"))

    @classmethod
    def ensure_directories(cls):
        """Create necessary directories."""
        cls.RESULTS_DIR.mkdir(parents=True, exist_ok=True)
