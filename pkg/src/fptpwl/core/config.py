"""Core configuration settings for the FPT approximation toolkit."""

import logging
import os
from pathlib import Path

from dotenv import load_dotenv

logger = logging.getLogger(__name__)

# Project root (src/fptpwl/core/config.py -> project root)
PROJECT_ROOT = Path(__file__).parent.parent.parent.parent

# Try multiple .env file locations
env_paths = [
    PROJECT_ROOT / ".env",                    # Project root
    PROJECT_ROOT / "config" / ".env",         # Config folder
    Path.cwd() / ".env",                      # Current working directory
]

# Load environment variables from the first .env file found
env_loaded = False
for env_path in env_paths:
    if env_path.exists():
        load_dotenv(env_path)
        logger.debug(f"Environment variables loaded from: {env_path}")
        env_loaded = True
        break


class Settings:
    """Application settings configuration."""

    # App metadata
    APP_NAME: str = "fpt-pwl"
    VERSION: str = "1.0.0"
    DESCRIPTION: str = (
        "First-passage times of drifted Brownian motion through an exponentially "
        "decaying threshold via two-piece linear approximations"
    )

    # Logging
    LOG_LEVEL: str = os.getenv("FPT_LOG_LEVEL", "INFO")

    # Parallelism (grid cells and simulation blocks)
    WORKERS: int = int(os.getenv("FPT_WORKERS", "1"))

    # Simulation defaults
    DEFAULT_DT: float = float(os.getenv("FPT_DEFAULT_DT", "0.001"))
    CENSOR_FACTOR: float = float(os.getenv("FPT_CENSOR_FACTOR", "20"))

    # Fit window probabilities and search cap
    WINDOW_LOWER_PROB: float = float(os.getenv("FPT_WINDOW_LOWER_PROB", "0.005"))
    WINDOW_UPPER_PROB: float = float(os.getenv("FPT_WINDOW_UPPER_PROB", "0.995"))
    TIME_CAP: float = float(os.getenv("FPT_TIME_CAP", "1e6"))

    # Value returned by objectives outside the feasible region
    PENALTY: float = float(os.getenv("FPT_PENALTY", "1e10"))

    # HTTP server
    HOST: str = os.getenv("HOST", "0.0.0.0")
    PORT: int = int(os.getenv("PORT", "8000"))
    MAX_API_PATHS: int = int(os.getenv("FPT_MAX_API_PATHS", "100000"))

    def validate_window_config(self) -> dict:
        """Validate the fit-window probabilities."""
        return {
            "lower_prob": self.WINDOW_LOWER_PROB,
            "upper_prob": self.WINDOW_UPPER_PROB,
            "ordered": 0.0 < self.WINDOW_LOWER_PROB < self.WINDOW_UPPER_PROB < 1.0,
            "time_cap": self.TIME_CAP,
        }

    def get_config_summary(self) -> dict:
        """Get a summary of all configuration settings (safe for logging)."""
        return {
            "app": {
                "name": self.APP_NAME,
                "version": self.VERSION,
                "host": self.HOST,
                "port": self.PORT,
            },
            "simulation": {
                "default_dt": self.DEFAULT_DT,
                "censor_factor": self.CENSOR_FACTOR,
                "workers": self.WORKERS,
                "max_api_paths": self.MAX_API_PATHS,
            },
            "window": self.validate_window_config(),
            "penalty": self.PENALTY,
            "log_level": self.LOG_LEVEL,
            "env_file_loaded": env_loaded,
            "env_paths_searched": [str(p) for p in env_paths],
        }


# Create a global settings instance
settings = Settings()

if __name__ == "__main__" or os.getenv("DEBUG_CONFIG"):
    import json
    print("=== Configuration Summary ===")
    print(json.dumps(settings.get_config_summary(), indent=2))
