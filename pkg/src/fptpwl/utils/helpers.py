"""Utility functions for fptpwl."""

import logging
import math
from typing import Any

import numpy as np


def setup_logging(level: str = "INFO") -> None:
    """Setup application logging configuration."""
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        datefmt="%Y-%m-%d %H:%M:%S"
    )


def to_jsonable(obj: Any) -> Any:
    """Convert numpy scalars/arrays and non-finite floats for JSON serialization."""
    if isinstance(obj, dict):
        return {key: to_jsonable(value) for key, value in obj.items()}
    elif isinstance(obj, (list, tuple)):
        return [to_jsonable(item) for item in obj]
    elif isinstance(obj, np.ndarray):
        return [to_jsonable(item) for item in obj.tolist()]
    elif isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    elif isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj
