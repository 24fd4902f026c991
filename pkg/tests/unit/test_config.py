"""Tests for settings, error classes and JSON helpers."""

import math

import numpy as np
import pytest

from fptpwl.core.config import settings
from fptpwl.core.exceptions import (
    BracketingError,
    ConvergenceError,
    DomainError,
    FptError,
    InvalidParameterError,
    NoSignChangeError,
)
from fptpwl.utils.helpers import to_jsonable

pytestmark = pytest.mark.unit


def test_default_settings():
    assert settings.APP_NAME == "fpt-pwl"
    assert settings.DEFAULT_DT > 0
    assert settings.WORKERS >= 1
    assert settings.PENALTY == pytest.approx(1e10)
    assert 0 < settings.WINDOW_LOWER_PROB < settings.WINDOW_UPPER_PROB < 1


def test_config_summary():
    summary = settings.get_config_summary()
    assert summary["app"]["name"] == settings.APP_NAME
    assert summary["window"]["ordered"] is True
    assert summary["simulation"]["default_dt"] == settings.DEFAULT_DT
    assert "env_paths_searched" in summary


def test_exception_families():
    assert issubclass(DomainError, InvalidParameterError)
    assert issubclass(InvalidParameterError, ValueError)
    assert issubclass(NoSignChangeError, ConvergenceError)
    assert issubclass(BracketingError, RuntimeError)
    assert issubclass(ConvergenceError, FptError)


def test_to_jsonable():
    payload = {"a": np.float64(1.5), "b": np.arange(2), "c": (math.inf, 2), "d": "x"}
    assert to_jsonable(payload) == {"a": 1.5, "b": [0, 1], "c": [None, 2], "d": "x"}
