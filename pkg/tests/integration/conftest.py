"""Test configuration and fixtures."""

import pytest
from fastapi.testclient import TestClient

from fptpwl.main import app


@pytest.fixture
def client():
    """Create test client for FastAPI app."""
    return TestClient(app)


@pytest.fixture
def flat_model():
    """Constant threshold at 1 under unit drift and sigma2 = 0.2."""
    return {"mu": 1.0, "sigma2": 0.2, "b0": 1.0, "eps": 0.0, "lambda": 1.0}
