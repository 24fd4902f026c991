"""Test configuration and fixtures."""

import numpy as np
import pytest

from fptpwl.schemas.process import CurvedThreshold, PiecewiseLinearThreshold, WienerParams
from fptpwl.schemas.simulation import FptSample
from fptpwl.services.thresholds import fit_window


@pytest.fixture
def wiener():
    """Reference process: unit drift, sigma2 = 0.2, started at the origin."""
    return WienerParams(mu=1.0, sigma2=0.2)


@pytest.fixture
def curved():
    """Curved threshold 1 + exp(-t)."""
    return CurvedThreshold(b0=1.0, eps=1.0, lam=1.0)


@pytest.fixture
def flat():
    """Constant threshold at 1."""
    return CurvedThreshold(b0=1.0, eps=0.0, lam=1.0)


@pytest.fixture
def window(wiener, curved):
    return fit_window(wiener, curved)


@pytest.fixture
def two_piece():
    """Two-piece threshold with a steep first piece and a shallow second one."""
    return PiecewiseLinearThreshold(alpha1=2.0, beta1=-1.0, beta2=-0.2, t1=1.0)


@pytest.fixture
def ig_sample():
    """2000 draws of the crossing time of the level 1 under (mu=1, sigma2=0.2), i.e. IG(1, 5)."""
    rng = np.random.default_rng(12345)
    return FptSample(times=rng.wald(1.0, 5.0, size=2000).tolist())
