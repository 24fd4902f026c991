"""Threshold evaluation and the fit window."""

import logging
import math
from typing import Optional, Union

import numpy as np
from scipy.special import ndtri

from fptpwl.core.config import settings
from fptpwl.core.exceptions import BracketingError, DomainError, InvalidParameterError
from fptpwl.schemas.numerics import Bracket
from fptpwl.schemas.process import (
    CurvedThreshold,
    FitWindow,
    PiecewiseLinearThreshold,
    WienerParams,
)
from fptpwl.utils.numerics import ArrayLike, find_root, ig_quantile

logger = logging.getLogger(__name__)


def _times(t: ArrayLike, t0: float) -> np.ndarray:
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < t0):
        raise DomainError(f"threshold evaluated before its start time t0={t0}")
    return t_arr


def _out(values: np.ndarray, like: ArrayLike) -> Union[float, np.ndarray]:
    return float(values) if np.ndim(like) == 0 else values


def check_pairing(w: WienerParams, th: CurvedThreshold) -> None:
    """Check that the process starts strictly below the threshold at a common t0."""
    if th.t0 != w.t0:
        raise InvalidParameterError(f"threshold starts at t0={th.t0}, process at t0={w.t0}")
    if not th.b0 + th.eps > w.x0:
        raise DomainError(f"x0={w.x0} is not below the initial threshold level {th.b0 + th.eps}")


def eval_curved(th: CurvedThreshold, t: ArrayLike) -> Union[float, np.ndarray]:
    """b0 + eps * exp(-lambda (t - t0)), vectorized over t."""
    t_arr = _times(t, th.t0)
    return _out(th.b0 + th.eps * np.exp(-th.lam * (t_arr - th.t0)), t)


def curved_slope(th: CurvedThreshold, t: ArrayLike) -> Union[float, np.ndarray]:
    """Derivative b'(t) = -lambda * eps * exp(-lambda (t - t0))."""
    t_arr = _times(t, th.t0)
    return _out(-th.lam * th.eps * np.exp(-th.lam * (t_arr - th.t0)), t)


def eval_piecewise(thr: PiecewiseLinearThreshold, t: ArrayLike) -> Union[float, np.ndarray]:
    """Two-piece linear threshold, continuous at t1."""
    t_arr = _times(t, thr.t0)
    first = thr.alpha1 + thr.beta1 * (t_arr - thr.t0)
    second = thr.alpha2 + thr.beta2 * (t_arr - thr.t1)
    return _out(np.where(t_arr <= thr.t1, first, second), t)


def small_lambda_line(th: CurvedThreshold) -> PiecewiseLinearThreshold:
    """First-order expansion b0 + eps - lambda eps (t - t0) as a single line."""
    slope = -th.lam * th.eps
    return PiecewiseLinearThreshold(
        alpha1=th.b0 + th.eps, beta1=slope, beta2=slope, t1=th.t0 + 1.0, t0=th.t0
    )


def fit_window(
    w: WienerParams,
    th: CurvedThreshold,
    lower_prob: Optional[float] = None,
    upper_prob: Optional[float] = None,
    time_cap: Optional[float] = None,
) -> FitWindow:
    """Window [tau0, tau_star] carrying most of the FPT mass.

    tau0 is the ``lower_prob`` quantile of the FPT through the constant
    level b0, which crosses no later than b. tau_star is the time at which
    the free process lies above b(tau_star) with probability ``upper_prob``.
    """
    lower_prob = settings.WINDOW_LOWER_PROB if lower_prob is None else lower_prob
    upper_prob = settings.WINDOW_UPPER_PROB if upper_prob is None else upper_prob
    time_cap = settings.TIME_CAP if time_cap is None else time_cap
    if not 0.0 < lower_prob < upper_prob < 1.0:
        raise InvalidParameterError(
            f"window probabilities must satisfy 0 < lower < upper < 1, got {lower_prob}, {upper_prob}"
        )
    check_pairing(w, th)
    gap = th.b0 - w.x0
    if gap <= 0:
        raise DomainError(f"asymptotic level b0={th.b0} must lie above x0={w.x0}")

    tau0 = w.t0 + ig_quantile(lower_prob, gap / w.mu, gap * gap / w.sigma2)

    z = float(ndtri(1.0 - upper_prob))
    sigma = w.sigma

    def tail_gap(s: float) -> float:
        # mean distance to b at elapsed time s, minus the Gaussian quantile offset
        level = th.b0 + th.eps * math.exp(-th.lam * s)
        return level - w.x0 - w.mu * s - z * sigma * math.sqrt(s)

    s_lo = tau0 - w.t0
    s_hi = 2.0 * s_lo
    while tail_gap(s_hi) > 0.0:
        s_lo, s_hi = s_hi, 2.0 * s_hi
        if s_hi > time_cap:
            raise BracketingError(f"tau_star could not be bracketed below the time cap {time_cap}")
    s_star = find_root(tail_gap, Bracket(lo=s_lo, hi=s_hi))

    window = FitWindow(tau0=tau0, tau_star=w.t0 + s_star, t0=w.t0)
    logger.info(f"Fit window [{window.tau0:.6g}, {window.tau_star:.6g}] for {th.model_dump()}")
    return window
