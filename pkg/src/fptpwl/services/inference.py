"""Estimation of (mu, sigma2) from first-passage times, and error metrics."""

import logging
import math
from typing import Callable, Optional, Sequence, Union

import numpy as np

from fptpwl.core.config import settings
from fptpwl.core.exceptions import (
    DegenerateInputError,
    DomainError,
    FptError,
    InsufficientDataError,
    InvalidParameterError,
)
from fptpwl.schemas.fit import FitMethod
from fptpwl.schemas.fpt import FptMoments
from fptpwl.schemas.inference import EstimateReport, ErrorReport, EstimatorMethod, PhiEstimate
from fptpwl.schemas.process import CurvedThreshold, PiecewiseLinearThreshold, WienerParams
from fptpwl.schemas.simulation import FptSample
from fptpwl.services.fpt_law import fpt_moments, piecewise_fpt_logpdf, small_eps_mean, small_eps_var
from fptpwl.services.simulator import empirical_cdf, empirical_stats
from fptpwl.services.threshold_fit import fit_threshold
from fptpwl.services.thresholds import fit_window
from fptpwl.utils.numerics import ArrayLike, SimplexResult, simplex_search

logger = logging.getLogger(__name__)

LOG_DENSITY_FLOOR = -1e10
SMALL_EPS_LIMIT = 0.2
RIAE_GRID = 4096
RIAE_TAIL = 1e-6

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(8)


def log_likelihood(sample: FptSample, w: WienerParams, thr: PiecewiseLinearThreshold) -> float:
    """Sum of log densities of the sample; vanishing densities count LOG_DENSITY_FLOOR each."""
    times = np.asarray(sample.times, dtype=float)
    if np.any(times <= w.t0):
        raise DomainError(f"first-passage times must lie after t0={w.t0}")
    logs = np.asarray(piecewise_fpt_logpdf(w, thr, times))
    logs = np.where(np.isfinite(logs), logs, LOG_DENSITY_FLOOR)
    return float(np.sum(logs))


def _ig_inversion(mean: float, variance: float, gap: float) -> PhiEstimate:
    """Moment inversion for a constant level at distance ``gap``: mean = gap/mu, var = gap sigma2/mu^3."""
    mu = gap / mean
    return PhiEstimate(mu_hat=mu, sigma2_hat=variance * mu ** 3 / gap, method="me", converged=True)


def _sample_moments(sample: FptSample, t0: float) -> FptMoments:
    moments, _ = empirical_stats(sample, t0)
    if moments.variance <= 0:
        raise DegenerateInputError("sample variance is zero")
    return moments


def _wiener(theta: np.ndarray, x0: float, t0: float) -> Optional[WienerParams]:
    mu, sigma2 = (float(v) for v in theta)
    if not (mu > 0 and sigma2 > 0 and math.isfinite(mu) and math.isfinite(sigma2)):
        return None
    return WienerParams(mu=mu, sigma2=sigma2, x0=x0, t0=t0)


def _estimate(search: SimplexResult, method: EstimatorMethod) -> PhiEstimate:
    if not search.converged:
        logger.warning(f"{method} estimator did not converge (objective {search.fun:.6g})")
    return PhiEstimate(
        mu_hat=float(search.x[0]),
        sigma2_hat=float(search.x[1]),
        method=method,
        objective_at_optimum=search.fun,
        converged=search.converged,
    )


def _default_init(sample: FptSample, thr: PiecewiseLinearThreshold, x0: float) -> PhiEstimate:
    moments = _sample_moments(sample, thr.t0)
    return _ig_inversion(moments.mean, moments.variance, thr.alpha1 - x0)


def mle(
    sample: FptSample,
    thr: PiecewiseLinearThreshold,
    init: Optional[PhiEstimate] = None,
    x0: float = 0.0,
) -> PhiEstimate:
    """Maximize the likelihood under ``thr`` over (mu, sigma2)."""
    if not sample.times:
        raise InsufficientDataError("maximum likelihood needs at least one observation")
    if sample.censored_count:
        logger.warning(f"Ignoring {sample.censored_count} censored observations in the likelihood")
    init = init or _default_init(sample, thr, x0)
    # dominates any sum of floored log densities
    penalty = settings.PENALTY * (len(sample.times) + 1)

    def objective(theta: np.ndarray) -> float:
        w = _wiener(theta, x0, thr.t0)
        if w is None:
            return penalty
        return -log_likelihood(sample, w, thr)

    search = simplex_search(objective, [init.mu_hat, init.sigma2_hat])
    return _estimate(search, "mle")


def match_moments(
    mean: float,
    variance: float,
    thr: PiecewiseLinearThreshold,
    init: PhiEstimate,
    x0: float = 0.0,
) -> PhiEstimate:
    """(mu, sigma2) whose FPT mean and variance under ``thr`` match the targets.

    Least squares on relative residuals, so the search degrades gracefully
    when no exact solution exists.
    """
    if not (mean > 0 and variance > 0):
        raise InvalidParameterError(f"target moments must be positive, got {mean}, {variance}")
    penalty = settings.PENALTY

    def objective(theta: np.ndarray) -> float:
        w = _wiener(theta, x0, thr.t0)
        if w is None or not w.mu > thr.beta2:
            return penalty
        try:
            model = fpt_moments(w, thr)
        except FptError:
            return penalty
        return ((model.mean - mean) / mean) ** 2 + ((model.variance - variance) / variance) ** 2

    search = simplex_search(objective, [init.mu_hat, init.sigma2_hat])
    return _estimate(search, "me")


def moment_estimate(
    sample: FptSample,
    thr: PiecewiseLinearThreshold,
    init: Optional[PhiEstimate] = None,
    x0: float = 0.0,
) -> PhiEstimate:
    """Moment estimator: sample mean and unbiased variance matched under ``thr``."""
    moments = _sample_moments(sample, thr.t0)
    init = init or _ig_inversion(moments.mean, moments.variance, thr.alpha1 - x0)
    return match_moments(moments.mean, moments.variance, thr, init, x0)


def small_eps_moment_estimate(
    sample: FptSample,
    th: CurvedThreshold,
    init: Optional[PhiEstimate] = None,
    x0: float = 0.0,
    theta0: Optional[float] = None,
) -> PhiEstimate:
    """Moment estimator built on the small-amplitude mean and variance formulas."""
    moments = _sample_moments(sample, th.t0)
    mean, variance = moments.mean, moments.variance
    init = init or _ig_inversion(mean, variance, th.b0 - x0)
    penalty = settings.PENALTY

    def objective(theta: np.ndarray) -> float:
        w = _wiener(theta, x0, th.t0)
        if w is None:
            return penalty
        model_mean = small_eps_mean(w, th)
        model_var = small_eps_var(w, th, theta0)
        return ((model_mean - mean) / mean) ** 2 + ((model_var - variance) / variance) ** 2

    search = simplex_search(objective, [init.mu_hat, init.sigma2_hat])
    return _estimate(search, "me_eps")


def initial_estimate(sample: FptSample, th: CurvedThreshold, x0: float = 0.0) -> PhiEstimate:
    """Starting point for the likelihood search.

    Small-amplitude moment estimate when eps <= 0.2, otherwise moment
    inversion of the constant level b0 + eps / 2.
    """
    moments = _sample_moments(sample, th.t0)
    if th.eps <= SMALL_EPS_LIMIT:
        estimate = small_eps_moment_estimate(sample, th, x0=x0)
        if estimate.converged:
            return estimate
        logger.warning("Falling back to constant-level moment inversion for the initial estimate")
    return _ig_inversion(moments.mean, moments.variance, th.b0 + 0.5 * th.eps - x0)


def estimate_phi(
    sample: FptSample,
    th: CurvedThreshold,
    method: EstimatorMethod = "mle",
    x0: float = 0.0,
    passes: int = 2,
    fit_method: FitMethod = "free",
    lower_prob: Optional[float] = None,
    upper_prob: Optional[float] = None,
) -> PhiEstimate:
    """Full pipeline: initial estimate, then ``passes`` rounds of refit-and-estimate.

    The fit window, and hence the fitted threshold, depends on (mu, sigma2);
    every pass refits it at the current estimate. ``lower_prob``/``upper_prob``
    default to the configured window probabilities.
    """
    if passes < 1:
        raise InvalidParameterError("estimate_phi needs at least one pass")
    phi = initial_estimate(sample, th, x0)
    if method == "me_eps":
        return small_eps_moment_estimate(sample, th, phi, x0)

    for k in range(passes):
        w = WienerParams(mu=phi.mu_hat, sigma2=phi.sigma2_hat, x0=x0, t0=th.t0)
        thr = fit_threshold(th, fit_window(w, th, lower_prob, upper_prob), fit_method).threshold
        phi = mle(sample, thr, phi, x0) if method == "mle" else moment_estimate(sample, thr, phi, x0)
        logger.info(f"Pass {k + 1}/{passes} ({method}): mu={phi.mu_hat:.6g}, sigma2={phi.sigma2_hat:.6g}")
    return phi


def r_iae(
    model_cdf: Callable[[ArrayLike], Union[float, np.ndarray]],
    sample: FptSample,
    t0: float = 0.0,
) -> float:
    """Integrated absolute distance between a model cdf and the empirical cdf, over the sample mean.

    ``model_cdf`` must accept arrays. The range runs from t0 past the largest
    observation until the model cdf exceeds 1 - 1e-6; every sample jump and a
    uniform grid are breakpoints, with 8-point Gauss-Legendre in between.
    """
    if len(sample.times) < 2:
        raise InsufficientDataError(f"need at least 2 uncensored times, got {len(sample.times)}")
    times = np.asarray(sample.times, dtype=float)
    mean = float(np.mean(times - t0))

    t_end = float(times.max())
    level = float(model_cdf(t_end))
    for _ in range(60):
        if level > 1.0 - RIAE_TAIL:
            break
        wider = t0 + 2.0 * (t_end - t0)
        wider_level = float(model_cdf(wider))
        if wider_level <= level:
            # defective law or tabulated cdf: no more mass to cover
            logger.warning(f"Model cdf levels off at {level:.8f} by t={t_end:.6g}")
            break
        t_end, level = wider, wider_level

    edges = np.union1d(np.linspace(t0, t_end, RIAE_GRID + 1), times[times < t_end])
    lo, hi = edges[:-1], edges[1:]
    half = 0.5 * (hi - lo)
    nodes = (lo + half)[:, None] + half[:, None] * _GL_NODES[None, :]
    emp = empirical_cdf(sample)
    gap = np.abs(np.asarray(model_cdf(nodes.ravel())) - np.asarray(emp(nodes.ravel()))).reshape(nodes.shape)
    area = float(np.sum(half * (gap @ _GL_WEIGHTS)))
    return area / mean


def relative_errors(estimates: Sequence[PhiEstimate], truth: WienerParams) -> ErrorReport:
    """Average relative error and squared relative error of each parameter."""
    if not estimates:
        raise InvalidParameterError("relative errors need at least one estimate")
    e_mu = np.array([(e.mu_hat - truth.mu) / truth.mu for e in estimates])
    e_s2 = np.array([(e.sigma2_hat - truth.sigma2) / truth.sigma2 for e in estimates])
    return ErrorReport(
        r_me_mu=float(np.mean(e_mu)),
        r_mse_mu=float(np.mean(e_mu ** 2)),
        r_me_sigma2=float(np.mean(e_s2)),
        r_mse_sigma2=float(np.mean(e_s2 ** 2)),
    )


def build_report(estimate: PhiEstimate, truth: Optional[WienerParams] = None) -> EstimateReport:
    """Estimate report, with errors when the truth is supplied."""
    errors = relative_errors([estimate], truth) if truth is not None else None
    return EstimateReport(estimate=estimate, errors=errors)
