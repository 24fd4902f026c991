"""FPT API routes."""

import logging
from typing import Tuple

from fastapi import APIRouter, HTTPException

from fptpwl.core.config import settings
from fptpwl.core.exceptions import ConvergenceError, InvalidParameterError
from fptpwl.schemas.api import (
    DensityRequest,
    DensityResponse,
    FitRequest,
    FitResponse,
    ModelRequest,
    MomentsResponse,
    SimulateRequest,
    SimulateResponse,
)
from fptpwl.schemas.fit import FitResult
from fptpwl.schemas.process import CurvedThreshold, FitWindow, WienerParams
from fptpwl.schemas.simulation import SimConfig
from fptpwl.services.fpt_law import (
    fpt_moments,
    piecewise_fpt_cdf,
    piecewise_fpt_pdf,
    small_eps_mean,
    small_eps_var,
)
from fptpwl.services.simulator import simulate_sample
from fptpwl.services.threshold_fit import fit_threshold
from fptpwl.services.thresholds import fit_window
from fptpwl.utils.io import sample_frame

logger = logging.getLogger(__name__)

router = APIRouter(
    prefix="/fpt",
    tags=["First-passage times"],
    responses={422: {"description": "Invalid parameters"}, 503: {"description": "Numerical failure"}},
)


def _objects(request: ModelRequest) -> Tuple[WienerParams, CurvedThreshold]:
    w = WienerParams(mu=request.mu, sigma2=request.sigma2, x0=request.x0, t0=request.t0)
    th = CurvedThreshold(b0=request.b0, eps=request.eps, lam=request.lam, t0=request.t0)
    return w, th


def _fit(request: FitRequest) -> Tuple[WienerParams, FitWindow, FitResult]:
    w, th = _objects(request)
    window = fit_window(w, th)
    return w, window, fit_threshold(th, window, request.method)


def _http_error(exc: Exception) -> HTTPException:
    if isinstance(exc, ConvergenceError):
        logger.error(f"Numerical failure: {exc}")
        return HTTPException(status_code=503, detail=f"Numerical failure: {exc}")
    return HTTPException(status_code=422, detail=str(exc))


@router.post("/fit", response_model=FitResponse)
def fit(request: FitRequest):
    """Fit a two-piece linear threshold to the curved one."""
    try:
        _, window, result = _fit(request)
    except (InvalidParameterError, ConvergenceError, ValueError) as exc:
        raise _http_error(exc)
    thr = result.threshold
    return FitResponse(
        alpha1=thr.alpha1,
        beta1=thr.beta1,
        beta2=thr.beta2,
        t1=thr.t1,
        alpha2=thr.alpha2,
        tau0=window.tau0,
        tau_star=window.tau_star,
        objective=result.objective,
        method=result.method,
    )


@router.post("/moments", response_model=MomentsResponse)
def moments(request: FitRequest):
    """Mean, variance and CV of the FPT under the fitted threshold."""
    try:
        w, _, result = _fit(request)
        stats = fpt_moments(w, result.threshold)
        _, th = _objects(request)
        return MomentsResponse(
            mean=stats.mean,
            variance=stats.variance,
            cv=stats.cv,
            total_mass=stats.total_mass,
            small_eps_mean=small_eps_mean(w, th),
            small_eps_var=small_eps_var(w, th),
        )
    except (InvalidParameterError, ConvergenceError, ValueError) as exc:
        raise _http_error(exc)


@router.post("/density", response_model=DensityResponse)
def density(request: DensityRequest):
    """Pdf and cdf of the FPT under the fitted threshold on a time grid."""
    if not request.t_min < request.t_max:
        raise HTTPException(status_code=422, detail="t_min must be smaller than t_max")
    try:
        w, _, result = _fit(request)
        step = (request.t_max - request.t_min) / (request.t_steps - 1)
        t = [request.t_min + k * step for k in range(request.t_steps)]
        return DensityResponse(
            t=t,
            pdf=list(piecewise_fpt_pdf(w, result.threshold, t)),
            cdf=list(piecewise_fpt_cdf(w, result.threshold, t)),
        )
    except (InvalidParameterError, ConvergenceError, ValueError) as exc:
        raise _http_error(exc)


@router.post("/simulate", response_model=SimulateResponse)
def simulate(request: SimulateRequest):
    """Simulate first-passage times to the curved threshold."""
    if request.n > settings.MAX_API_PATHS:
        raise HTTPException(
            status_code=422, detail=f"n={request.n} exceeds the limit of {settings.MAX_API_PATHS} paths"
        )
    try:
        w, th = _objects(request)
        cfg = SimConfig(dt=request.dt, n_paths=request.n, seed=request.seed, t_max=request.t_max)
        sample = simulate_sample(w, th, cfg, workers=1)
    except (InvalidParameterError, ConvergenceError, ValueError) as exc:
        raise _http_error(exc)
    frame = sample_frame(sample)
    fpt = [None if value != value else float(value) for value in frame["fpt"]]
    return SimulateResponse(fpt=fpt, censored_count=sample.censored_count, t_max=sample.config.t_max)
