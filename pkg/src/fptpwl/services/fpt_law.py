"""First-passage-time law of drifted Brownian motion through linear thresholds.

Times passed in are absolute; moments are those of the elapsed time T - t0.
"""

import logging
import math
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.integrate import cumulative_trapezoid
from scipy.special import log_ndtr

from fptpwl.core.exceptions import DomainError, InvalidParameterError, OrderingError
from fptpwl.schemas.fpt import FptMoments
from fptpwl.schemas.process import CurvedThreshold, PiecewiseLinearThreshold, WienerParams
from fptpwl.services.thresholds import eval_piecewise
from fptpwl.utils.numerics import ArrayLike, ig_quantile, integrate

logger = logging.getLogger(__name__)

TAIL_MASS = 1e-8
_LOG_2PI = math.log(2.0 * math.pi)


def _out(values: np.ndarray, like: ArrayLike) -> Union[float, np.ndarray]:
    return float(values) if np.ndim(like) == 0 else values


def _check_start(w: WienerParams, alpha: float) -> None:
    if not alpha > w.x0:
        raise DomainError(f"threshold level {alpha} at t0 must lie above x0={w.x0}")


def _check_piecewise(w: WienerParams, thr: PiecewiseLinearThreshold) -> None:
    if thr.t0 != w.t0:
        raise InvalidParameterError(f"threshold starts at t0={thr.t0}, process at t0={w.t0}")
    _check_start(w, thr.alpha1)


def _linear_logpdf(w: WienerParams, alpha: float, beta: float, tau: np.ndarray) -> np.ndarray:
    """Log density of the elapsed crossing time of alpha + beta * tau (tau > 0)."""
    gap = alpha - w.x0
    drift = w.mu - beta
    return (
        math.log(gap)
        - 0.5 * (_LOG_2PI + math.log(w.sigma2))
        - 1.5 * np.log(tau)
        - (gap - drift * tau) ** 2 / (2.0 * w.sigma2 * tau)
    )


def linear_fpt_pdf(w: WienerParams, alpha: float, beta: float, t: ArrayLike) -> Union[float, np.ndarray]:
    """Density of the crossing time of c(t) = alpha + beta (t - t0).

    Inverse Gaussian when mu > beta, defective otherwise.
    """
    _check_start(w, alpha)
    tau = np.asarray(t, dtype=float) - w.t0
    out = np.zeros(tau.shape)
    pos = (tau > 0) & np.isfinite(tau)
    out[pos] = np.exp(_linear_logpdf(w, alpha, beta, tau[pos]))
    return _out(out, t)


def linear_total_mass(w: WienerParams, alpha: float, beta: float) -> float:
    """Probability that the linear threshold is ever crossed."""
    _check_start(w, alpha)
    drift = w.mu - beta
    if drift >= 0:
        return 1.0
    return math.exp(2.0 * drift * (alpha - w.x0) / w.sigma2)


def linear_fpt_cdf(w: WienerParams, alpha: float, beta: float, t: ArrayLike) -> Union[float, np.ndarray]:
    """Closed-form cdf for any effective drift mu - beta, exponential factor in log space."""
    _check_start(w, alpha)
    gap = alpha - w.x0
    drift = w.mu - beta
    tau = np.asarray(t, dtype=float) - w.t0
    out = np.zeros(tau.shape)
    out[np.isposinf(tau)] = linear_total_mass(w, alpha, beta)
    pos = (tau > 0) & np.isfinite(tau)
    tp = tau[pos]
    scale = w.sigma * np.sqrt(tp)
    first = np.exp(log_ndtr((drift * tp - gap) / scale))
    second = np.exp(2.0 * drift * gap / w.sigma2 + log_ndtr((-drift * tp - gap) / scale))
    out[pos] = np.clip(first + second, 0.0, 1.0)
    return _out(out, t)


def piecewise_fpt_logpdf(w: WienerParams, thr: PiecewiseLinearThreshold, t: ArrayLike) -> Union[float, np.ndarray]:
    """Log density of the crossing time of the two-piece threshold.

    Before the knot this is the linear law of the first piece. After it, the
    density is a Gaussian kernel for the distance to the second piece times a
    combination of two normal cdfs correcting for paths that survived the
    first piece; both pieces are assembled in log space. Returns -inf where
    the density vanishes.
    """
    _check_piecewise(w, thr)
    t_arr = np.asarray(t, dtype=float)
    out = np.full(t_arr.shape, -np.inf)
    tau = t_arr - w.t0

    early = (tau > 0) & (t_arr <= thr.t1)
    out[early] = _linear_logpdf(w, thr.alpha1, thr.beta1, tau[early])

    late = (t_arr > thr.t1) & np.isfinite(t_arr)
    if np.any(late):
        out[late] = _second_piece_logpdf(w, thr, t_arr[late])
    return _out(out, t)


def _second_piece_logpdf(w: WienerParams, thr: PiecewiseLinearThreshold, t: np.ndarray) -> np.ndarray:
    s2 = w.sigma2
    s1 = thr.t1 - thr.t0
    gap = thr.alpha1 - w.x0
    dbeta = thr.beta1 - thr.beta2
    tau = t - thr.t0
    u = t - thr.t1

    distance = thr.alpha2 - w.x0 - (w.mu - thr.beta2) * u - w.mu * s1
    log_kernel = -0.5 * (_LOG_2PI + math.log(s2)) - 1.5 * np.log(tau) - distance ** 2 / (2.0 * s2 * tau)

    big_a = gap + dbeta * s1
    big_b = big_a - 2.0 * gap
    kappa = np.sqrt(u / (s2 * s1 * tau))
    image = -2.0 * u * gap * dbeta / (s2 * tau)

    with np.errstate(divide="ignore", invalid="ignore"):
        log_first = math.log(abs(big_a)) + log_ndtr(big_a * kappa) if big_a != 0 else np.full(t.shape, -np.inf)
        log_second = (
            math.log(abs(big_b)) + image + log_ndtr(big_b * kappa) if big_b != 0 else np.full(t.shape, -np.inf)
        )
        top = np.maximum(log_first, log_second)
        finite = np.isfinite(top)
        scaled = np.zeros(t.shape)
        scaled[finite] = np.sign(big_a) * np.exp(log_first[finite] - top[finite]) - np.sign(big_b) * np.exp(
            log_second[finite] - top[finite]
        )
        log_bracket = np.full(t.shape, -np.inf)
        positive = scaled > 0
        log_bracket[positive] = top[positive] + np.log(scaled[positive])
    return log_kernel + log_bracket


def piecewise_fpt_pdf(w: WienerParams, thr: PiecewiseLinearThreshold, t: ArrayLike) -> Union[float, np.ndarray]:
    """Density of the crossing time of the two-piece threshold; zero for t <= t0."""
    return _out(np.exp(np.asarray(piecewise_fpt_logpdf(w, thr, t))), t)


def _pdf_scalar(w: WienerParams, thr: PiecewiseLinearThreshold) -> Callable[[float], float]:
    """Scalar twin of piecewise_fpt_pdf for quadrature integrands."""
    s2, mu, t0, t1 = w.sigma2, w.mu, thr.t0, thr.t1
    gap = thr.alpha1 - w.x0
    s1 = t1 - t0
    drift1 = mu - thr.beta1
    dbeta = thr.beta1 - thr.beta2
    big_a = gap + dbeta * s1
    big_b = big_a - 2.0 * gap
    log_norm = -0.5 * (_LOG_2PI + math.log(s2))
    log_gap = math.log(gap)
    far = thr.alpha2 - w.x0 - mu * s1

    def pdf(t: float) -> float:
        tau = t - t0
        if tau <= 0.0:
            return 0.0
        if t <= t1:
            return math.exp(log_gap + log_norm - 1.5 * math.log(tau) - (gap - drift1 * tau) ** 2 / (2.0 * s2 * tau))
        u = t - t1
        distance = far - (mu - thr.beta2) * u
        log_kernel = log_norm - 1.5 * math.log(tau) - distance * distance / (2.0 * s2 * tau)
        kappa = math.sqrt(u / (s2 * s1 * tau))
        log_first = math.log(abs(big_a)) + float(log_ndtr(big_a * kappa)) if big_a != 0.0 else -math.inf
        log_second = (
            math.log(abs(big_b)) - 2.0 * u * gap * dbeta / (s2 * tau) + float(log_ndtr(big_b * kappa))
            if big_b != 0.0
            else -math.inf
        )
        top = max(log_first, log_second)
        if top == -math.inf:
            return 0.0
        bracket = math.copysign(math.exp(log_first - top), big_a) - math.copysign(math.exp(log_second - top), big_b)
        if bracket <= 0.0:
            return 0.0
        return math.exp(log_kernel + top + math.log(bracket))

    return pdf


def _dominating_line(w: WienerParams, thr: PiecewiseLinearThreshold) -> Tuple[float, float]:
    """IG (mean, shape) of a line above the threshold, or (inf, shape) if it is never crossed surely."""
    gap = max(thr.alpha1, thr.alpha2) - w.x0
    drift = w.mu - max(thr.beta2, 0.0)
    mean = gap / drift if drift > 0 else math.inf
    return mean, gap * gap / w.sigma2


def _breakpoints(w: WienerParams, thr: PiecewiseLinearThreshold, end: float) -> List[float]:
    """Knot plus geometrically spaced points after it, so no mass hides between quadrature nodes."""
    mean, _ = _dominating_line(w, thr)
    step = min(thr.t1 - thr.t0, mean if math.isfinite(mean) else thr.t1 - thr.t0) / 8.0
    points = [thr.t1]
    offset = step
    while thr.t1 + offset < end and len(points) < 64:
        points.append(thr.t1 + offset)
        offset *= 2.0
    return points


def piecewise_total_mass(w: WienerParams, thr: PiecewiseLinearThreshold) -> float:
    """Probability that the two-piece threshold is ever crossed."""
    _check_piecewise(w, thr)
    if w.mu > thr.beta2:
        return 1.0
    head = float(linear_fpt_cdf(w, thr.alpha1, thr.beta1, thr.t1))
    points = _breakpoints(w, thr, thr.t1 + 1e6 * (thr.t1 - thr.t0))
    return head + integrate(_pdf_scalar(w, thr), thr.t1, math.inf, points=points)


def piecewise_fpt_cdf(w: WienerParams, thr: PiecewiseLinearThreshold, t: ArrayLike) -> Union[float, np.ndarray]:
    """Cdf of the crossing time: closed form up to t1, quadrature of the density after it."""
    _check_piecewise(w, thr)
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros(t_arr.shape)
    early = t_arr <= thr.t1
    out[early] = linear_fpt_cdf(w, thr.alpha1, thr.beta1, t_arr[early])

    late = ~early
    if np.any(late):
        out[np.isposinf(t_arr)] = piecewise_total_mass(w, thr)
        finite_late = late & np.isfinite(t_arr)
        # accumulate over sorted evaluation points so each stretch is integrated once
        order = np.argsort(t_arr[finite_late])
        ends = t_arr[finite_late][order]
        level = float(linear_fpt_cdf(w, thr.alpha1, thr.beta1, thr.t1))
        pdf = _pdf_scalar(w, thr)
        start = thr.t1
        values = np.empty(ends.shape)
        for k, end in enumerate(ends):
            if end > start:
                level += integrate(pdf, start, end, points=_breakpoints(w, thr, end))
                start = end
            values[k] = level
        filled = np.empty(ends.shape)
        filled[order] = np.minimum(values, 1.0)
        out[finite_late] = filled
    return _out(out, t)


def piecewise_fpt_survival(w: WienerParams, thr: PiecewiseLinearThreshold, t: ArrayLike) -> Union[float, np.ndarray]:
    """P(T > t): the probability of staying below the threshold up to t."""
    return _out(1.0 - np.asarray(piecewise_fpt_cdf(w, thr, t)), t)


def sandwich_gap(
    w: WienerParams,
    above: PiecewiseLinearThreshold,
    below: PiecewiseLinearThreshold,
    t: ArrayLike,
) -> Union[float, np.ndarray]:
    """F under the lower line minus F under the upper line; nonnegative when below <= above."""
    upper = np.asarray(piecewise_fpt_cdf(w, above, t))
    lower = np.asarray(piecewise_fpt_cdf(w, below, t))
    return _out(lower - upper, t)


def cdf_table(
    w: WienerParams,
    thr: PiecewiseLinearThreshold,
    t_end: float,
    n_nodes: int = 4097,
) -> Callable[[ArrayLike], Union[float, np.ndarray]]:
    """Fast interpolant of the cdf on [t0, t_end].

    Exact up to t1, cumulative trapezoid of the density after it. Beyond
    t_end the interpolant stays at its last value.
    """
    _check_piecewise(w, thr)
    if not t_end > w.t0:
        raise OrderingError(f"table end {t_end} must lie after t0={w.t0}")
    if n_nodes < 2:
        raise InvalidParameterError("a cdf table needs at least two nodes")
    nodes = np.union1d(np.linspace(w.t0, t_end, n_nodes), [min(thr.t1, t_end)])
    values = np.asarray(linear_fpt_cdf(w, thr.alpha1, thr.beta1, np.minimum(nodes, thr.t1)))
    tail = nodes >= thr.t1
    if np.count_nonzero(tail) > 1:
        grid = nodes[tail]
        dens = np.asarray(piecewise_fpt_pdf(w, thr, grid))
        dens[0] = float(piecewise_fpt_pdf(w, thr, np.nextafter(thr.t1, math.inf)))
        values[tail] = values[tail][0] + cumulative_trapezoid(dens, grid, initial=0.0)
    values = np.clip(np.maximum.accumulate(values), 0.0, 1.0)

    def cdf(t: ArrayLike) -> Union[float, np.ndarray]:
        return _out(np.interp(np.asarray(t, dtype=float), nodes, values, left=0.0), t)

    return cdf


def truncation_time(w: WienerParams, thr: PiecewiseLinearThreshold, tail_mass: float = TAIL_MASS) -> float:
    """Time beyond which less than ``tail_mass`` of the FPT law remains."""
    _check_piecewise(w, thr)
    if not w.mu > thr.beta2:
        raise InvalidParameterError(f"finite moments need mu > beta2, got mu={w.mu}, beta2={thr.beta2}")
    mean, shape = _dominating_line(w, thr)
    return w.t0 + ig_quantile(1.0 - tail_mass, mean, shape)


def fpt_moments(w: WienerParams, thr: PiecewiseLinearThreshold) -> FptMoments:
    """Mean, variance and CV of the elapsed crossing time by quadrature."""
    t_end = truncation_time(w, thr)
    points = _breakpoints(w, thr, t_end)
    pdf = _pdf_scalar(w, thr)
    t0 = w.t0

    mass = integrate(pdf, t0, t_end, points=points)
    mean = integrate(lambda s: (s - t0) * pdf(s), t0, t_end, points=points)
    second = integrate(lambda s: (s - t0) ** 2 * pdf(s), t0, t_end, points=points)
    variance = max(second - mean * mean, 0.0)
    if mass < 1.0 - 1e-6:
        logger.warning(f"FPT law integrates to {mass:.8f} over [{t0}, {t_end:.6g}]")
    return FptMoments(
        mean=mean,
        second_moment=second,
        variance=variance,
        cv=math.sqrt(variance) / mean,
        total_mass=min(mass, 1.0 + 1e-6),
    )


def constrained_transition_density(
    w: WienerParams,
    thr: PiecewiseLinearThreshold,
    points: Sequence[Tuple[float, float]],
) -> float:
    """Joint density of the path at one or two (time, level) points, unabsorbed so far.

    Each step contributes a Gaussian kernel times the probability that the
    bridge between consecutive points stays below the line joining the
    threshold values there.
    """
    _check_piecewise(w, thr)
    if not 1 <= len(points) <= 2:
        raise InvalidParameterError(f"supports one or two points, got {len(points)}")
    prev_t, prev_x = w.t0, w.x0
    prev_gap = thr.alpha1 - w.x0
    density = 1.0
    for t, x in points:
        if not t > prev_t:
            raise OrderingError(f"point times must increase strictly after t0, got {t} after {prev_t}")
        gap = float(eval_piecewise(thr, t)) - x
        if gap < 0:
            raise DomainError(f"level {x} lies above the threshold at t={t}")
        dt = t - prev_t
        var = w.sigma2 * dt
        kernel = math.exp(-((x - prev_x - w.mu * dt) ** 2) / (2.0 * var)) / math.sqrt(2.0 * math.pi * var)
        density *= kernel * -math.expm1(-2.0 * gap * prev_gap / var)
        prev_t, prev_x, prev_gap = t, x, gap
    return density


def _small_eps_terms(w: WienerParams, th: CurvedThreshold) -> Tuple[float, float, float]:
    gap = th.b0 - w.x0
    if not gap > 0:
        raise DomainError(f"asymptotic level b0={th.b0} must lie above x0={w.x0}")
    root = math.sqrt(w.mu ** 2 + 2.0 * th.lam * w.sigma2)
    decay = math.exp(gap * (w.mu - root) / w.sigma2)
    return gap, root, decay


def small_eps_mean(w: WienerParams, th: CurvedThreshold) -> float:
    """First-order mean of the crossing time for a small amplitude eps.

    The series is stated for a process started at 0; b0 is replaced by the
    distance b0 - x0 throughout, so a start x0 != 0 gives the value of the
    shifted problem.
    """
    gap, _, decay = _small_eps_terms(w, th)
    return gap / w.mu + th.eps / w.mu * decay


def small_eps_var(w: WienerParams, th: CurvedThreshold, theta0: Optional[float] = None) -> float:
    """First-order variance of the crossing time for a small amplitude eps.

    As in ``small_eps_mean``, b0 is replaced by b0 - x0 throughout, including
    the eps * (b0 - 1) term, which is not dimensionally homogeneous and is
    otherwise kept as is. Both coincide with the series for x0 = 0.
    ``theta0`` defaults to the distance b0 - x0.
    """
    gap, root, decay = _small_eps_terms(w, th)
    theta0 = gap if theta0 is None else theta0
    mu, s2, eps = w.mu, w.sigma2, th.eps
    return (
        gap * s2 / mu ** 3
        + s2 * eps / mu ** 3 * (gap - 1.0)
        + 2.0 * eps / mu ** 2 * (mu * gap / root + s2 / (2.0 * mu) - theta0) * decay
    )
