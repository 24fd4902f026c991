"""Piecewise-linear approximations of the curved threshold over the fit window.

Four fits are offered, each minimizing a squared-distance area on
[tau0, tau_star]:

* ``above``: two chords of b, so the line lies above b on the window;
* ``below``: two tangents of b, a global lower bound;
* ``between``: the line closest to both, kept inside the above/below band;
* ``free``: the unconstrained least-squares line.

Constraints are enforced with a flat penalty on a 1001-point grid.
"""

import logging
import math
from typing import Callable, Iterable, Optional, Tuple, get_args

import numpy as np

from fptpwl.core.config import settings
from fptpwl.core.exceptions import ConvergenceError, DegenerateInputError, InvalidParameterError, OrderingError
from fptpwl.schemas.fit import FitMethod, FitResult
from fptpwl.schemas.process import CurvedThreshold, FitWindow, PiecewiseLinearThreshold
from fptpwl.services.thresholds import curved_slope, eval_curved, eval_piecewise, small_lambda_line
from fptpwl.utils.numerics import integrate, minimize, simplex_search

logger = logging.getLogger(__name__)

GRID_POINTS = 1001
GRID_SLACK = 1e-12
FIT_METHODS = get_args(FitMethod)

Scalar = Callable[[float], float]


def _curve_fn(th: CurvedThreshold) -> Scalar:
    b0, eps, lam, t0 = th.b0, th.eps, th.lam, th.t0
    return lambda t: b0 + eps * math.exp(-lam * (t - t0))


def _line_fn(alpha1: float, beta1: float, beta2: float, t1: float, t0: float) -> Scalar:
    alpha2 = alpha1 + beta1 * (t1 - t0)

    def line(t: float) -> float:
        if t <= t1:
            return alpha1 + beta1 * (t - t0)
        return alpha2 + beta2 * (t - t1)

    return line


def _thr_fn(thr: PiecewiseLinearThreshold) -> Scalar:
    return _line_fn(thr.alpha1, thr.beta1, thr.beta2, thr.t1, thr.t0)


def _edges(a: float, b: float, knots: Iterable[float]) -> list:
    return sorted({a, b, *(k for k in knots if a < k < b)})


def _linear_gap_area(pairs: Iterable[Tuple[Scalar, Scalar]], a: float, b: float, knots: Iterable[float]) -> float:
    """Sum of squared-distance areas between piecewise-linear functions.

    Simpson's rule on each knot-free piece; it is exact for the quadratic
    integrand there.
    """
    pairs = list(pairs)
    edges = _edges(a, b, knots)
    total = 0.0
    for lo, hi in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (lo + hi)
        for f, g in pairs:
            d_lo, d_mid, d_hi = f(lo) - g(lo), f(mid) - g(mid), f(hi) - g(hi)
            total += (hi - lo) / 6.0 * (d_lo * d_lo + 4.0 * d_mid * d_mid + d_hi * d_hi)
    return total


def _curve_gap_area(line: Scalar, th: CurvedThreshold, win: FitWindow, knots: Iterable[float]) -> float:
    curve = _curve_fn(th)
    return integrate(
        lambda t: (line(t) - curve(t)) ** 2, win.tau0, win.tau_star, points=list(knots)
    )


def squared_distance(thr: PiecewiseLinearThreshold, th: CurvedThreshold, win: FitWindow) -> float:
    """Area of |thr(t) - b(t)|^2 over the fit window."""
    return _curve_gap_area(_thr_fn(thr), th, win, [thr.t1])


def _flat_result(th: CurvedThreshold, win: FitWindow, method: FitMethod) -> FitResult:
    level = th.b0 + th.eps
    thr = PiecewiseLinearThreshold(
        alpha1=level, beta1=0.0, beta2=0.0, t1=0.5 * (win.tau0 + win.tau_star), t0=th.t0
    )
    return FitResult(threshold=thr, objective=0.0, method=method, knots={"t1": thr.t1})


def tangent_intersection(th: CurvedThreshold, tt1: float, tt2: float) -> float:
    """Time where the tangents of b at tt1 and tt2 meet.

    Written as tt1 + d * (1/x - 1/expm1(x)) with d = tt2 - tt1 and
    x = lambda d, which is exact and free of cancellation for small x.
    """
    if not tt1 < tt2:
        raise DegenerateInputError(f"tangent points must satisfy tt1 < tt2, got {tt1}, {tt2}")
    if th.eps == 0.0:
        raise DegenerateInputError("tangents of a flat threshold coincide")
    delta = tt2 - tt1
    x = th.lam * delta
    if x < 1e-12:
        raise DegenerateInputError(f"lambda * (tt2 - tt1) = {x} is too small to separate the tangents")
    if x < 1e-3:
        frac = 0.5 - x / 12.0 + x ** 3 / 720.0
    else:
        frac = 1.0 / x - 1.0 / math.expm1(x)
    return tt1 + delta * frac


def build_above(th: CurvedThreshold, win: FitWindow, t1: float) -> PiecewiseLinearThreshold:
    """Chords of b through (tau0, b(tau0)), (t1, b(t1)) and (tau_star, b(tau_star))."""
    if not win.tau0 < t1 < win.tau_star:
        raise OrderingError(f"knot t1={t1} must lie inside ({win.tau0}, {win.tau_star})")
    b_lo, b_mid, b_hi = (float(v) for v in eval_curved(th, np.array([win.tau0, t1, win.tau_star])))
    beta1 = (b_mid - b_lo) / (t1 - win.tau0)
    beta2 = (b_hi - b_mid) / (win.tau_star - t1)
    # first chord extended back to t0
    alpha1 = b_lo - beta1 * (win.tau0 - th.t0)
    return PiecewiseLinearThreshold(alpha1=alpha1, beta1=beta1, beta2=beta2, t1=t1, t0=th.t0)


def build_below(th: CurvedThreshold, tt1: float, tt2: float) -> PiecewiseLinearThreshold:
    """Tangents of b at tt1 and tt2 joined where they intersect."""
    t1 = tangent_intersection(th, tt1, tt2)
    beta1, beta2 = (float(v) for v in curved_slope(th, np.array([tt1, tt2])))
    alpha1 = float(eval_curved(th, tt1)) - beta1 * (tt1 - th.t0)
    return PiecewiseLinearThreshold(alpha1=alpha1, beta1=beta1, beta2=beta2, t1=t1, t0=th.t0)


def _window_grid(win: FitWindow) -> np.ndarray:
    return np.linspace(win.tau0, win.tau_star, GRID_POINTS)


def verify_fit(
    result: FitResult,
    th: Optional[CurvedThreshold],
    win: FitWindow,
    bounds: Optional[Tuple[FitResult, FitResult]] = None,
) -> bool:
    """Re-check the constraint of ``result.method`` on the verification grid.

    ``below`` is checked on [t0, t0 + 2 (tau_star - t0)] since tangents bound
    b everywhere; ``between`` needs the (above, below) pair in ``bounds``.
    """
    thr = result.threshold
    if result.method in ("above", "below") and th is None:
        raise InvalidParameterError(f"verifying an '{result.method}' fit requires the curved threshold")
    if result.method == "above":
        grid = _window_grid(win)
        return bool(np.all(eval_piecewise(thr, grid) >= eval_curved(th, grid) - GRID_SLACK))
    if result.method == "below":
        grid = np.linspace(th.t0, th.t0 + 2.0 * (win.tau_star - th.t0), GRID_POINTS)
        return bool(np.all(eval_piecewise(thr, grid) <= eval_curved(th, grid) + GRID_SLACK))
    if result.method == "between":
        if bounds is None:
            raise InvalidParameterError("verifying a 'between' fit requires the above/below pair")
        above, below = bounds
        grid = _window_grid(win)
        values = eval_piecewise(thr, grid)
        return bool(
            np.all(values <= eval_piecewise(above.threshold, grid) + GRID_SLACK)
            and np.all(values >= eval_piecewise(below.threshold, grid) - GRID_SLACK)
        )
    return True


def _checked(
    result: FitResult,
    th: Optional[CurvedThreshold],
    win: FitWindow,
    bounds: Optional[Tuple[FitResult, FitResult]] = None,
) -> FitResult:
    if not verify_fit(result, th, win, bounds):
        raise ConvergenceError(f"fitted '{result.method}' threshold violates its constraint")
    logger.info(
        f"Fitted '{result.method}' threshold {result.threshold.model_dump()} "
        f"with objective {result.objective:.6g}"
    )
    return result


def fit_above_below(th: CurvedThreshold, win: FitWindow) -> Tuple[FitResult, FitResult]:
    """Jointly fit the chord and tangent lines closest to each other.

    The search runs over window fractions (u, v1, v2) with
    t1 = tau0 + u W, tt1 = tau0 + v1 W and tt2 = tau0 + v2 W.
    """
    if th.is_flat:
        return _flat_result(th, win, "above"), _flat_result(th, win, "below")

    penalty = settings.PENALTY
    tau0, width = win.tau0, win.width

    def objective(theta: np.ndarray) -> float:
        u, v1, v2 = (float(v) for v in theta)
        if not (0.0 < u < 1.0 and 0.0 <= v1 < v2 <= 1.0):
            return penalty
        try:
            above = build_above(th, win, tau0 + u * width)
            below = build_below(th, tau0 + v1 * width, tau0 + v2 * width)
        except (DegenerateInputError, OrderingError):
            return penalty
        return _linear_gap_area(
            [(_thr_fn(above), _thr_fn(below))], win.tau0, win.tau_star, [above.t1, below.t1]
        )

    u, v1, v2 = minimize(objective, [0.5, 0.25, 0.75], step=0.1)
    t1, tt1, tt2 = tau0 + u * width, tau0 + v1 * width, tau0 + v2 * width
    area = objective(np.array([u, v1, v2]))
    above = FitResult(threshold=build_above(th, win, t1), objective=area, method="above", knots={"t1": t1})
    below_thr = build_below(th, tt1, tt2)
    below = FitResult(
        threshold=below_thr, objective=area, method="below", knots={"tt1": tt1, "tt2": tt2, "t1": below_thr.t1}
    )
    return _checked(above, th, win), _checked(below, th, win)


def _theta(thr: PiecewiseLinearThreshold) -> np.ndarray:
    return np.array([thr.alpha1, thr.beta1, thr.beta2, thr.t1 - thr.t0])


def _from_theta(theta: np.ndarray, t0: float) -> PiecewiseLinearThreshold:
    a1, b1, b2, s1 = (float(v) for v in theta)
    return PiecewiseLinearThreshold(alpha1=a1, beta1=b1, beta2=b2, t1=t0 + s1, t0=t0)


def fit_between(above: FitResult, below: FitResult, win: FitWindow) -> FitResult:
    """Line closest to both bounds while staying inside the band they form."""
    upper, lower = above.threshold, below.threshold
    t0 = upper.t0
    if upper == lower:
        return FitResult(threshold=upper, objective=0.0, method="between", knots={"t1": upper.t1})

    penalty = settings.PENALTY
    grid = _window_grid(win)
    hi_grid = eval_piecewise(upper, grid) + GRID_SLACK
    lo_grid = eval_piecewise(lower, grid) - GRID_SLACK
    upper_fn, lower_fn = _thr_fn(upper), _thr_fn(lower)

    def objective(theta: np.ndarray) -> float:
        a1, b1, b2, s1 = (float(v) for v in theta)
        if s1 <= 0.0:
            return penalty
        t1 = t0 + s1
        s = grid - t0
        values = np.where(grid <= t1, a1 + b1 * s, a1 + b1 * s1 + b2 * (grid - t1))
        if np.any(values > hi_grid) or np.any(values < lo_grid):
            return penalty
        line = _line_fn(a1, b1, b2, t1, t0)
        return _linear_gap_area(
            [(upper_fn, line), (lower_fn, line)], win.tau0, win.tau_star, [upper.t1, lower.t1, t1]
        )

    candidates = [0.5 * (_theta(upper) + _theta(lower)), _theta(lower), _theta(upper)]
    scores = [objective(c) for c in candidates]
    seed = candidates[int(np.argmin(scores))]
    logger.debug(f"Between-fit seed scores (midpoint, below, above): {scores}")

    theta = minimize(objective, seed)
    result = FitResult(
        threshold=_from_theta(theta, t0), objective=objective(theta), method="between", knots={"t1": t0 + theta[3]}
    )
    return _checked(result, None, win, (above, below))


def fit_free(th: CurvedThreshold, win: FitWindow, seed: Optional[FitResult] = None) -> FitResult:
    """Unconstrained least-squares two-piece line, seeded from the between fit."""
    if th.is_flat:
        return _flat_result(th, win, "free")
    if seed is None:
        above, below = fit_above_below(th, win)
        seed = fit_between(above, below, win)

    penalty = settings.PENALTY
    t0 = th.t0

    def objective(theta: np.ndarray) -> float:
        a1, b1, b2, s1 = (float(v) for v in theta)
        if s1 <= 0.0:
            return penalty
        return _curve_gap_area(_line_fn(a1, b1, b2, t0 + s1, t0), th, win, [t0 + s1])

    search = simplex_search(objective, _theta(seed.threshold))
    if not search.converged:
        raise ConvergenceError(f"free fit did not converge (best area {search.fun:.6g})")
    result = FitResult(
        threshold=_from_theta(search.x, t0), objective=search.fun, method="free", knots={"t1": t0 + search.x[3]}
    )
    return _checked(result, th, win)


def fit_threshold(th: CurvedThreshold, win: FitWindow, method: FitMethod = "free") -> FitResult:
    """Fit a single threshold by method name."""
    if method not in FIT_METHODS:
        raise InvalidParameterError(f"unknown fit method '{method}'")
    if method == "line":
        line = small_lambda_line(th)
        return FitResult(
            threshold=line, objective=squared_distance(line, th, win), method="line", knots={"t1": line.t1}
        )
    if method == "free":
        return fit_free(th, win)
    above, below = fit_above_below(th, win)
    if method == "above":
        return above
    if method == "below":
        return below
    return fit_between(above, below, win)
