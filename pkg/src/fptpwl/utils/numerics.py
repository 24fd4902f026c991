"""Special functions, quadrature, root finding and simplex minimization.

Every routine here is a pure function of its arguments. The inverse Gaussian
law IG(m, l) is parametrised by its mean ``m`` and shape ``l``.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy.integrate import quad
from scipy.optimize import bisect
from scipy.optimize import minimize as _scipy_minimize
from scipy.special import log_ndtr, ndtr

from fptpwl.core.exceptions import (
    ConvergenceError,
    InvalidParameterError,
    NoSignChangeError,
    OrderingError,
)
from fptpwl.schemas.numerics import QUAD_TOL, ROOT_TOL, SIMPLEX_TOL, Bracket, Tolerance

logger = logging.getLogger(__name__)

ArrayLike = Union[float, Sequence[float], np.ndarray]

_LOG_2PI = math.log(2.0 * math.pi)
_EPS = float(np.finfo(float).eps)


def _as_output(values: np.ndarray, like: ArrayLike) -> Union[float, np.ndarray]:
    """Return a Python float for scalar input, the array otherwise."""
    if np.ndim(like) == 0:
        return float(values)
    return values


def normal_cdf(z: ArrayLike) -> Union[float, np.ndarray]:
    """Standard normal cdf Φ(z); saturates at 0 and 1."""
    return _as_output(ndtr(np.asarray(z, dtype=float)), z)


def _check_ig(m: float, l: float) -> None:
    if not (m > 0 and l > 0):
        raise InvalidParameterError(f"IG parameters must be positive, got m={m}, l={l}")


def ig_pdf(t: ArrayLike, m: float, l: float) -> Union[float, np.ndarray]:
    """Density of IG(m, l) at t; zero for t <= 0."""
    _check_ig(m, l)
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros(t_arr.shape)
    pos = (t_arr > 0) & np.isfinite(t_arr)
    tp = t_arr[pos]
    out[pos] = np.exp(
        0.5 * (math.log(l) - _LOG_2PI) - 1.5 * np.log(tp) - l * (tp - m) ** 2 / (2.0 * m * m * tp)
    )
    return _as_output(out, t)


def ig_cdf(t: ArrayLike, m: float, l: float) -> Union[float, np.ndarray]:
    """Cdf of IG(m, l); the e^{2l/m} factor is applied in log space."""
    _check_ig(m, l)
    t_arr = np.asarray(t, dtype=float)
    out = np.zeros(t_arr.shape)
    out[np.isposinf(t_arr)] = 1.0
    pos = (t_arr > 0) & np.isfinite(t_arr)
    tp = t_arr[pos]
    r = np.sqrt(l / tp)
    first = ndtr(r * (tp / m - 1.0))
    second = np.exp(2.0 * l / m + log_ndtr(-r * (tp / m + 1.0)))
    out[pos] = np.clip(first + second, 0.0, 1.0)
    return _as_output(out, t)


def ig_quantile(p: float, m: float, l: float, tol: Tolerance = ROOT_TOL) -> float:
    """Time t with ig_cdf(t) = p, by bisection on a doubling bracket."""
    _check_ig(m, l)
    if not 0.0 < p < 1.0:
        raise InvalidParameterError(f"quantile level must lie in (0, 1), got {p}")
    hi = m
    for _ in range(tol.max_iter):
        if ig_cdf(hi, m, l) >= p:
            break
        hi *= 2.0
    else:
        raise ConvergenceError(f"could not bracket the {p}-quantile of IG({m}, {l})")
    return find_root(lambda s: ig_cdf(s, m, l) - p, Bracket(lo=0.0, hi=hi), tol)


def integrate(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: Tolerance = QUAD_TOL,
    points: Optional[Sequence[float]] = None,
) -> float:
    """Adaptive Gauss-Kronrod quadrature of f over [a, b].

    ``points`` are mandatory breakpoints (kinks of the integrand); those
    outside (a, b) are ignored.
    """
    if not a < b:
        raise OrderingError(f"integration requires a < b, got [{a}, {b}]")
    breaks = sorted({float(p) for p in points or () if a < p < b})

    if math.isinf(a) or math.isinf(b):
        # QUADPACK takes breakpoints on finite ranges only
        edges = [a, *breaks, b]
        return sum(_quad_piece(f, lo, hi, tol, None) for lo, hi in zip(edges[:-1], edges[1:]))
    return _quad_piece(f, a, b, tol, breaks or None)


def _quad_piece(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: Tolerance,
    breaks: Optional[list],
) -> float:
    result = quad(
        f, a, b,
        epsabs=tol.abs_tol,
        epsrel=tol.rel_tol,
        limit=tol.max_iter,
        points=breaks,
        full_output=1,
    )
    value, abserr = float(result[0]), float(result[1])
    if len(result) > 3:
        bound = max(tol.abs_tol, tol.rel_tol * abs(value))
        if not math.isfinite(value) or abserr > 10.0 * bound:
            raise ConvergenceError(
                f"quadrature over [{a}, {b}] did not converge: estimate {value}, "
                f"error {abserr} ({result[3]})"
            )
        logger.debug(f"Accepted quadrature over [{a}, {b}] with error {abserr}: {result[3]}")
    return value


def find_root(f: Callable[[float], float], bracket: Bracket, tol: Tolerance = ROOT_TOL) -> float:
    """Bisection root of f inside ``bracket``."""
    lo, hi = bracket.lo, bracket.hi
    f_lo, f_hi = f(lo), f(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if not (math.isfinite(f_lo) and math.isfinite(f_hi)) or (f_lo > 0) == (f_hi > 0):
        raise NoSignChangeError(
            f"no sign change on [{lo}, {hi}]: f(lo)={f_lo}, f(hi)={f_hi}"
        )
    root, info = bisect(
        f, lo, hi,
        xtol=tol.abs_tol,
        rtol=max(tol.rel_tol, 4.0 * _EPS),
        maxiter=tol.max_iter,
        full_output=True,
        disp=False,
    )
    if not info.converged:
        raise ConvergenceError(f"bisection on [{lo}, {hi}] stopped after {info.iterations} steps")
    return float(root)


@dataclass(frozen=True)
class SimplexResult:
    """Outcome of a (restarted) Nelder-Mead search."""
    x: np.ndarray
    fun: float
    converged: bool
    n_eval: int
    restarts: int


def _initial_steps(x: np.ndarray, step: Optional[ArrayLike]) -> np.ndarray:
    if step is None:
        return np.where(x != 0.0, 0.05 * np.abs(x), 0.00025)
    steps = np.broadcast_to(np.asarray(step, dtype=float), x.shape).copy()
    if np.any(steps <= 0):
        raise InvalidParameterError("simplex steps must be positive")
    return steps


def simplex_search(
    objective: Callable[[np.ndarray], float],
    initial: ArrayLike,
    tol: Tolerance = SIMPLEX_TOL,
    step: Optional[ArrayLike] = None,
    restarts: int = 2,
) -> SimplexResult:
    """Derivative-free Nelder-Mead search with restarts from the best point.

    Coefficients are reflection 1, expansion 2, contraction 0.5, shrink 0.5.
    A run stops when the simplex diameter falls below ``tol.abs_tol``. Each
    restart rebuilds a simplex of the original size around the best vertex,
    which lets the search leave flat penalty plateaus. The returned point is
    never worse than ``initial``.
    """
    best_x = np.atleast_1d(np.asarray(initial, dtype=float)).copy()
    best_f = float(objective(best_x))
    if not math.isfinite(best_f):
        raise InvalidParameterError(f"objective is not finite at the initial point {best_x}")
    steps = _initial_steps(best_x, step)

    n_eval = 1
    converged = False
    for attempt in range(restarts + 1):
        simplex = np.vstack([best_x, best_x + np.diag(steps)])
        res = _scipy_minimize(
            objective,
            best_x,
            method="Nelder-Mead",
            options={
                "initial_simplex": simplex,
                "xatol": tol.abs_tol,
                "fatol": np.inf,
                "maxiter": tol.max_iter,
                "maxfev": tol.max_iter * (best_x.size + 1),
                "adaptive": False,
            },
        )
        n_eval += int(res.nfev)
        converged = bool(res.success)
        if float(res.fun) < best_f:
            best_x, best_f = np.asarray(res.x, dtype=float), float(res.fun)
        if attempt < restarts:
            logger.debug(f"Simplex restart {attempt + 1}/{restarts} from f={best_f:.6g}")

    return SimplexResult(x=best_x, fun=best_f, converged=converged, n_eval=n_eval, restarts=restarts)


def minimize(
    objective: Callable[[np.ndarray], float],
    initial: ArrayLike,
    tol: Tolerance = SIMPLEX_TOL,
    step: Optional[ArrayLike] = None,
) -> np.ndarray:
    """Simplex minimum of ``objective``; raises ConvergenceError on failure."""
    result = simplex_search(objective, initial, tol, step)
    if not result.converged:
        raise ConvergenceError(
            f"simplex search did not converge within {tol.max_iter} iterations "
            f"(best f={result.fun:.6g})"
        )
    return result.x
