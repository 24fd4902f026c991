"""Euler-Maruyama simulation of first-passage times with a Brownian-bridge correction.

Stream ``i`` of a sample draws from ``Philox(SeedSequence(seed, spawn_key=(i,)))``,
so every path is a function of (seed, i) alone. Draws come in blocks of
BLOCK_STEPS steps: BLOCK_STEPS standard normals, then BLOCK_STEPS uniforms.
"""

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from functools import lru_cache
from typing import Callable, List, Optional, Tuple, Union

import numpy as np

from fptpwl.core.config import settings
from fptpwl.core.exceptions import InsufficientDataError, OrderingError
from fptpwl.schemas.fpt import FptMoments
from fptpwl.schemas.process import CurvedThreshold, WienerParams
from fptpwl.schemas.simulation import FptSample, SimConfig
from fptpwl.services.thresholds import check_pairing, fit_window
from fptpwl.utils.numerics import ArrayLike

logger = logging.getLogger(__name__)

BLOCK_STEPS = 1024


def derive_seed(global_seed: int, cell: int, repetition: int) -> int:
    """64-bit seed for one (cell, repetition) of an experiment."""
    state = np.random.SeedSequence(global_seed, spawn_key=(cell, repetition)).generate_state(1, dtype=np.uint64)
    return int(state[0])


def stream_generator(seed: int, stream_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(stream_index,))))


def bridge_crossing_prob(
    sigma2: float,
    dt: float,
    b_next: ArrayLike,
    x_i: ArrayLike,
    x_next: ArrayLike,
) -> Union[float, np.ndarray]:
    """Probability that a Brownian bridge from x_i to x_next touched b_next in between.

    Uses the expanded quadratic b^2 - b (x_i + x_next) + x_i x_next, which
    equals (b - x_i)(b - x_next).
    """
    b = np.asarray(b_next, dtype=float)
    xi = np.asarray(x_i, dtype=float)
    xn = np.asarray(x_next, dtype=float)
    exponent = -2.0 * (b * b - b * (xi + xn) + xi * xn) / (sigma2 * dt)
    prob = np.exp(np.minimum(exponent, 0.0))
    if np.ndim(prob) == 0:
        return float(prob)
    return prob


@lru_cache(maxsize=256)
def _censoring_time(
    w: WienerParams, th: CurvedThreshold, factor: float, lower_prob: float, upper_prob: float
) -> float:
    window = fit_window(w, th, lower_prob, upper_prob)
    return w.t0 + factor * (window.tau_star - w.t0)


def default_t_max(w: WienerParams, th: CurvedThreshold) -> float:
    """Censoring time: CENSOR_FACTOR times the elapsed upper end of the fit window."""
    return _censoring_time(w, th, settings.CENSOR_FACTOR, settings.WINDOW_LOWER_PROB, settings.WINDOW_UPPER_PROB)


def _resolved(w: WienerParams, th: CurvedThreshold, cfg: SimConfig) -> SimConfig:
    if cfg.t_max is not None:
        if not cfg.t_max > w.t0:
            raise OrderingError(f"t_max={cfg.t_max} must lie after t0={w.t0}")
        return cfg
    return cfg.model_copy(update={"t_max": default_t_max(w, th)})


def _run_path(w: WienerParams, th: CurvedThreshold, cfg: SimConfig, stream_index: int) -> Optional[float]:
    assert cfg.t_max is not None
    rng = stream_generator(cfg.seed, stream_index)
    dt = cfg.dt
    scale = math.sqrt(w.sigma2 * dt)
    n_steps = int(math.ceil((cfg.t_max - w.t0) / dt))
    x_prev = w.x0
    done = 0
    while done < n_steps:
        normals = rng.standard_normal(BLOCK_STEPS)
        uniforms = rng.random(BLOCK_STEPS)
        count = min(BLOCK_STEPS, n_steps - done)
        steps = np.arange(done + 1, done + count + 1)
        s = w.t0 + steps * dt
        x = x_prev + np.cumsum(w.mu * dt + scale * normals[:count])
        b = th.b0 + th.eps * np.exp(-th.lam * (s - th.t0))
        starts = np.concatenate(([x_prev], x[:-1]))

        direct = x >= b
        bridge = ~direct & (bridge_crossing_prob(w.sigma2, dt, b, starts, x) > uniforms[:count])
        hits = np.flatnonzero(direct | bridge)
        if hits.size:
            j = hits[0]
            return float(s[j]) if direct[j] else float(s[j] - 0.5 * dt)
        x_prev = float(x[-1])
        done += count
    return None


def simulate_fpt(w: WienerParams, th: CurvedThreshold, cfg: SimConfig, stream_index: int) -> Optional[float]:
    """First-passage time of stream ``stream_index``, or None if censored at t_max."""
    check_pairing(w, th)
    return _run_path(w, th, _resolved(w, th, cfg), stream_index)


def _simulate_block(
    w: WienerParams, th: CurvedThreshold, cfg: SimConfig, start: int, stop: int
) -> List[Optional[float]]:
    return [_run_path(w, th, cfg, i) for i in range(start, stop)]


def simulate_sample(
    w: WienerParams,
    th: CurvedThreshold,
    cfg: SimConfig,
    workers: Optional[int] = None,
) -> FptSample:
    """Simulate streams 0..n_paths-1; the result does not depend on ``workers``."""
    check_pairing(w, th)
    cfg = _resolved(w, th, cfg)
    workers = settings.WORKERS if workers is None else workers
    n = cfg.n_paths

    if workers <= 1 or n < 2:
        results = _simulate_block(w, th, cfg, 0, n)
    else:
        bounds = np.linspace(0, n, min(workers, n) + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [
                pool.submit(_simulate_block, w, th, cfg, int(lo), int(hi))
                for lo, hi in zip(bounds[:-1], bounds[1:])
            ]
            results = [value for future in futures for value in future.result()]

    times = [r for r in results if r is not None]
    censored = [i for i, r in enumerate(results) if r is None]
    if censored:
        logger.warning(f"{len(censored)} of {n} paths censored at t_max={cfg.t_max:.6g}")
    logger.info(f"Simulated {n} paths (dt={cfg.dt}, seed={cfg.seed}, workers={workers})")
    return FptSample(times=times, censored_streams=censored, config=cfg)


def empirical_cdf(sample: FptSample) -> Callable[[ArrayLike], Union[float, np.ndarray]]:
    """Step cdf F_n(t) = #{T_i <= t} / n, counting censored streams in n."""
    ordered = np.sort(np.asarray(sample.times, dtype=float))
    n = sample.n_total

    def cdf(t: ArrayLike) -> Union[float, np.ndarray]:
        values = np.searchsorted(ordered, np.asarray(t, dtype=float), side="right") / n
        return float(values) if np.ndim(t) == 0 else values

    return cdf


def empirical_stats(
    sample: FptSample, t0: float = 0.0
) -> Tuple[FptMoments, Callable[[ArrayLike], Union[float, np.ndarray]]]:
    """Sample mean, unbiased variance and CV of T - t0, plus the empirical cdf."""
    if len(sample.times) < 2:
        raise InsufficientDataError(f"need at least 2 uncensored times, got {len(sample.times)}")
    elapsed = np.asarray(sample.times, dtype=float) - t0
    mean = float(np.mean(elapsed))
    variance = float(np.var(elapsed, ddof=1))
    moments = FptMoments(
        mean=mean,
        second_moment=variance + mean * mean,
        variance=variance,
        cv=math.sqrt(variance) / mean,
        total_mass=len(sample.times) / sample.n_total,
    )
    return moments, empirical_cdf(sample)
