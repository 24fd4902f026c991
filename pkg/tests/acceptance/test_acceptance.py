"""Desk-scale checks of the approximation against simulation.

Run with ``pytest -m slow``; each test takes from seconds to tens of minutes.
"""

import math

import numpy as np
import pytest

from fptpwl.core.config import settings
from fptpwl.schemas.process import CurvedThreshold, PiecewiseLinearThreshold, WienerParams
from fptpwl.schemas.simulation import SimConfig
from fptpwl.services.fpt_law import (
    cdf_table,
    fpt_moments,
    linear_fpt_pdf,
    piecewise_fpt_cdf,
    piecewise_fpt_pdf,
    small_eps_mean,
    truncation_time,
)
from fptpwl.services.inference import estimate_phi, r_iae, relative_errors
from fptpwl.services.simulator import derive_seed, empirical_cdf, empirical_stats, simulate_sample
from fptpwl.services.threshold_fit import fit_above_below, fit_between, fit_free
from fptpwl.services.thresholds import fit_window
from fptpwl.utils.numerics import ig_cdf

pytestmark = pytest.mark.slow

SIGMA2 = [0.2, 0.4, 1.0]
EPS = [0.05, 0.1, 0.2, 1.0, 5.0, 10.0]
LAMBDA = [0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0, 10.0]


def _free(w: WienerParams, th: CurvedThreshold) -> PiecewiseLinearThreshold:
    win = fit_window(w, th)
    return fit_free(th, win).threshold


def test_constant_threshold_moments():
    w = WienerParams(mu=1.0, sigma2=0.2)
    moments = fpt_moments(w, _free(w, CurvedThreshold(b0=1.0, eps=0.0, lam=1.0)))
    assert moments.mean == pytest.approx(1.0, abs=1e-4)
    assert moments.variance == pytest.approx(0.2, abs=1e-4)
    assert moments.cv == pytest.approx(math.sqrt(0.2), abs=1e-4)


@pytest.mark.parametrize("sigma2", SIGMA2)
@pytest.mark.parametrize("eps", EPS)
def test_free_fit_normalization(sigma2, eps):
    w = WienerParams(mu=1.0, sigma2=sigma2)
    for lam in LAMBDA:
        moments = fpt_moments(w, _free(w, CurvedThreshold(b0=1.0, eps=eps, lam=lam)))
        assert moments.total_mass == pytest.approx(1.0, abs=1e-4), f"lambda={lam}"


def test_degenerate_density_equivalence():
    rng = np.random.default_rng(31)
    for _ in range(20):
        w = WienerParams(mu=rng.uniform(0.5, 2.0), sigma2=rng.uniform(0.1, 1.0))
        alpha, beta, t1 = rng.uniform(0.5, 2.0), rng.uniform(-1.0, 0.4), rng.uniform(0.3, 2.0)
        thr = PiecewiseLinearThreshold(alpha1=alpha, beta1=beta, beta2=beta, t1=t1)
        t = np.linspace(1e-3, 10.0, 10_000)
        assert np.max(np.abs(piecewise_fpt_pdf(w, thr, t) - linear_fpt_pdf(w, alpha, beta, t))) < 1e-10


def test_sandwich_contains_simulated_cdf():
    w = WienerParams(mu=1.0, sigma2=0.2)
    th = CurvedThreshold(b0=1.0, eps=1.0, lam=1.0)
    win = fit_window(w, th)
    above, below = fit_above_below(th, win)
    n = 100_000
    sample = simulate_sample(w, th, SimConfig(dt=0.001, n_paths=n, seed=2024), workers=settings.WORKERS)
    emp = empirical_cdf(sample)

    t = np.linspace(win.tau0, win.tau_star, 40)
    f_above = piecewise_fpt_cdf(w, above.threshold, t)
    f_below = piecewise_fpt_cdf(w, below.threshold, t)
    assert np.all(f_above <= f_below + 1e-6)
    f = emp(t)
    band = 3.0 * np.sqrt(np.maximum(f * (1.0 - f), 1.0 / n) / n)
    assert np.all(f >= f_above - band)
    assert np.all(f <= f_below + band)


@pytest.mark.parametrize("eps", [0.2, 1.0, 5.0])
def test_riae_and_family_ordering(eps):
    w = WienerParams(mu=1.0, sigma2=0.2)
    totals = {"free": 0.0, "above": 0.0, "below": 0.0}
    for cell, lam in enumerate([0.1, 1.0, 5.0]):
        th = CurvedThreshold(b0=1.0, eps=eps, lam=lam)
        win = fit_window(w, th)
        above, below = fit_above_below(th, win)
        free = fit_free(th, win, seed=fit_between(above, below, win))
        sample = simulate_sample(
            w, th, SimConfig(dt=0.001, n_paths=100_000, seed=derive_seed(11, cell, 0)), workers=settings.WORKERS
        )
        latest = max(sample.times)
        for name, fit in (("free", free), ("above", above), ("below", below)):
            t_end = max(latest, truncation_time(w, fit.threshold))
            totals[name] += r_iae(cdf_table(w, fit.threshold, t_end), sample)
        assert totals["free"] < 0.025 * (cell + 1)
    assert totals["free"] <= max(totals["above"], totals["below"])


@pytest.mark.parametrize("eps, lam", [(0.2, 0.1), (0.2, 1.0), (0.2, 5.0), (1.0, 0.1), (5.0, 0.1)])
def test_mean_nearly_independent_of_sigma2(eps, lam):
    th = CurvedThreshold(b0=1.0, eps=eps, lam=lam)
    means = []
    for sigma2 in SIGMA2:
        w = WienerParams(mu=1.0, sigma2=sigma2)
        means.append(fpt_moments(w, _free(w, th)).mean)
    assert (max(means) - min(means)) / np.mean(means) < 0.02


def test_mean_depends_on_sigma2_for_large_amplitude():
    # with eps = 1 and lambda = 1 the spread across sigma2 is about 5%, and simulation agrees
    th = CurvedThreshold(b0=1.0, eps=1.0, lam=1.0)
    theory, simulated = [], []
    for k, sigma2 in enumerate([0.2, 1.0]):
        w = WienerParams(mu=1.0, sigma2=sigma2)
        mean = fpt_moments(w, _free(w, th)).mean
        cfg = SimConfig(dt=0.001, n_paths=100_000, seed=derive_seed(23, k, 0))
        stats, _ = empirical_stats(simulate_sample(w, th, cfg, workers=settings.WORKERS))
        se = math.sqrt(stats.variance / 100_000)
        assert abs(mean - stats.mean) < 4.0 * se + 0.005
        theory.append(mean)
        simulated.append(stats.mean)
    assert theory[1] - theory[0] > 0.02 * np.mean(theory)
    assert simulated[1] - simulated[0] > 0.02 * np.mean(simulated)


@pytest.mark.parametrize("lam", LAMBDA)
def test_small_amplitude_agreement(lam):
    w = WienerParams(mu=1.0, sigma2=0.2)
    th = CurvedThreshold(b0=1.0, eps=0.05, lam=lam)
    mean = fpt_moments(w, _free(w, th)).mean
    assert abs(mean - small_eps_mean(w, th)) / mean < 0.01


def test_variance_has_interior_minimum_in_lambda():
    w = WienerParams(mu=1.0, sigma2=0.2)
    variances = [fpt_moments(w, _free(w, CurvedThreshold(b0=1.0, eps=0.2, lam=lam))).variance for lam in LAMBDA]
    k = int(np.argmin(variances))
    assert 0 < k < len(LAMBDA) - 1


def _recovery(n_obs: int, repetitions: int, eps: float, method: str):
    truth = WienerParams(mu=1.0, sigma2=0.2)
    th = CurvedThreshold(b0=1.0, eps=eps, lam=1.0)
    estimates = []
    for rep in range(repetitions):
        cfg = SimConfig(dt=0.001, n_paths=n_obs, seed=derive_seed(5, n_obs, rep))
        estimates.append(estimate_phi(simulate_sample(truth, th, cfg, workers=1), th, method))
    return relative_errors(estimates, truth)


def test_mle_recovers_parameters():
    report = _recovery(100, 200, 1.0, "mle")
    assert abs(report.r_me_mu) < 0.01
    assert report.r_mse_mu < 0.005
    assert 0.005 <= report.r_mse_sigma2 <= 0.04
    assert _recovery(200, 200, 1.0, "mle").r_mse_sigma2 < report.r_mse_sigma2


def test_mle_beats_moment_estimators_for_large_amplitude():
    mle_report = _recovery(100, 100, 5.0, "mle")
    for method in ("me", "me_eps"):
        other = _recovery(100, 100, 5.0, method)
        assert mle_report.r_mse_mu < other.r_mse_mu
        assert mle_report.r_mse_sigma2 < other.r_mse_sigma2


def test_simulator_against_exact_constant_threshold():
    w = WienerParams(mu=1.0, sigma2=0.2)
    th = CurvedThreshold(b0=1.0, eps=0.0, lam=1.0)
    coarse = simulate_sample(w, th, SimConfig(dt=0.001, n_paths=100_000, seed=8), workers=settings.WORKERS)
    times = np.sort(np.asarray(coarse.times))
    n = coarse.n_total
    exact = ig_cdf(times, 1.0, 5.0)
    ks = max(np.max(np.arange(1, len(times) + 1) / n - exact), np.max(exact - np.arange(len(times)) / n))
    assert ks < 0.01

    fine = simulate_sample(w, th, SimConfig(dt=0.0005, n_paths=100_000, seed=9), workers=settings.WORKERS)
    a, _ = empirical_stats(coarse)
    b, _ = empirical_stats(fine)
    se = math.sqrt(a.variance / len(coarse.times) + b.variance / len(fine.times))
    assert abs(a.mean - b.mean) < 3.0 * se
