"""Tests for the first-passage-time law under linear and two-piece thresholds."""

import math

import numpy as np
import pytest

from fptpwl.core.exceptions import DomainError, InvalidParameterError, OrderingError
from fptpwl.schemas.process import CurvedThreshold, PiecewiseLinearThreshold, WienerParams
from fptpwl.services.fpt_law import (
    cdf_table,
    constrained_transition_density,
    fpt_moments,
    linear_fpt_cdf,
    linear_fpt_pdf,
    linear_total_mass,
    piecewise_fpt_cdf,
    piecewise_fpt_logpdf,
    piecewise_fpt_pdf,
    piecewise_fpt_survival,
    sandwich_gap,
    small_eps_mean,
    small_eps_var,
    truncation_time,
)
from fptpwl.services.threshold_fit import fit_above_below
from fptpwl.utils.numerics import ig_cdf, ig_pdf, integrate

pytestmark = pytest.mark.unit


def _knot_integral_pdf(w: WienerParams, thr: PiecewiseLinearThreshold, t: float) -> float:
    """Density after the knot from the path distribution at t1 and the linear law from there on."""
    s1 = thr.t1 - thr.t0
    lowest = w.x0 + w.mu * s1 - 12.0 * w.sigma * math.sqrt(s1)

    def integrand(x1: float) -> float:
        p = constrained_transition_density(w, thr, [(thr.t1, x1)])
        restart = WienerParams(mu=w.mu, sigma2=w.sigma2, x0=x1, t0=thr.t1)
        return p * linear_fpt_pdf(restart, thr.alpha2, thr.beta2, t)

    return integrate(integrand, lowest, thr.alpha2)


class TestLinearLaw:
    def test_reference_values(self):
        w = WienerParams(mu=1.0, sigma2=1.0)
        assert linear_fpt_pdf(w, 1.0, 0.0, 1.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-12)
        assert linear_fpt_pdf(w, 1.0, 0.0, 0.0) == 0.0
        assert linear_fpt_pdf(w, 1.0, 0.0, -1.0) == 0.0

    def test_maps_to_inverse_gaussian(self, wiener):
        # alpha = 1, beta = -1: IG(1 / 2, 1 / 0.2)
        assert linear_fpt_pdf(wiener, 1.0, -1.0, 0.5) == pytest.approx(ig_pdf(0.5, 0.5, 5.0), rel=1e-12)
        t = np.linspace(0.05, 3.0, 50)
        np.testing.assert_allclose(linear_fpt_cdf(wiener, 1.0, -1.0, t), ig_cdf(t, 0.5, 5.0), atol=1e-10)

    def test_start_on_threshold(self, wiener):
        with pytest.raises(DomainError):
            linear_fpt_pdf(wiener, 0.0, 0.0, 1.0)

    def test_defective_mass(self):
        w = WienerParams(mu=1.0, sigma2=1.0)
        assert linear_total_mass(w, 1.0, 0.5) == 1.0
        assert linear_total_mass(w, 1.0, 1.5) == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert linear_fpt_cdf(w, 1.0, 1.5, math.inf) == pytest.approx(math.exp(-1.0), rel=1e-12)
        assert linear_fpt_cdf(w, 1.0, 1.5, 1e4) == pytest.approx(math.exp(-1.0), rel=1e-9)


class TestTwoPieceDensity:
    def test_first_piece_is_linear(self, wiener, two_piece):
        t = np.linspace(0.01, 1.0, 100)
        np.testing.assert_allclose(
            piecewise_fpt_pdf(wiener, two_piece, t), linear_fpt_pdf(wiener, 2.0, -1.0, t), rtol=1e-12
        )

    def test_equal_slopes_reduce_to_linear(self):
        rng = np.random.default_rng(2024)
        t = np.linspace(1e-3, 10.0, 10_000)
        for _ in range(20):
            mu, sigma2 = rng.uniform(0.5, 2.0), rng.uniform(0.1, 1.0)
            alpha, beta, t1 = rng.uniform(0.5, 2.0), rng.uniform(-1.0, 0.4), rng.uniform(0.3, 2.0)
            w = WienerParams(mu=mu, sigma2=sigma2)
            thr = PiecewiseLinearThreshold(alpha1=alpha, beta1=beta, beta2=beta, t1=t1)
            gap = np.abs(piecewise_fpt_pdf(w, thr, t) - linear_fpt_pdf(w, alpha, beta, t))
            assert gap.max() < 1e-10

    @pytest.mark.parametrize("t", [1.2, 1.5, 2.5])
    def test_second_piece_matches_knot_integral(self, wiener, two_piece, t):
        assert piecewise_fpt_pdf(wiener, two_piece, t) == pytest.approx(
            _knot_integral_pdf(wiener, two_piece, t), rel=1e-5
        )

    def test_nonnegative_and_log_consistent(self, wiener, two_piece):
        t = np.linspace(-1.0, 20.0, 4001)
        pdf = piecewise_fpt_pdf(wiener, two_piece, t)
        assert np.all(pdf >= 0)
        assert np.all(pdf[t <= 0] == 0)
        logs = piecewise_fpt_logpdf(wiener, two_piece, t)
        positive = pdf > 0
        np.testing.assert_allclose(np.exp(logs[positive]), pdf[positive], rtol=1e-12)

    def test_mismatched_start_times(self, wiener):
        thr = PiecewiseLinearThreshold(alpha1=2.0, beta1=-1.0, beta2=0.0, t1=2.0, t0=1.0)
        with pytest.raises(InvalidParameterError):
            piecewise_fpt_pdf(wiener, thr, 1.5)


class TestTwoPieceCdf:
    def test_limits(self, wiener, two_piece):
        assert piecewise_fpt_cdf(wiener, two_piece, 0.0) == 0.0
        assert piecewise_fpt_cdf(wiener, two_piece, math.inf) == 1.0
        assert piecewise_fpt_cdf(wiener, two_piece, 50.0) == pytest.approx(1.0, abs=1e-4)

    def test_monotone_and_unsorted_input(self, wiener, two_piece):
        t = np.array([3.0, 0.5, 1.0, 2.0, 1.5, 8.0])
        values = piecewise_fpt_cdf(wiener, two_piece, t)
        order = np.argsort(t)
        assert np.all(np.diff(values[order]) >= 0)
        assert values[0] == pytest.approx(piecewise_fpt_cdf(wiener, two_piece, 3.0), abs=1e-8)

    @pytest.mark.parametrize("t", [0.6, 1.7, 3.0])
    def test_derivative_matches_pdf(self, wiener, two_piece, t):
        h = 1e-3
        slope = (piecewise_fpt_cdf(wiener, two_piece, t + h) - piecewise_fpt_cdf(wiener, two_piece, t - h)) / (2 * h)
        assert slope == pytest.approx(piecewise_fpt_pdf(wiener, two_piece, t), abs=1e-4)

    def test_survival(self, wiener, two_piece):
        t = np.array([0.5, 2.0])
        np.testing.assert_allclose(
            piecewise_fpt_survival(wiener, two_piece, t), 1.0 - piecewise_fpt_cdf(wiener, two_piece, t)
        )

    def test_defective_law(self):
        w = WienerParams(mu=1.0, sigma2=1.0)
        thr = PiecewiseLinearThreshold(alpha1=1.0, beta1=1.5, beta2=1.5, t1=1.0)
        assert piecewise_fpt_cdf(w, thr, math.inf) == pytest.approx(math.exp(-1.0), abs=1e-6)

    def test_table_matches_cdf(self, wiener, two_piece):
        table = cdf_table(wiener, two_piece, 10.0)
        t = np.array([0.3, 1.0, 1.4, 2.0, 4.0])
        np.testing.assert_allclose(table(t), piecewise_fpt_cdf(wiener, two_piece, t), atol=1e-4)
        assert table(-1.0) == 0.0
        assert table(100.0) == pytest.approx(table(10.0))

    def test_table_requires_positive_span(self, wiener, two_piece):
        with pytest.raises(OrderingError):
            cdf_table(wiener, two_piece, 0.0)

    def test_stochastic_ordering_of_fitted_bounds(self, wiener, curved, window):
        above, below = fit_above_below(curved, window)
        t = np.linspace(window.tau0, window.tau_star, 25)
        upper = piecewise_fpt_cdf(wiener, above.threshold, t)
        lower = piecewise_fpt_cdf(wiener, below.threshold, t)
        assert np.all(upper <= lower + 1e-6)
        assert np.all(sandwich_gap(wiener, above.threshold, below.threshold, t) >= -1e-6)


class TestMoments:
    def test_constant_threshold(self, wiener):
        thr = PiecewiseLinearThreshold(alpha1=1.0, beta1=0.0, beta2=0.0, t1=1.0)
        moments = fpt_moments(wiener, thr)
        assert moments.mean == pytest.approx(1.0, abs=1e-4)
        assert moments.variance == pytest.approx(0.2, abs=1e-4)
        assert moments.cv == pytest.approx(math.sqrt(0.2), abs=1e-4)
        assert moments.total_mass == pytest.approx(1.0, abs=1e-6)

    def test_linear_threshold_mean(self, wiener):
        thr = PiecewiseLinearThreshold(alpha1=1.0, beta1=-0.5, beta2=-0.5, t1=0.7)
        assert fpt_moments(wiener, thr).mean == pytest.approx(1.0 / 1.5, abs=1e-4)

    def test_moments_follow_start_time(self):
        w = WienerParams(mu=1.0, sigma2=0.2, t0=5.0)
        thr = PiecewiseLinearThreshold(alpha1=1.0, beta1=0.0, beta2=0.0, t1=6.0, t0=5.0)
        assert fpt_moments(w, thr).mean == pytest.approx(1.0, abs=1e-4)

    def test_two_piece_normalization(self, wiener, two_piece):
        moments = fpt_moments(wiener, two_piece)
        assert moments.total_mass == pytest.approx(1.0, abs=1e-4)
        assert 0.0 < moments.mean < 2.0
        assert moments.variance == pytest.approx(moments.second_moment - moments.mean ** 2, abs=1e-9)

    def test_truncation_time(self, wiener, two_piece):
        end = truncation_time(wiener, two_piece)
        assert piecewise_fpt_cdf(wiener, two_piece, end) > 1.0 - 1e-6

    def test_requires_positive_effective_drift(self, wiener):
        thr = PiecewiseLinearThreshold(alpha1=1.0, beta1=0.0, beta2=1.5, t1=1.0)
        with pytest.raises(InvalidParameterError):
            fpt_moments(wiener, thr)


class TestConstrainedDensity:
    def test_far_threshold_gives_gaussian_kernel(self):
        w = WienerParams(mu=1.0, sigma2=1.0)
        thr = PiecewiseLinearThreshold(alpha1=50.0, beta1=0.0, beta2=0.0, t1=5.0)
        value = constrained_transition_density(w, thr, [(1.0, 1.0)])
        assert value == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-12)

    def test_absorbed_at_threshold(self):
        w = WienerParams(mu=1.0, sigma2=1.0)
        thr = PiecewiseLinearThreshold(alpha1=2.0, beta1=0.0, beta2=0.0, t1=5.0)
        assert constrained_transition_density(w, thr, [(1.0, 2.0)]) == 0.0
        assert constrained_transition_density(w, thr, [(1.0, 1.0), (2.0, 2.0)]) == 0.0

    def test_image_factor(self):
        w = WienerParams(mu=1.0, sigma2=1.0)
        thr = PiecewiseLinearThreshold(alpha1=2.0, beta1=0.0, beta2=0.0, t1=5.0)
        kernel = 1.0 / math.sqrt(2.0 * math.pi)
        expected = kernel * (1.0 - math.exp(-2.0 * 1.0 * 2.0))
        assert constrained_transition_density(w, thr, [(1.0, 1.0)]) == pytest.approx(expected, rel=1e-12)

    def test_invalid_points(self):
        w = WienerParams(mu=1.0, sigma2=1.0)
        thr = PiecewiseLinearThreshold(alpha1=2.0, beta1=0.0, beta2=0.0, t1=5.0)
        with pytest.raises(DomainError):
            constrained_transition_density(w, thr, [(1.0, 3.0)])
        with pytest.raises(OrderingError):
            constrained_transition_density(w, thr, [(1.0, 0.0), (1.0, 0.5)])
        with pytest.raises(InvalidParameterError):
            constrained_transition_density(w, thr, [(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)])


class TestSmallAmplitude:
    def test_reference_values(self, wiener):
        th = CurvedThreshold(b0=1.0, eps=0.05, lam=1.0)
        assert small_eps_mean(wiener, th) == pytest.approx(
            1.0 + 0.05 * math.exp((1.0 - math.sqrt(1.4)) / 0.2), rel=1e-12
        )
        assert small_eps_mean(wiener, th) == pytest.approx(1.0200042, abs=1e-6)
        assert small_eps_var(wiener, th) == pytest.approx(0.1978057, abs=1e-6)

    def test_zero_amplitude(self, wiener, flat):
        assert small_eps_mean(wiener, flat) == pytest.approx(1.0)
        assert small_eps_var(wiener, flat) == pytest.approx(0.2)

    def test_fast_decay(self, wiener):
        th = CurvedThreshold(b0=1.0, eps=0.05, lam=1e6)
        assert small_eps_mean(wiener, th) == pytest.approx(1.0, abs=1e-12)

    def test_requires_positive_gap(self):
        with pytest.raises(DomainError):
            small_eps_mean(WienerParams(mu=1.0, sigma2=0.2, x0=1.0), CurvedThreshold(b0=1.0, eps=0.05, lam=1.0))

    def test_shifted_start_uses_distance(self, wiener):
        shifted = WienerParams(mu=1.0, sigma2=0.2, x0=0.3)
        th = CurvedThreshold(b0=1.3, eps=0.05, lam=1.0)
        base = CurvedThreshold(b0=1.0, eps=0.05, lam=1.0)
        assert small_eps_mean(shifted, th) == pytest.approx(small_eps_mean(wiener, base), rel=1e-12)
        assert small_eps_var(shifted, th) == pytest.approx(small_eps_var(wiener, base), rel=1e-12)
