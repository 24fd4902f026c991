"""Tests for special functions, quadrature, root finding and the simplex search."""

import math

import numpy as np
import pytest
from pydantic import ValidationError
from scipy.optimize import rosen

from fptpwl.core.exceptions import (
    ConvergenceError,
    InvalidParameterError,
    NoSignChangeError,
    OrderingError,
)
from fptpwl.schemas.numerics import Bracket, Tolerance
from fptpwl.utils.numerics import (
    find_root,
    ig_cdf,
    ig_pdf,
    ig_quantile,
    integrate,
    minimize,
    normal_cdf,
    simplex_search,
)

pytestmark = pytest.mark.unit


class TestNormalCdf:
    def test_reference_values(self):
        assert normal_cdf(0.0) == 0.5
        assert normal_cdf(math.inf) == 1.0
        assert normal_cdf(-math.inf) == 0.0
        assert normal_cdf(1.96) == pytest.approx(0.9750021048517795, abs=1e-12)

    def test_monotone_on_random_grid(self):
        z = np.sort(np.random.default_rng(0).normal(scale=10.0, size=5000))
        values = normal_cdf(z)
        assert isinstance(values, np.ndarray)
        assert np.all(np.diff(values) >= 0)
        assert np.all((values >= 0) & (values <= 1))


class TestInverseGaussian:
    def test_pdf_reference_values(self):
        assert ig_pdf(1.0, 1.0, 1.0) == pytest.approx(1.0 / math.sqrt(2.0 * math.pi), rel=1e-12)
        assert ig_pdf(-1.0, 1.0, 1.0) == 0.0
        assert ig_pdf(0.0, 1.0, 1.0) == 0.0
        assert ig_pdf(2.0, 1.0, 5.0) == pytest.approx(0.0903614, rel=1e-5)

    @pytest.mark.parametrize("m, l", [(0.0, 1.0), (1.0, 0.0), (-1.0, 2.0)])
    def test_invalid_parameters(self, m, l):
        with pytest.raises(InvalidParameterError):
            ig_pdf(1.0, m, l)
        with pytest.raises(InvalidParameterError):
            ig_cdf(1.0, m, l)

    def test_cdf_reference_values(self):
        assert ig_cdf(math.inf, 1.0, 1.0) == 1.0
        assert ig_cdf(0.0, 1.0, 1.0) == 0.0
        assert ig_cdf(1.0, 1.0, 1.0) == pytest.approx(0.5 + math.exp(2.0) * normal_cdf(-2.0), abs=1e-12)
        assert ig_cdf(1.0, 1.0, 1.0) == pytest.approx(0.668102, abs=1e-6)

    def test_cdf_large_shape_does_not_overflow(self):
        # 2 l / m = 2000 would overflow a direct exponential
        value = ig_cdf(1.0, 1.0, 1000.0)
        assert math.isfinite(value)
        assert value == pytest.approx(0.5, abs=0.02)

    def test_cdf_matches_integrated_pdf(self):
        rng = np.random.default_rng(7)
        for m, l in rng.uniform(0.1, 10.0, size=(10, 2)):
            t = float(rng.uniform(0.2, 2.0) * m)
            area = integrate(lambda s: ig_pdf(s, m, l), 0.0, t)
            assert area == pytest.approx(ig_cdf(t, m, l), abs=1e-6)

    def test_quantile_inverts_cdf(self):
        rng = np.random.default_rng(3)
        for t in rng.uniform(0.3, 3.0, size=10):
            p = ig_cdf(t, 1.0, 5.0)
            assert ig_quantile(p, 1.0, 5.0) == pytest.approx(t, abs=1e-6)

    def test_quantile_lower_tail(self):
        tau0 = ig_quantile(0.005, 1.0, 5.0)
        assert 0.0 < tau0 < 1.0
        assert ig_cdf(tau0, 1.0, 5.0) == pytest.approx(0.005, abs=1e-9)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1])
    def test_quantile_rejects_closed_levels(self, p):
        with pytest.raises(InvalidParameterError):
            ig_quantile(p, 1.0, 5.0)


class TestIntegrate:
    def test_polynomials(self):
        assert integrate(lambda t: 1.0, 0.0, 1.0) == pytest.approx(1.0, abs=1e-12)
        assert integrate(lambda t: t, 0.0, 1.0) == pytest.approx(0.5, abs=1e-12)

    def test_kink_breakpoint(self):
        assert integrate(lambda t: abs(t - 0.3), 0.0, 1.0, points=[0.3]) == pytest.approx(0.29, abs=1e-10)

    def test_ig_normalization_on_half_line(self):
        assert integrate(lambda t: ig_pdf(t, 1.0, 5.0), 0.0, math.inf, points=[1.0]) == pytest.approx(1.0, abs=1e-6)

    def test_reversed_bounds(self):
        with pytest.raises(OrderingError):
            integrate(lambda t: t, 1.0, 0.0)


class TestFindRoot:
    def test_linear(self):
        assert find_root(lambda x: x - 2.0, Bracket(lo=0.0, hi=5.0)) == pytest.approx(2.0, abs=1e-9)

    def test_square_root(self):
        assert find_root(lambda x: x * x - 2.0, Bracket(lo=0.0, hi=2.0)) == pytest.approx(math.sqrt(2.0), abs=1e-9)

    def test_no_sign_change(self):
        with pytest.raises(NoSignChangeError):
            find_root(lambda x: x + 1.0, Bracket(lo=0.0, hi=5.0))

    def test_bracket_must_be_ordered(self):
        with pytest.raises(ValidationError):
            Bracket(lo=1.0, hi=0.0)


class TestSimplex:
    def test_quadratic(self):
        x = minimize(lambda v: float((v[0] - 3.0) ** 2), [0.0])
        assert x[0] == pytest.approx(3.0, abs=1e-5)

    def test_penalty_pushes_to_boundary(self):
        def objective(v):
            return 1e10 if v[0] < 0 else float((v[0] + 1.0) ** 2)

        x = minimize(objective, [2.0])
        assert x[0] == pytest.approx(0.0, abs=1e-4)
        assert x[0] >= 0.0

    def test_rosenbrock(self):
        x = minimize(rosen, [-1.2, 1.0])
        np.testing.assert_allclose(x, [1.0, 1.0], atol=1e-4)

    def test_never_worse_than_start(self):
        rng = np.random.default_rng(11)
        for start in rng.uniform(-2.0, 2.0, size=(5, 2)):
            result = simplex_search(rosen, start, tol=Tolerance(abs_tol=1e-8, rel_tol=1e-8, max_iter=20))
            assert result.fun <= rosen(start)

    def test_non_finite_start(self):
        with pytest.raises(InvalidParameterError):
            simplex_search(lambda v: math.nan, [0.0])

    def test_iteration_cap(self):
        with pytest.raises(ConvergenceError):
            minimize(rosen, [-1.2, 1.0], tol=Tolerance(abs_tol=1e-12, rel_tol=1e-12, max_iter=3))
