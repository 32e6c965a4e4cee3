"""Single-block prior: Bayes factors, shrinkage, and the sigma^2 limit.

Oracles used here: mpmath closed forms, direct quadrature over g, a
conjugate-style numeric double integral, and plain Monte Carlo over the
prior (agreement within 3 standard errors).
"""

import math

import mpmath
import numpy as np
import pytest

from blockhyperg.design import BlockPartition, CenteredDesign, fit_least_squares
from blockhyperg.errors import DomainError
from blockhyperg.hyperg import (FixedGPrior, HyperGPrior, InverseGammaParams,
                                bf_fixed_g, bf_hyper_g, bf_ratio_hyper_g,
                                log_bf_fixed_g_stats, log_bf_hyper_g_gquad,
                                log_bf_hyper_g_stats, log_bf_ratio_hyper_g,
                                posterior_mean_hyper_g, shrinkage_hyper_g,
                                shrinkage_hyper_g_stats,
                                sigma2_limit_hyper_g)

mpmath.mp.dps = 40


def _fit(n=40, p=3, seed=0, beta_scale=1.0):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, p))
    X -= X.mean(axis=0)
    y = X @ (beta_scale * rng.normal(size=p)) + rng.normal(size=n)
    y -= y.mean()
    d = CenteredDesign(y=y, X=X, partition=BlockPartition.single(p))
    return d, fit_least_squares(d)


def _mp_log_bf(a, n, p, r2):
    lead = mpmath.log(mpmath.mpf(a - 2) / (p + a - 2))
    return float(lead + mpmath.log(
        mpmath.hyp2f1(mpmath.mpf(n - 1) / 2, 1, mpmath.mpf(a + p) / 2, r2)))


class TestFixedG:
    def test_formula(self):
        g, n, p, r2 = 7.0, 30, 2, 0.4
        want = (1 + g) ** ((n - p - 1) / 2) / (1 + g * (1 - r2)) ** ((n - 1) / 2)
        assert math.exp(log_bf_fixed_g_stats(g, n, p, r2)) == pytest.approx(
            want, rel=1e-12)

    def test_g_zero_collapses(self):
        assert log_bf_fixed_g_stats(0.0, 30, 2, 0.5) == 0.0

    def test_lindley_paradox(self):
        # fixed data, R^2 < 1: the BF vanishes as g grows
        lb3 = log_bf_fixed_g_stats(1e3, 50, 3, 0.6)
        lb12 = log_bf_fixed_g_stats(1e12, 50, 3, 0.6)
        assert lb12 < lb3

    def test_information_paradox_value(self):
        # at R^2 = 1 the BF equals (1+g)^((n-p-1)/2) exactly: finite plateau
        g, n, p = 25.0, 20, 4
        assert log_bf_fixed_g_stats(g, n, p, 1.0, 0.0) == pytest.approx(
            0.5 * (n - p - 1) * math.log1p(g), rel=1e-14)

    def test_prior_object(self):
        d, fit = _fit()
        assert bf_fixed_g(FixedGPrior(4.0), fit) == pytest.approx(
            math.exp(log_bf_fixed_g_stats(4.0, fit.n, fit.p, fit.r2,
                                          fit.one_minus_r2)))
        with pytest.raises(DomainError):
            FixedGPrior(-1.0)


class TestHyperGBayesFactor:
    def test_matches_mpmath(self):
        rng = np.random.default_rng(2)
        for _ in range(40):
            a = rng.uniform(2.1, 4.0)
            p = int(rng.integers(1, 8))
            n = p + 2 + int(rng.integers(0, 60))
            r2 = rng.uniform(0.0, 0.99)
            got = log_bf_hyper_g_stats(a, n, p, r2)
            assert got == pytest.approx(_mp_log_bf(a, n, p, r2), rel=1e-9,
                                        abs=1e-10)

    def test_gquad_oracle(self):
        for a, n, p, r2 in [(3.0, 25, 2, 0.3), (2.5, 60, 5, 0.9),
                            (4.0, 15, 3, 0.05), (3.4, 200, 1, 0.97)]:
            direct = log_bf_hyper_g_stats(a, n, p, r2)
            quad = log_bf_hyper_g_gquad(a, n, p, r2)
            assert direct == pytest.approx(quad, abs=5e-10)

    def test_monte_carlo_oracle(self):
        # plain MC over the prior on g: agreement within 3 standard errors
        rng = np.random.default_rng(7)
        a, n, p, r2 = 3.0, 30, 2, 0.5
        u = rng.random(400_000)
        g = (1.0 - u) ** (-2.0 / (a - 2.0)) - 1.0  # inverse cdf of the prior
        vals = np.exp(0.5 * (n - p - 1) * np.log1p(g)
                      - 0.5 * (n - 1) * np.log1p(g * (1 - r2)))
        est, se = vals.mean(), vals.std(ddof=1) / math.sqrt(len(vals))
        want = math.exp(log_bf_hyper_g_stats(a, n, p, r2))
        assert abs(est - want) < 3 * se

    def test_conjugate_double_integral_oracle(self):
        # marginal-likelihood ratio written as an integral over (g, sigma^2)
        # collapses to the same BF; checked by tight log-space quadrature
        from blockhyperg._quadlog import adaptive_log_integral
        a, n, p, r2 = 3.2, 18, 2, 0.62
        c1, c2 = 0.5 * (n - p - 1 - a), 0.5 * (n - 1)

        def logf(x):
            g = np.exp(x)
            return x + c1 * np.log1p(g) - c2 * np.log1p(g * (1 - r2))

        val, _ = adaptive_log_integral(logf, -50.0, 80.0, rtol=1e-12,
                                       seed_points=(0.0,))
        want = math.log(0.5 * (a - 2.0)) + val
        assert log_bf_hyper_g_stats(a, n, p, r2) == pytest.approx(
            want, abs=1e-10)

    def test_unit_r2_divergent_and_band_warning(self):
        assert log_bf_hyper_g_stats(3.0, 60, 3, 1.0, 0.0) == math.inf
        with pytest.warns(RuntimeWarning):
            log_bf_hyper_g_stats(3.0, 7, 3, 1.0, 0.0)  # n in [p+a-1, p+a+1]

    def test_unit_r2_finite_when_small_n(self):
        # n < a + p - 1: the Gauss value applies
        a, n, p = 4.0, 5, 3
        got = log_bf_hyper_g_stats(a, n, p, 1.0, 0.0)
        lead = math.log(a - 2.0) - math.log(p + a - 2.0)
        m, c = 0.5 * (n - 1), 0.5 * (a + p)
        gauss = (math.lgamma(c) + math.lgamma(c - m - 1.0)
                 - math.lgamma(c - m) - math.lgamma(c - 1.0))
        assert got == pytest.approx(lead + gauss, rel=1e-12)

    def test_near_unit_r2_diverges(self):
        # n > p + a + 1 and R^2 -> 1: log BF exceeds any bound
        assert log_bf_hyper_g_stats(3.0, 40, 3, 1.0 - 1e-8, 1e-8) > 20.0

    def test_prior_object_and_validation(self):
        d, fit = _fit()
        assert bf_hyper_g(HyperGPrior(3.0), fit) == pytest.approx(
            math.exp(log_bf_hyper_g_stats(3.0, fit.n, fit.p, fit.r2,
                                          fit.one_minus_r2)))
        with pytest.raises(DomainError):
            HyperGPrior(2.0)
        with pytest.raises(DomainError):
            HyperGPrior(4.5)
        with pytest.raises(DomainError):
            log_bf_hyper_g_stats(3.0, 4, 3, 0.5)


class TestShrinkage:
    def test_ratio_of_2f1(self):
        a, n, p, r2 = 3.0, 30, 4, 0.55
        m = 0.5 * (n - 1)
        want = float(2.0 / (p + a)
                     * mpmath.hyp2f1(m, 2, (p + a) / 2 + 1, r2)
                     / mpmath.hyp2f1(m, 1, (p + a) / 2, r2))
        assert shrinkage_hyper_g_stats(a, n, p, r2) == pytest.approx(
            want, rel=1e-10)

    def test_posterior_mean_shrinks_ls(self):
        d, fit = _fit(seed=3)
        prior = HyperGPrior(3.0)
        s = shrinkage_hyper_g(prior, fit)
        assert 0.0 < s < 1.0
        np.testing.assert_allclose(posterior_mean_hyper_g(prior, fit),
                                   s * fit.beta_hat_ls)

    def test_unit_r2_limits(self):
        # saturating branch
        assert shrinkage_hyper_g_stats(3.0, 30, 3, 1.0, 0.0) == 1.0
        # small-n branch: 2 / (p + a - n + 1)
        assert shrinkage_hyper_g_stats(4.0, 3, 4, 1.0, 0.0) == pytest.approx(
            2.0 / (4 + 4.0 - 3 + 1))
        # n = 1 gives the overall minimum 2 / (p + a)
        assert shrinkage_hyper_g_stats(3.0, 1, 2, 1.0, 0.0) == pytest.approx(
            2.0 / (2 + 3.0))
        assert shrinkage_hyper_g_stats(3.0, 1, 2, 0.7) == pytest.approx(
            2.0 / (2 + 3.0))

    def test_monotone_in_r2(self):
        vals = [shrinkage_hyper_g_stats(3.0, 40, 3, r2)
                for r2 in (0.0, 0.2, 0.5, 0.8, 0.95)]
        assert all(v1 < v2 for v1, v2 in zip(vals, vals[1:]))
        assert vals[0] == pytest.approx(2.0 / (3 + 3.0), rel=1e-12)


class TestModelRatios:
    def test_ratio_is_difference_of_logs(self):
        rng = np.random.default_rng(5)
        n, p1, p2 = 50, 2, 2
        X = rng.normal(size=(n, p1 + p2))
        X -= X.mean(axis=0)
        y = X[:, :p1] @ np.array([1.0, -0.5]) + rng.normal(size=n)
        y -= y.mean()
        d_big = CenteredDesign(y=y, X=X,
                               partition=BlockPartition.single(p1 + p2))
        d_small = CenteredDesign(y=y, X=X[:, :p1],
                                 partition=BlockPartition.single(p1))
        fb, fs = fit_least_squares(d_big), fit_least_squares(d_small)
        prior = HyperGPrior(3.0)
        got = log_bf_ratio_hyper_g(prior, fb, fs)
        want = (log_bf_hyper_g_stats(3.0, n, p1 + p2, fb.r2, fb.one_minus_r2)
                - log_bf_hyper_g_stats(3.0, n, p1, fs.r2, fs.one_minus_r2))
        assert got == pytest.approx(want, rel=1e-12)
        assert bf_ratio_hyper_g(prior, fb, fs) == pytest.approx(
            math.exp(got))

    def test_rejects_mismatched_data(self):
        d1, f1 = _fit(seed=1)
        d2, f2 = _fit(seed=2)
        with pytest.raises(DomainError):
            log_bf_ratio_hyper_g(HyperGPrior(3.0), f1, f2)


class TestSigma2Limit:
    def test_parameters_and_mean(self):
        a, n, p, s2 = 3.0, 60, 4, 1.7
        ig = sigma2_limit_hyper_g(HyperGPrior(a), n, p, s2)
        assert ig.shape == pytest.approx(0.5 * (n + 1 - a - p))
        assert ig.scale == pytest.approx(2.0 / ((n - p - 1) * s2))
        assert ig.mean == pytest.approx((n - p - 1) * s2 / (n - p - a - 1))

    def test_density_normalizes(self):
        from scipy.integrate import quad
        ig = InverseGammaParams(shape=5.0, scale=0.25)
        total, _ = quad(ig.pdf, 1e-6, 200.0, limit=200)
        assert total == pytest.approx(1.0, abs=1e-7)
        mean, _ = quad(lambda x: x * ig.pdf(x), 1e-6, 500.0, limit=300)
        assert mean == pytest.approx(ig.mean, rel=1e-6)

    def test_degenerate_and_domain(self):
        ig = sigma2_limit_hyper_g(HyperGPrior(3.0), 30, 2, 0.0)
        assert math.isinf(ig.scale) and ig.mean == 0.0
        with pytest.raises(DomainError):
            sigma2_limit_hyper_g(HyperGPrior(3.0), 5, 3, 1.0)
