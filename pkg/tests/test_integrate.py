"""Cross-checks between the three routes for the shrinkage integrals."""

import math

import mpmath
import numpy as np
import pytest

from blockhyperg.errors import IntegralDiverges, NoConvergence
from blockhyperg.integrate import (block_integrals_gamma1d,
                                   block_integrals_qmc,
                                   block_integrals_quadrature)

mpmath.mp.dps = 30


def _draw(rng, k, spread=1.0):
    bpow = rng.uniform(0.1, 2.5, size=k)
    raw = rng.dirichlet(np.ones(k + 1))
    rho = raw[:k] * spread
    delta = 1.0 - rho.sum()
    m = rng.uniform(5.0, 400.0)
    return bpow, rho, delta, m


class TestTensorVsGamma1d:
    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_random_instances(self, k):
        rng = np.random.default_rng(100 + k)
        for _ in range(6):
            bpow, rho, delta, m = _draw(rng, k)
            quad = block_integrals_quadrature(bpow, rho, delta, m)
            oracle = block_integrals_gamma1d(bpow, rho, delta, m)
            assert quad.log_i0 == pytest.approx(oracle.log_i0, abs=2e-6)
            np.testing.assert_allclose(quad.t_mean, oracle.t_mean,
                                       atol=2e-6)

    def test_extreme_delta(self):
        # near-unit total R^2, carried exactly through delta
        bpow = np.array([0.75, 1.25])
        rho = np.array([0.9, 0.1 - 1e-17])
        delta = 1e-17
        m = 24.5  # small enough that the integral stays proper
        quad = block_integrals_quadrature(bpow, rho, delta, m)
        oracle = block_integrals_gamma1d(bpow, rho, delta, m)
        assert quad.log_i0 == pytest.approx(oracle.log_i0, abs=1e-6)

    def test_k1_closed_form(self):
        # J(0) = 2F1(m, 1; b+2; z) / (b+1) at z = rho/(delta+rho) scaled
        b, rho, m = 0.5, 0.85, 30.0
        delta = 1.0 - rho
        res = block_integrals_quadrature(np.array([b]), np.array([rho]),
                                         delta, m)
        want = float(mpmath.log(
            mpmath.hyp2f1(m, 1, b + 2, rho) / (b + 1)))
        assert res.log_i0 == pytest.approx(want, abs=1e-9)
        want_ax = float(mpmath.log(
            mpmath.hyp2f1(m, 1, b + 3, rho) / (b + 2)))
        assert res.log_i_axis[0] == pytest.approx(want_ax, abs=1e-9)


class TestQmc:
    @pytest.mark.parametrize("k", [4, 5])
    def test_against_gamma1d(self, k):
        rng = np.random.default_rng(40 + k)
        bpow, rho, delta, m = _draw(rng, k)
        res = block_integrals_qmc(bpow, rho, delta, m, seed=1)
        oracle = block_integrals_gamma1d(bpow, rho, delta, m)
        tol = max(1e-5, 3 * res.error)
        assert abs(res.log_i0 - oracle.log_i0) < tol
        np.testing.assert_allclose(res.t_mean, oracle.t_mean, atol=1e-4)

    def test_agrees_with_quadrature_small_k(self):
        # module invariant: the two main routes agree on shared ground
        rng = np.random.default_rng(77)
        for _ in range(4):
            bpow, rho, delta, m = _draw(rng, 3)
            q = block_integrals_quadrature(bpow, rho, delta, m)
            s = block_integrals_qmc(bpow, rho, delta, m, seed=5)
            assert abs(q.log_i0 - s.log_i0) < max(1e-5, 3 * s.error)

    def test_deterministic_given_seed(self):
        bpow = np.array([0.5, 0.5, 1.0, 1.5])
        rho = np.array([0.2, 0.1, 0.3, 0.15])
        r1 = block_integrals_qmc(bpow, rho, 0.25, 80.0, seed=9)
        r2 = block_integrals_qmc(bpow, rho, 0.25, 80.0, seed=9)
        assert r1.log_i0 == r2.log_i0
        r3 = block_integrals_qmc(bpow, rho, 0.25, 80.0, seed=10)
        assert r1.log_i0 != r3.log_i0


class TestEdgeCases:
    def test_all_axes_inactive(self):
        bpow = np.array([0.5, 1.0])
        res = block_integrals_quadrature(bpow, np.zeros(2), 1.0, 20.0)
        want = -float(np.log(bpow + 1.0).sum())
        assert res.log_i0 == pytest.approx(want, rel=1e-12)
        # per-axis moment swaps one 1/(b+1) for 1/(b+2)
        np.testing.assert_allclose(
            np.exp(res.log_i_axis - res.log_i0),
            (bpow + 1.0) / (bpow + 2.0), rtol=1e-12)

    def test_some_axes_inactive(self):
        bpow = np.array([0.75, 1.5])
        rho = np.array([0.6, 0.0])
        quad = block_integrals_quadrature(bpow, rho, 0.4, 35.0)
        oracle = block_integrals_gamma1d(bpow, rho, 0.4, 35.0)
        assert quad.log_i0 == pytest.approx(oracle.log_i0, abs=1e-8)
        np.testing.assert_allclose(quad.t_mean, oracle.t_mean, atol=1e-8)

    def test_divergence_detected(self):
        # delta = 0 and m >= sum(b+1): improper
        bpow = np.array([0.5, 0.5])
        rho = np.array([0.7, 0.3])
        with pytest.raises(IntegralDiverges):
            block_integrals_quadrature(bpow, rho, 0.0, 10.0)
        with pytest.raises(IntegralDiverges):
            block_integrals_gamma1d(bpow, rho, 0.0, 10.0)

    def test_delta_zero_proper_case(self):
        # m below the propriety threshold: finite even at delta = 0
        bpow = np.array([1.5, 2.0])
        rho = np.array([0.7, 0.3])
        m = 3.0  # sum(b+1) = 6.5 > m
        quad = block_integrals_quadrature(bpow, rho, 0.0, m)
        oracle = block_integrals_gamma1d(bpow, rho, 0.0, m)
        assert quad.log_i0 == pytest.approx(oracle.log_i0, abs=1e-7)

    def test_loose_rtol_stays_within_band(self):
        rng = np.random.default_rng(8)
        bpow, rho, delta, m = _draw(rng, 3)
        fast = block_integrals_quadrature(bpow, rho, delta, m, rtol=1e-4)
        tight = block_integrals_quadrature(bpow, rho, delta, m)
        assert fast.n_evals < tight.n_evals
        assert fast.log_i0 == pytest.approx(tight.log_i0, abs=1e-4)
