"""Hypergeometric and incomplete-gamma routines against mpmath."""

import math

import mpmath
import numpy as np
import pytest

from blockhyperg.errors import DomainError, NoConvergence
from blockhyperg.special import (hyp2f1, hyp2f1_log, hyp2f1_near1_scaled,
                                 log_lower_inc_gamma, log_series_2f1,
                                 lower_inc_gamma)

mpmath.mp.dps = 40


def _mp_2f1_log(a, b, c, z):
    return float(mpmath.log(mpmath.hyp2f1(a, b, c, z)))


def test_hyp2f1_values_match_mpmath():
    rng = np.random.default_rng(11)
    for _ in range(120):
        b = rng.uniform(0.5, 3.0)
        c = b + rng.uniform(0.3, 4.0)
        a = rng.uniform(0.5, 40.0)
        z = rng.uniform(0.0, 0.95)
        got = hyp2f1_log(a, b, c, z)
        want = _mp_2f1_log(a, b, c, z)
        assert got == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_hyp2f1_log_large_parameters():
    # values far beyond double range stay usable in log form
    cases = [(499.5, 1.0, 3.5, 0.99), (2000.0, 2.0, 5.0, 0.999),
             (49999.5, 1.0, 2.5, 1.0 - 1e-9)]
    for a, b, c, z in cases:
        got = hyp2f1_log(a, b, c, z)
        want = _mp_2f1_log(a, b, c, z)
        assert got == pytest.approx(want, rel=1e-9)


def test_hyp2f1_one_minus_z_precision():
    # 1-z supplied exactly; rounded z alone would lose the answer
    a, b, c = 600.5, 1.0, 3.0
    delta = 1e-13
    got = hyp2f1_log(a, b, c, 1.0 - delta, one_minus_z=delta)
    want = float(mpmath.log(mpmath.hyp2f1(a, b, c,
                                          mpmath.mpf(1) - mpmath.mpf(delta))))
    assert got == pytest.approx(want, rel=1e-8)


def test_hyp2f1_at_unit_argument_gauss_value():
    a, b, c = 2.0, 1.0, 6.0  # c - a - b = 3 > 0
    want = float(mpmath.log(
        mpmath.gamma(c) * mpmath.gamma(c - a - b)
        / (mpmath.gamma(c - a) * mpmath.gamma(c - b))))
    assert hyp2f1_log(a, b, c, 1.0) == pytest.approx(want, rel=1e-12)
    with pytest.raises(DomainError):
        hyp2f1_log(6.0, 1.0, 3.0, 1.0)


def test_hyp2f1_trivials():
    assert hyp2f1(3.0, 1.0, 2.0, 0.0) == 1.0
    assert hyp2f1_log(7.5, 2.0, 4.0, 0.0) == 0.0


def test_hyp2f1_refuses_near_one_divergent():
    with pytest.raises(NoConvergence):
        hyp2f1(10.0, 1.0, 2.0, 1.0 - 1e-13)


def test_hyp2f1_domain_checks():
    with pytest.raises(DomainError):
        hyp2f1(-1.0, 1.0, 2.0, 0.5)
    with pytest.raises(DomainError):
        hyp2f1(1.0, 2.0, 1.5, 0.5)  # c <= b
    with pytest.raises(DomainError):
        hyp2f1(1.0, 1.0, 2.0, 1.5)


def test_series_route_alone():
    got = log_series_2f1(5.0, 1.5, 4.0, 0.7)
    assert got == pytest.approx(_mp_2f1_log(5.0, 1.5, 4.0, 0.7), rel=1e-12)


def test_near1_scaled_gamma_identity():
    # (1-z)^(a+b-c) 2F1 -> Gamma(c)Gamma(a+b-c)/(Gamma(a)Gamma(b)) as z -> 1
    rng = np.random.default_rng(5)
    for _ in range(20):
        b = rng.uniform(0.8, 2.0)
        c = b + rng.uniform(0.5, 2.0)
        a = c - b + rng.uniform(1.0, 8.0)  # a + b - c > 0
        z = 1.0 - 1e-6
        got = hyp2f1_near1_scaled(a, b, c, z)
        want = float(mpmath.gamma(c) * mpmath.gamma(a + b - c)
                     / (mpmath.gamma(a) * mpmath.gamma(b)))
        assert got == pytest.approx(want, rel=1e-4)


def test_near1_scaled_rejects_convergent_regime():
    with pytest.raises(DomainError):
        hyp2f1_near1_scaled(1.0, 1.0, 4.0, 0.9)


def test_lower_inc_gamma_against_mpmath():
    rng = np.random.default_rng(3)
    for _ in range(60):
        s = rng.uniform(0.2, 30.0)
        x = rng.uniform(0.0, 80.0)
        if x == 0.0:
            continue
        got = log_lower_inc_gamma(s, x)
        want = float(mpmath.log(mpmath.gammainc(s, 0, x)))
        assert got == pytest.approx(want, rel=1e-11, abs=1e-11)


def test_lower_inc_gamma_extreme_arguments():
    # saturation: gamma(s, x) -> Gamma(s) for huge x
    assert log_lower_inc_gamma(2.5, 4.8e16) == pytest.approx(
        math.lgamma(2.5), rel=1e-14)
    # tiny x: gamma(s, x) ~ x^s / s
    s, x = 1.75, 1e-12
    assert log_lower_inc_gamma(s, x) == pytest.approx(
        s * math.log(x) - math.log(s), rel=1e-10)
    assert lower_inc_gamma(3.0, 0.0) == 0.0
    with pytest.raises(DomainError):
        log_lower_inc_gamma(-1.0, 2.0)
