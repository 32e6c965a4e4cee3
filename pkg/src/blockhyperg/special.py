"""Gaussian hypergeometric 2F1 and the lower incomplete gamma function.

Regime: 2F1(a, b; c; z) with a > 0, c > b > 0 and 0 <= z < 1, which keeps the
Gauss series all-positive and the Euler integral

    2F1(a,b;c;z) = [1/B(b, c-b)] * int_0^1 t^{b-1} (1-t)^{c-b-1} (1-t z)^{-a} dt

finite. Two independent evaluation routes are kept: the scaled power series
(Kahan-compensated) and adaptive quadrature of the Euler integral carried out
in log space so values far beyond double range remain usable through
hyp2f1_log.
"""

from __future__ import annotations

import math

import numpy as np

from ._quadlog import adaptive_log_integral
from .errors import DomainError, NoConvergence

_SERIES_BUDGET = 2_000_000
_LOG_HUGE = 700.0


def _validate(a: float, b: float, c: float, z: float) -> None:
    if not (a > 0 and b > 0 and c > b):
        raise DomainError(f"need a > 0 and c > b > 0, got a={a}, b={b}, c={c}")
    if not (0.0 <= z < 1.0):
        raise DomainError(f"need 0 <= z < 1, got z={z}")


def _series_terms_estimate(a: float, b: float, c: float, z: float) -> float:
    if z <= 0.0:
        return 1.0
    lam = -math.log(z)
    # terms behave like k^(a+b-c-1) z^k; peak + decay length
    return (max(0.0, a + b - c) + 60.0) / max(lam, 1e-18) + 60.0


def log_series_2f1(a: float, b: float, c: float, z: float,
                   budget: int = _SERIES_BUDGET) -> float:
    """log of the Gauss series, scaled accumulation, Kahan-compensated.

    All terms are positive in the supported regime. Raises NoConvergence if
    the term budget is exhausted before the tail is negligible.
    """
    if z == 0.0:
        return 0.0
    logscale = 0.0
    total = 1.0
    comp = 0.0  # Kahan compensation across chunk sums
    term = 1.0
    k = 0
    chunk = 4096
    while k < budget:
        ks = np.arange(k, k + chunk, dtype=float)
        ratios = (a + ks) * (b + ks) * z / ((c + ks) * (1.0 + ks))
        # keep each cumprod inside double range
        pos = 0
        while pos < chunk:
            r0 = max(ratios[pos], 1.0)
            span = int(min(chunk - pos, max(8, 200.0 / max(1.0, math.log10(r0) * 1.2))))
            terms = term * np.cumprod(ratios[pos:pos + span])
            s = math.fsum(terms)
            y = s - comp
            t = total + y
            comp = (t - total) - y
            total = t
            term = float(terms[-1])
            pos += span
            # rescale early: the next span may grow by ~200 decades
            if total > 1e60 or term > 1e60:
                logscale += math.log(total)
                term /= total
                comp /= total
                total = 1.0
        k += chunk
        last_ratio = float(ratios[-1])
        if last_ratio < 1.0 and term < total * 1e-18 * (1.0 - last_ratio):
            return math.log(total) + logscale
    raise NoConvergence(
        f"2F1 series exceeded {budget} terms (a={a}, b={b}, c={c}, z={z})"
    )


def _log_euler_quad(a: float, b: float, c: float, z: float,
                    one_minus_z: float, *, rtol: float = 1e-12,
                    n_nodes: int = 12) -> float:
    """log of the (unnormalized) Euler integral via graded log-space panels.

    Split at t = 1/2; each half is integrated in a log coordinate so the
    endpoint power laws t^{b-1} and (1-t)^{c-b-1} are resolved exactly, and
    1 - t z is evaluated as one_minus_z + z*(1-t) near t = 1 (no cancellation
    even when 1-z ~ 1e-16).
    """
    delta = one_minus_z
    log_half = math.log(0.5)

    def logf_left(x):
        t = np.exp(x)
        return b * x + (c - b - 1.0) * np.log1p(-t) - a * np.log1p(-z * t)

    lo_left = log_half - (60.0 + abs(c - b - 1.0)) / b
    la, ea = adaptive_log_integral(logf_left, lo_left, log_half,
                                   rtol=rtol, n_nodes=n_nodes)

    beta = c - b
    if a > beta and z > 0:
        w_peak = beta * delta / (z * (a - beta))
        x_peak = math.log(min(0.5, max(w_peak, 1e-300)))
    else:
        x_peak = log_half
    lo_right = x_peak - (60.0 + abs(b - 1.0)) / beta

    def logf_right(x):
        w = np.exp(x)
        return beta * x + (b - 1.0) * np.log1p(-w) - a * np.log(delta + z * w)

    seeds = (x_peak,) if lo_right < x_peak < log_half else ()
    lb, eb = adaptive_log_integral(logf_right, lo_right, log_half,
                                   rtol=rtol, seed_points=seeds,
                                   n_nodes=n_nodes)
    return float(np.logaddexp(la, lb))


def _log_beta(b: float, cb: float) -> float:
    return math.lgamma(b) + math.lgamma(cb) - math.lgamma(b + cb)


def hyp2f1_log(a: float, b: float, c: float, z: float,
               one_minus_z: float | None = None) -> float:
    """log 2F1(a,b;c;z) for the supported regime; overflow-safe.

    one_minus_z may be passed when 1-z is known to more precision than the
    rounded z (extreme R-squared sweeps). z may equal 1 when c-a-b > 0, in
    which case the Gauss summation value is returned.
    """
    delta = 1.0 - z if one_minus_z is None else one_minus_z
    if one_minus_z is not None:
        z = 1.0 - one_minus_z if one_minus_z > 1e-14 else z
    if delta <= 0.0:
        if c - a - b > 0.0:
            return (math.lgamma(c) + math.lgamma(c - a - b)
                    - math.lgamma(c - a) - math.lgamma(c - b))
        raise DomainError("2F1 diverges at z=1 when a+b-c >= 0")
    _validate(a, b, c, min(z, 1.0 - 1e-16) if z >= 1.0 else z)
    if z == 0.0:
        return 0.0
    if z <= 0.95 or _series_terms_estimate(a, b, c, z) <= 60_000:
        return log_series_2f1(a, b, c, z)
    return _log_euler_quad(a, b, c, z, delta) - _log_beta(b, c - b)


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Dual-route 2F1: power series cross-checked against Euler quadrature.

    Raises NoConvergence when the two routes disagree beyond 1e-8 relative,
    when z > 1-1e-12 in the divergent regime a+b-c > 0, or when the value
    overflows doubles (use hyp2f1_log there).
    """
    _validate(a, b, c, z)
    if a + b - c > 0 and z > 1.0 - 1e-12:
        raise NoConvergence(
            "z too close to 1 in the divergent regime; use hyp2f1_near1_scaled "
            "or hyp2f1_log")
    if z == 0.0:
        return 1.0
    delta = 1.0 - z
    log_quad = _log_euler_quad(a, b, c, z, delta) - _log_beta(b, c - b)
    if _series_terms_estimate(a, b, c, z) <= 500_000:
        log_primary = log_series_2f1(a, b, c, z)
    else:
        # series infeasible: second independent route is a refined quadrature
        log_primary = (_log_euler_quad(a, b, c, z, delta, rtol=1e-13,
                                       n_nodes=20)
                       - _log_beta(b, c - b))
    if abs(log_primary - log_quad) > 1e-8:
        raise NoConvergence(
            f"2F1 routes disagree: series={log_primary}, quad={log_quad}")
    log_val = log_primary if z <= 0.95 else log_quad
    if log_val > _LOG_HUGE:
        raise NoConvergence("2F1 value overflows double range; use hyp2f1_log")
    return math.exp(log_val)


def hyp2f1_near1_scaled(a: float, b: float, c: float, z: float,
                        one_minus_z: float | None = None) -> float:
    """(1-z)^(a+b-c) * 2F1(a,b;c;z); finite as z -> 1 when a+b-c > 0."""
    if a + b - c <= 0:
        raise DomainError("scaled form requires a + b - c > 0")
    delta = 1.0 - z if one_minus_z is None else one_minus_z
    if delta <= 0:
        raise DomainError("need z < 1")
    return math.exp((a + b - c) * math.log(delta)
                    + hyp2f1_log(a, b, c, z, one_minus_z=delta))


def log_lower_inc_gamma(s: float, x: float) -> float:
    """log of gamma(s, x) = int_0^x t^(s-1) e^(-t) dt.

    Series for x < s+1, Lentz continued fraction otherwise; relative error
    target 1e-12 or better.
    """
    if s <= 0 or x < 0:
        raise DomainError(f"need s > 0 and x >= 0, got s={s}, x={x}")
    if x == 0.0:
        return -math.inf
    if x < s + 1.0:
        # gamma(s,x) = x^s e^-x * sum_k x^k / (s (s+1) ... (s+k))
        term = 1.0 / s
        total = term
        comp = 0.0
        for k in range(1, 10_000):
            term *= x / (s + k)
            y = term - comp
            t = total + y
            comp = (t - total) - y
            total = t
            if term < total * 1e-17:
                return s * math.log(x) - x + math.log(total)
        raise NoConvergence("incomplete gamma series stalled")
    # for very large x the upper tail underflows entirely
    if (s - 1.0) * math.log(x) - x - math.lgamma(s) < -40.0:
        return math.lgamma(s)
    # continued fraction for the upper function, then P = 1 - Q
    tiny = 1e-300
    b_cf = x + 1.0 - s
    c_cf = 1.0 / tiny
    d_cf = 1.0 / b_cf
    h = d_cf
    for i in range(1, 10_000):
        an = -i * (i - s)
        b_cf += 2.0
        d_cf = an * d_cf + b_cf
        if abs(d_cf) < tiny:
            d_cf = tiny
        c_cf = b_cf + an / c_cf
        if abs(c_cf) < tiny:
            c_cf = tiny
        d_cf = 1.0 / d_cf
        delta = d_cf * c_cf
        h *= delta
        if abs(delta - 1.0) < 1e-16:
            log_q = s * math.log(x) - x - math.lgamma(s) + math.log(h)
            q = math.exp(log_q)
            # x >= s+1 keeps q comfortably below 1
            return math.log1p(-q) + math.lgamma(s)
    raise NoConvergence("incomplete gamma continued fraction stalled")


def lower_inc_gamma(s: float, x: float) -> float:
    if s <= 0 or x < 0:
        raise DomainError(f"need s > 0 and x >= 0, got s={s}, x={x}")
    if x == 0.0:
        return 0.0
    return math.exp(log_lower_inc_gamma(s, x))
