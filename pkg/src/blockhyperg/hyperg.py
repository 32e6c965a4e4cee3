"""Fixed-g and hyper-g priors: Bayes factors against the null model,
shrinkage factors, posterior means, and the large-sample sigma^2 posterior.

All Bayes factors are computed and stored as logs; linear values are exposed
on demand. Drifting-sequence experiments overflow doubles otherwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._quadlog import adaptive_log_integral
from .design import FitSummary
from .errors import DomainError
from .special import hyp2f1_log

LOG_BF_INF = math.inf


@dataclass(frozen=True)
class FixedGPrior:
    """Conventional g prior with a fixed scale g > 0 (g = 0 collapses to
    the null model and is allowed for boundary checks)."""

    g: float

    def __post_init__(self) -> None:
        if not (self.g >= 0.0 and math.isfinite(self.g)):
            raise DomainError(f"need finite g >= 0, got g={self.g}")


@dataclass(frozen=True)
class HyperGPrior:
    """Shrinkage-mixing prior with density ((a-2)/2)(1+g)^(-a/2), 2 < a <= 4."""

    a: float = 3.0

    def __post_init__(self) -> None:
        if not (2.0 < self.a <= 4.0):
            raise DomainError(f"need 2 < a <= 4, got a={self.a}")


@dataclass(frozen=True)
class InverseGammaParams:
    """Inverse gamma with density x^(-shape-1) exp(-1/(scale x)) / (Gamma(shape) scale^shape).

    In this parameterization the mean is 1/(scale (shape - 1)). A degenerate
    distribution at 0 is encoded by scale = +inf.
    """

    shape: float
    scale: float

    @property
    def mean(self) -> float:
        if self.shape <= 1.0:
            raise DomainError("mean undefined for shape <= 1")
        if math.isinf(self.scale):
            return 0.0
        return 1.0 / (self.scale * (self.shape - 1.0))

    def logpdf(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        return (-(self.shape + 1.0) * np.log(x) - 1.0 / (self.scale * x)
                - math.lgamma(self.shape)
                - self.shape * math.log(self.scale))

    def pdf(self, x: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(x))


def _resolve_r2(r2: float, one_minus_r2: float | None) -> tuple[float, float]:
    if not (0.0 <= r2 <= 1.0):
        raise DomainError(f"need 0 <= R^2 <= 1, got {r2}")
    omr2 = (1.0 - r2) if one_minus_r2 is None else float(one_minus_r2)
    if omr2 < 0.0:
        raise DomainError(f"need 1 - R^2 >= 0, got {omr2}")
    return float(r2), omr2


def log_bf_fixed_g_stats(g: float, n: int, p: int, r2: float,
                         one_minus_r2: float | None = None) -> float:
    """log of (1+g)^((n-p-1)/2) / [1 + g(1-R^2)]^((n-1)/2)."""
    if n <= p + 1:
        raise DomainError(f"need n > p + 1, got n={n}, p={p}")
    r2, omr2 = _resolve_r2(r2, one_minus_r2)
    if g == 0.0:
        return 0.0
    return (0.5 * (n - p - 1) * math.log1p(g)
            - 0.5 * (n - 1) * math.log1p(g * omr2))


def bf_fixed_g(prior: FixedGPrior, fit: FitSummary) -> float:
    return math.exp(log_bf_fixed_g_stats(prior.g, fit.n, fit.p, fit.r2,
                                         fit.one_minus_r2))


def log_bf_hyper_g_stats(a: float, n: int, p: int, r2: float,
                         one_minus_r2: float | None = None) -> float:
    """log of (a-2)/(p+a-2) * 2F1((n-1)/2, 1; (a+p)/2; R^2).

    At R^2 = 1 exactly: finite closed-form limit when n < a+p-1, otherwise
    a +inf sentinel (with a warning in the narrow band n <= p+a+1 where the
    large-sample divergence argument does not directly apply).
    """
    if n <= p + 1:
        raise DomainError(f"need n > p + 1, got n={n}, p={p}")
    r2, omr2 = _resolve_r2(r2, one_minus_r2)
    lead = math.log(a - 2.0) - math.log(p + a - 2.0)
    if omr2 == 0.0 and n >= a + p - 1.0:
        if n <= p + a + 1.0:
            warnings.warn(
                "exact unit R^2 with n in [p+a-1, p+a+1]: reporting the "
                "divergent limit", RuntimeWarning, stacklevel=2)
        return LOG_BF_INF
    z = r2 if omr2 > 0.0 else 1.0
    return lead + hyp2f1_log(0.5 * (n - 1), 1.0, 0.5 * (a + p), z,
                             one_minus_z=omr2)


def bf_hyper_g(prior: HyperGPrior, fit: FitSummary) -> float:
    return math.exp(log_bf_hyper_g_stats(prior.a, fit.n, fit.p, fit.r2,
                                         fit.one_minus_r2))


def log_bf_hyper_g_gquad(a: float, n: int, p: int, r2: float,
                         one_minus_r2: float | None = None,
                         rtol: float = 1e-11) -> float:
    """Same Bayes factor through direct quadrature over g (cross-check form).

    Integrates (1+g)^((n-p-1-a)/2) [1+g(1-R^2)]^(-(n-1)/2) (a-2)/2 dg in
    x = log g coordinates.
    """
    if n <= p + 1:
        raise DomainError(f"need n > p + 1, got n={n}, p={p}")
    r2, omr2 = _resolve_r2(r2, one_minus_r2)
    if omr2 <= 0.0:
        raise DomainError("g-space quadrature form requires R^2 < 1")
    c1 = 0.5 * (n - p - 1 - a)
    c2 = 0.5 * (n - 1)

    def logf(x: np.ndarray) -> np.ndarray:
        g = np.exp(x)
        return x + c1 * np.log1p(g) - c2 * np.log1p(g * omr2)

    # integrand ~ g below 1, ~ g^(1 + c1 - c2) above max(1, 1/(1-R^2))
    tail_rate = c2 - c1 - 1.0
    if tail_rate <= 0.0:
        raise DomainError("g integral diverges for these (n, p, a)")
    hi = math.log(max(1.0, 1.0 / omr2)) + (60.0 + abs(c1) + abs(c2)) / tail_rate
    val, _ = adaptive_log_integral(logf, -60.0, hi, rtol=rtol,
                                   seed_points=(0.0,))
    return math.log(0.5 * (a - 2.0)) + val


def shrinkage_hyper_g_stats(a: float, n: int, p: int, r2: float,
                            one_minus_r2: float | None = None) -> float:
    """Posterior mean of g/(1+g): 2/(p+a) times a ratio of two 2F1 values.

    At R^2 = 1 exactly the limits are 1 when n >= p+a-1 and 2/(p+a-n+1)
    otherwise (minimum 2/(p+a) at n = 1). Accepts any n >= 1: the formula
    is well defined below the fitting threshold and the boundary cases
    matter for the small-n limit analysis.
    """
    if n < 1:
        raise DomainError(f"need n >= 1, got n={n}")
    r2, omr2 = _resolve_r2(r2, one_minus_r2)
    if omr2 == 0.0:
        if n >= p + a - 1.0:
            return 1.0
        return 2.0 / (p + a - n + 1.0)
    m = 0.5 * (n - 1)
    if m == 0.0:
        return 2.0 / (p + a)
    z = r2 if omr2 > 0.0 else 1.0
    log_num = hyp2f1_log(m, 2.0, 0.5 * (p + a) + 1.0, z, one_minus_z=omr2)
    log_den = hyp2f1_log(m, 1.0, 0.5 * (p + a), z, one_minus_z=omr2)
    return (2.0 / (p + a)) * math.exp(log_num - log_den)


def shrinkage_hyper_g(prior: HyperGPrior, fit: FitSummary) -> float:
    return shrinkage_hyper_g_stats(prior.a, fit.n, fit.p, fit.r2,
                                   fit.one_minus_r2)


def posterior_mean_hyper_g(prior: HyperGPrior, fit: FitSummary) -> np.ndarray:
    return shrinkage_hyper_g(prior, fit) * fit.beta_hat_ls


def sigma2_limit_hyper_g(prior: HyperGPrior, n: int, p: int,
                         sigma2_hat: float) -> InverseGammaParams:
    """Large-sample sigma^2 posterior: IG((n+1-a-p)/2, 2/((n-p-1) sigma2_hat)).

    The mean, (n-p-1) sigma2_hat / (n-p-a-1), exists when n > a+p+1.
    """
    a = prior.a
    if n <= a + p - 1.0:
        raise DomainError(
            f"sigma^2 limit requires n > a+p-1, got n={n}, a={a}, p={p}")
    if sigma2_hat < 0.0:
        raise DomainError("sigma2_hat must be nonnegative")
    shape = 0.5 * (n + 1.0 - a - p)
    if sigma2_hat == 0.0:
        return InverseGammaParams(shape=shape, scale=math.inf)
    return InverseGammaParams(shape=shape,
                              scale=2.0 / ((n - p - 1) * sigma2_hat))


def _check_same_data(fit_big: FitSummary, fit_small: FitSummary) -> None:
    if fit_big.n != fit_small.n:
        raise DomainError("fits come from different sample sizes")
    scale = max(fit_big.yty, fit_small.yty, 1e-300)
    if abs(fit_big.yty - fit_small.yty) > 1e-8 * scale:
        raise DomainError("fits appear to use different responses")
    if fit_big.p < fit_small.p:
        raise DomainError("fit_big must be the larger model")


def log_bf_ratio_hyper_g(prior: HyperGPrior, fit_big: FitSummary,
                         fit_small: FitSummary) -> float:
    """log BF(big : small) = log BF(big : null) - log BF(small : null).

    When both models sit at exact unit R^2: the finite limiting ratio
    (a+p_small-n-1)/(a+p_big-n-1) applies for n < a+p_small-1; once n
    reaches a+p_small-1 the ratio collapses to 0 (the smaller model wins).
    """
    _check_same_data(fit_big, fit_small)
    a = prior.a
    lb = log_bf_hyper_g_stats(a, fit_big.n, fit_big.p, fit_big.r2,
                              fit_big.one_minus_r2)
    ls = log_bf_hyper_g_stats(a, fit_small.n, fit_small.p, fit_small.r2,
                              fit_small.one_minus_r2)
    if math.isinf(lb) and math.isinf(ls):
        n, p1, p2 = fit_small.n, fit_small.p, fit_big.p
        if n < a + p1 - 1.0:
            return (math.log(a + p1 - n - 1.0) - math.log(a + p2 - n - 1.0))
        return -math.inf
    return lb - ls


def bf_ratio_hyper_g(prior: HyperGPrior, fit_big: FitSummary,
                     fit_small: FitSummary) -> float:
    return math.exp(log_bf_ratio_hyper_g(prior, fit_big, fit_small))
