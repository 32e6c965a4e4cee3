"""Block hyper-g prior on block-orthogonal designs.

Bayes factors and per-block shrinkage come from the k-dimensional posterior
over t_i = g_i/(1+g_i),

    pi(t | y)  propto  prod_i (1-t_i)^(b_i)  (1 - sum_i t_i R_i^2)^(-m),

with b_i = (a+p_i)/2 - 2 and m = (n-1)/2. Integration is carried out in
s_i = 1 - t_i coordinates (see integrate.py) so the coupling factor is
evaluated as delta + sum rho_i s_i with delta = 1 - sum R_i^2 taken straight
from the residual sum of squares; that keeps the extreme near-unit-R^2
regimes exact. A Laplace approximation of the same integral is provided for
large n, with the small-a single-predictor adjustment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import integrate
from ._quadlog import adaptive_log_integral
from .design import BlockPartition, FitSummary
from .errors import (DomainError, IntegralDiverges, NoConvergence,
                     NotBlockOrthogonal, OutOfInterior)
from .hyperg import HyperGPrior
from .special import log_lower_inc_gamma


@dataclass(frozen=True)
class BlockHyperGPrior:
    """Independent hyper-g priors, one scale per block, shared a."""

    a: float
    partition: BlockPartition

    def __post_init__(self) -> None:
        if not (2.0 < self.a <= 4.0):
            raise DomainError(f"need 2 < a <= 4, got a={self.a}")

    @property
    def k(self) -> int:
        return self.partition.k

    def b_powers(self) -> np.ndarray:
        p_i = np.asarray(self.partition.sizes, dtype=float)
        return 0.5 * (self.a + p_i) - 2.0


@dataclass(frozen=True)
class ShrinkagePosterior:
    """Posterior block shrinkage means plus the log Bayes factor vs null."""

    t_mean: np.ndarray
    log_bf_null: float
    method: str
    error_estimate: float


@dataclass(frozen=True)
class LaplacePoint:
    """Interior maximizer of h(t), its Hessian, and h at the maximum."""

    t_star: np.ndarray
    hessian: np.ndarray
    log_height: float


def _require_block_orthogonal(fit: FitSummary) -> None:
    if not fit.block_orthogonal:
        raise NotBlockOrthogonal(
            "design is not block orthogonal; apply block_orthogonalize "
            "first")


def _check_partition(prior: BlockHyperGPrior, fit: FitSummary) -> None:
    if tuple(prior.partition.sizes) != tuple(fit.p_i):
        raise DomainError(
            f"prior partition sizes {prior.partition.sizes} do not match "
            f"fit blocks {fit.p_i}")


def _divergence_threshold(a: float, k: int, p: int) -> float:
    """The integral at sum R_i^2 = 1 is proper iff n < k(a-2) + p + 1."""
    return k * (a - 2.0) + p + 1.0


def _limit_posterior(prior: BlockHyperGPrior, rho: np.ndarray,
                     ) -> ShrinkagePosterior:
    """Divergent-integral sentinel: the posterior piles up at t_i = 1 for
    every block carrying signal; no-signal blocks sit at their floor."""
    p_i = np.asarray(prior.partition.sizes, dtype=float)
    t_mean = np.where(rho > 0.0, 1.0, 2.0 / (prior.a + p_i))
    return ShrinkagePosterior(t_mean=t_mean, log_bf_null=math.inf,
                              method="quadrature", error_estimate=0.0)


def _block_posterior(prior: BlockHyperGPrior, fit: FitSummary, *,
                     seed: int = 0,
                     budget: int = integrate.DEFAULT_BUDGET,
                     method: str = "auto",
                     rtol: float = 1e-7,
                     ) -> ShrinkagePosterior:
    _require_block_orthogonal(fit)
    _check_partition(prior, fit)
    if method not in ("auto", "integrate", "laplace"):
        raise DomainError(f"unknown method {method!r}")
    a = prior.a
    k = prior.k
    bpow = prior.b_powers()
    rho = np.clip(np.asarray(fit.r2_blocks, dtype=float), 0.0, 1.0)
    delta = max(float(fit.one_minus_r2), 0.0)
    m = 0.5 * (fit.n - 1)
    if method == "laplace":
        return _laplace_posterior(prior, fit)
    if (method == "auto" and delta > 0.0
            and laplace_applicable(prior, fit)):
        try:
            return _laplace_posterior(prior, fit)
        except OutOfInterior:
            # the bumped-exponent integrals for E[t_i|y] can lose their
            # interior maximizer even when the base one passes the gate
            pass
    if delta <= 0.0:
        thresh = _divergence_threshold(a, k, fit.p)
        if fit.n > thresh:
            return _limit_posterior(prior, rho)
        if fit.n == thresh:
            raise IntegralDiverges(
                "unit R^2 at the exact propriety boundary "
                f"n = k(a-2)+p+1 = {thresh}")
    if k <= 3:
        res = integrate.block_integrals_quadrature(bpow, rho, delta, m,
                                                   budget=budget, rtol=rtol)
    else:
        res = integrate.block_integrals_qmc(bpow, rho, delta, m, seed=seed,
                                            budget=budget)
        if res.error > 1e-4:
            raise NoConvergence(
                f"monte-carlo error estimate {res.error:.2e} above 1e-4 "
                "after budget")
    t_mean = res.t_mean
    floor = 2.0 / (a + np.asarray(prior.partition.sizes, dtype=float))
    if np.any(t_mean < floor - 1e-6) or np.any(t_mean > 1.0):
        raise NoConvergence(
            "integrated shrinkage means violate the analytic bounds; "
            "integration failed")
    log_bf = k * math.log(0.5 * (a - 2.0)) + res.log_i0
    return ShrinkagePosterior(t_mean=np.clip(t_mean, floor, 1.0),
                              log_bf_null=log_bf, method=res.method,
                              error_estimate=res.error)


def bf_block_hyper_g(prior: BlockHyperGPrior, fit: FitSummary, *,
                     seed: int = 0,
                     budget: int = integrate.DEFAULT_BUDGET,
                     method: str = "auto", rtol: float = 1e-7,
                     ) -> ShrinkagePosterior:
    """log BF(model : null) = k log((a-2)/2) + log of the t-integral.

    method "auto" takes the Laplace route when the gate (n >= 200, interior
    maximizer) opens and full integration otherwise; "integrate" forces
    quadrature/monte-carlo, "laplace" forces the approximation.
    """
    return _block_posterior(prior, fit, seed=seed, budget=budget,
                            method=method, rtol=rtol)


def block_shrinkage(prior: BlockHyperGPrior, fit: FitSummary, *,
                    seed: int = 0,
                    budget: int = integrate.DEFAULT_BUDGET,
                    method: str = "auto", rtol: float = 1e-7,
                    ) -> ShrinkagePosterior:
    """E[t_i | y] per block, sharing sample points with the BF integral."""
    return _block_posterior(prior, fit, seed=seed, budget=budget,
                            method=method, rtol=rtol)


def posterior_mean_block(prior: BlockHyperGPrior, fit: FitSummary, *,
                         seed: int = 0,
                         budget: int = integrate.DEFAULT_BUDGET,
                         method: str = "auto", rtol: float = 1e-7,
                         ) -> np.ndarray:
    """Blockwise shrunk LS estimate: block i gets factor E[t_i | y]."""
    post = _block_posterior(prior, fit, seed=seed, budget=budget,
                            method=method, rtol=rtol)
    out = np.array(fit.beta_hat_ls, dtype=float, copy=True)
    for i, cols in enumerate(prior.partition.blocks):
        out[list(cols)] *= post.t_mean[i]
    return out


def laplace_t_star(b: np.ndarray, r: np.ndarray, m: float) -> LaplacePoint:
    """Interior maximizer t_i* = 1 - b_i (1-r) / (r_i (m-b)) of

        h(t) = sum_i b_i log(1-t_i) - m log(1 - sum_i t_i r_i),

    with the closed-form Hessian at t*. Requires every b_i > 0, sum r < 1,
    m > sum b; raises OutOfInterior when any t_i* leaves (0,1) so callers
    can fall back to quadrature.
    """
    b = np.asarray(b, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(b <= 0.0):
        raise DomainError("Laplace point requires every b_i > 0")
    if np.any(r < 0.0) or float(r.sum()) >= 1.0:
        raise DomainError("need r_i >= 0 with sum r_i < 1")
    bsum = float(b.sum())
    rsum = float(r.sum())
    if m <= bsum:
        raise DomainError(f"need m > sum b_i, got m={m}, sum={bsum}")
    with np.errstate(divide="ignore"):
        t_star = 1.0 - b * (1.0 - rsum) / np.where(r > 0.0, r * (m - bsum),
                                                   np.inf)
    if np.any(r == 0.0) or np.any(t_star <= 0.0) or np.any(t_star >= 1.0):
        raise OutOfInterior(
            f"maximizer not interior: t*={np.array2string(t_star, precision=4)}")
    k = len(b)
    c = (m - bsum) ** 2 / (1.0 - rsum) ** 2
    hess = np.empty((k, k))
    for i in range(k):
        for j in range(k):
            if i == j:
                hess[i, j] = -c * r[i] ** 2 * (1.0 / b[i] - 1.0 / m)
            else:
                hess[i, j] = c * r[i] * r[j] / m
    log_height = float(b @ np.log1p(-t_star)
                       - m * math.log1p(-float(t_star @ r)))
    return LaplacePoint(t_star=t_star, hessian=hess, log_height=log_height)


def _laplace_log_integral(a: float, p_i: np.ndarray, r: np.ndarray,
                          m: float) -> tuple[float, LaplacePoint]:
    """Laplace value of log int prod (1-t_i)^(b_i) (1-t.r)^(-m) dt.

    For 2 < a < 3 any p_i = 1 block has b_i < 0; the integral is rewritten
    with p_i* = p_i + 1 and an extra (1-t_i)^(-1/2) factor evaluated at the
    adjusted maximizer. a = 3 with p_i = 1 gives b_i = 0 exactly and is
    refused (quadrature handles it).
    """
    p_i = np.asarray(p_i, dtype=float)
    b = 0.5 * (a + p_i) - 2.0
    adj = np.zeros(len(b), dtype=bool)
    if a <= 3.0:
        single = p_i == 1.0
        if np.any(single) and a == 3.0:
            raise OutOfInterior(
                "a = 3 with a single-predictor block (b_i = 0): no interior "
                "Laplace point, use quadrature")
        adj = single & (b <= 0.0)
        b = np.where(adj, 0.5 * (a + p_i + 1.0) - 2.0, b)
    point = laplace_t_star(b, r, m)
    sign, logdet = np.linalg.slogdet(-point.hessian)
    if sign <= 0:
        raise OutOfInterior("negated Hessian not positive definite")
    k = len(b)
    val = (point.log_height + 0.5 * k * math.log(2.0 * math.pi)
           - 0.5 * float(logdet))
    if np.any(adj):
        val += float(-0.5 * np.log1p(-point.t_star[adj]).sum())
    return val, point


def log_bf_laplace(prior: BlockHyperGPrior, fit_gamma: FitSummary,
                   fit_T: FitSummary,
                   partition_T: BlockPartition | None = None) -> float:
    """Laplace approximation of log BF(M_gamma : M_T).

    prior.partition describes the gamma model; partition_T (default: the
    same) describes the reference model. Both fits must be block orthogonal
    on the same response.
    """
    _require_block_orthogonal(fit_gamma)
    _require_block_orthogonal(fit_T)
    part_T = prior.partition if partition_T is None else partition_T
    a = prior.a
    m_g = 0.5 * (fit_gamma.n - 1)
    m_t = 0.5 * (fit_T.n - 1)
    val_g, _ = _laplace_log_integral(
        a, np.asarray(fit_gamma.p_i, dtype=float),
        np.clip(fit_gamma.r2_blocks, 0.0, 1.0), m_g)
    val_t, _ = _laplace_log_integral(
        a, np.asarray(fit_T.p_i, dtype=float),
        np.clip(fit_T.r2_blocks, 0.0, 1.0), m_t)
    k_g, k_t = len(fit_gamma.p_i), len(part_T.sizes)
    return (k_g - k_t) * math.log(0.5 * (a - 2.0)) + val_g - val_t


def bf_laplace(prior: BlockHyperGPrior, fit_gamma: FitSummary,
               fit_T: FitSummary,
               partition_T: BlockPartition | None = None) -> float:
    return math.exp(log_bf_laplace(prior, fit_gamma, fit_T, partition_T))


def _laplace_raw(b: np.ndarray, r: np.ndarray, m: float,
                 ) -> tuple[float, LaplacePoint]:
    """Plain Laplace value of log int prod (1-t_i)^(b_i) (1-t.r)^(-m) dt
    for strictly positive exponents (no small-a adjustment)."""
    point = laplace_t_star(b, r, m)
    sign, logdet = np.linalg.slogdet(-point.hessian)
    if sign <= 0:
        raise OutOfInterior("negated Hessian not positive definite")
    return (point.log_height + 0.5 * len(b) * math.log(2.0 * math.pi)
            - 0.5 * float(logdet)), point


def _laplace_posterior(prior: BlockHyperGPrior,
                       fit: FitSummary) -> ShrinkagePosterior:
    """Large-n posterior summaries from ratios of Laplace values.

    E[1 - t_i | y] = J(e_i)/J(0) where J(e) raises the (1-t_i) exponent by
    e_i; both integrals get the same second-order treatment so the shared
    error largely cancels in the ratio.
    """
    a = prior.a
    b = prior.b_powers()
    if np.any(b <= 0.0):
        raise OutOfInterior(
            "Laplace route requires (a + p_i)/2 - 2 > 0 in every block")
    r = np.clip(np.asarray(fit.r2_blocks, dtype=float), 0.0, 1.0)
    m = 0.5 * (fit.n - 1)
    base, _ = _laplace_raw(b, r, m)
    k = prior.k
    t_mean = np.empty(k)
    for i in range(k):
        bump = b.copy()
        bump[i] += 1.0
        vi, _ = _laplace_raw(bump, r, m)
        t_mean[i] = -math.expm1(vi - base)
    floor = 2.0 / (a + np.asarray(prior.partition.sizes, dtype=float))
    log_bf = k * math.log(0.5 * (a - 2.0)) + base
    return ShrinkagePosterior(t_mean=np.clip(t_mean, floor, 1.0),
                              log_bf_null=log_bf, method="laplace",
                              error_estimate=float(k / m))


def laplace_applicable(prior: BlockHyperGPrior, fit: FitSummary) -> bool:
    """Auto-selection gate: n >= 200 and every t_i* inside (0.02, 0.98)."""
    if fit.n < 200:
        return False
    p_i = np.asarray(prior.partition.sizes, dtype=float)
    b = 0.5 * (prior.a + p_i) - 2.0
    try:
        point = laplace_t_star(b, np.clip(fit.r2_blocks, 0.0, 1.0),
                               0.5 * (fit.n - 1))
    except (OutOfInterior, DomainError):
        return False
    return bool(np.all((point.t_star > 0.02) & (point.t_star < 0.98)))


class Sigma2Density:
    """Normalized sigma^2 density of the family

        (s2)^(-(alpha+1)) exp(-rss/(2 s2)) prod_j gamma(nu_j, q_j/(2 s2)).

    Both the exact finite-scale posteriors and their large-sample limits
    live here; they differ only in which incomplete-gamma factors survive.
    Proper iff alpha + sum nu_j > 0 (the gamma factors decay like
    (1/s2)^nu_j for large s2).
    """

    def __init__(self, alpha: float, rss: float, nu: np.ndarray,
                 q: np.ndarray) -> None:
        self.alpha = float(alpha)
        self.rss = float(rss)
        self.nu = np.asarray(nu, dtype=float)
        self.q = np.asarray(q, dtype=float)
        if self.alpha + float(self.nu.sum()) <= 0.0:
            raise DomainError("sigma^2 density is improper for these "
                              "(n, a, p) values")
        if self.rss <= 0.0:
            raise DomainError("requires a positive residual sum of squares")
        if np.any(self.q <= 0.0) or np.any(self.nu <= 0.0):
            raise DomainError("incomplete gamma factors need q_j, nu_j > 0")
        self._lig = np.vectorize(log_lower_inc_gamma)
        a_eff = max(self.alpha + float(self.nu.sum()), self.alpha, 1.0)
        self._x_c = math.log((self.rss + float(self.q.sum()))
                             / (2.0 * a_eff))
        self._log_norm = 0.0
        self._log_norm, _ = adaptive_log_integral(
            self._log_unnorm_x, self._x_c - 60.0, self._x_c + 90.0,
            rtol=1e-10, seed_points=(self._x_c,))

    def _log_unnorm(self, s2: np.ndarray) -> np.ndarray:
        s2 = np.asarray(s2, dtype=float)
        out = -(self.alpha + 1.0) * np.log(s2) - 0.5 * self.rss / s2
        for nu_j, q_j in zip(self.nu, self.q):
            out = out + self._lig(nu_j, 0.5 * q_j / s2)
        return out

    def _log_unnorm_x(self, x: np.ndarray) -> np.ndarray:
        # includes the Jacobian of s2 = e^x
        return self._log_unnorm(np.exp(x)) + x

    def logpdf(self, s2: np.ndarray) -> np.ndarray:
        return self._log_unnorm(s2) - self._log_norm

    def pdf(self, s2: np.ndarray) -> np.ndarray:
        return np.exp(self.logpdf(s2))

    def __call__(self, s2: np.ndarray) -> np.ndarray:
        return self.pdf(s2)

    def mean(self) -> float:
        if self.alpha + float(self.nu.sum()) <= 1.0:
            raise DomainError("mean does not exist for this density")
        val, _ = adaptive_log_integral(
            lambda x: self._log_unnorm_x(x) + x, self._x_c - 60.0,
            self._x_c + 90.0, rtol=1e-10, seed_points=(self._x_c,))
        return math.exp(val - self._log_norm)

    def mean_bound(self, a: float, p1: int, n: int) -> float:
        """Closed-form upper bound on the limit mean, for n > a + p1 + 1."""
        if n <= a + p1 + 1.0:
            raise DomainError("bound requires n > a + p1 + 1")
        return (self.rss + float(self.q.sum())) / (n - 1.0 - a - p1)


def _sigma2_pieces(prior: BlockHyperGPrior,
                   fit: FitSummary) -> tuple[float, float, np.ndarray,
                                             np.ndarray]:
    _require_block_orthogonal(fit)
    _check_partition(prior, fit)
    a, n, p, k = prior.a, fit.n, fit.p, prior.k
    rss = (n - p - 1) * fit.sigma2_hat
    alpha = 0.5 * (n - 1.0 - k * (a - 2.0) - p)
    nu = 0.5 * (a + np.asarray(fit.p_i, dtype=float)) - 1.0
    q = np.asarray(fit.r2_blocks, dtype=float) * fit.yty
    return alpha, rss, nu, q


def sigma2_density_limit_block(prior: BlockHyperGPrior,
                               fit: FitSummary) -> Sigma2Density:
    """Large-sample sigma^2 posterior under the block prior.

    The first block's incomplete-gamma factor has saturated to a constant
    (its argument diverges along the drifting sequence); the others keep
    q_i equal to that block's squared fitted norm. Requires
    n > k(a-2) + p + 1. For k = 1 this is exactly inverse gamma.
    """
    alpha, rss, nu, q = _sigma2_pieces(prior, fit)
    if alpha <= 0.0:
        raise DomainError("density limit requires n > k(a-2) + p + 1")
    return Sigma2Density(alpha, rss, nu[1:], q[1:])


def sigma2_density_exact_block(prior: BlockHyperGPrior,
                               fit: FitSummary) -> Sigma2Density:
    """Finite-scale sigma^2 posterior: every block keeps its gamma factor."""
    alpha, rss, nu, q = _sigma2_pieces(prior, fit)
    keep = q > 0.0
    return Sigma2Density(alpha + float(nu[~keep].sum()), rss, nu[keep],
                         q[keep])


def clp_lower_bound(a: float, p2: int) -> float:
    """(a-2)/(a+p2-2): the floor under the two-block paradox ratio."""
    if not (2.0 < a <= 4.0):
        raise DomainError(f"need 2 < a <= 4, got a={a}")
    if p2 < 1:
        raise DomainError(f"need p2 >= 1, got {p2}")
    return (a - 2.0) / (a + p2 - 2.0)
