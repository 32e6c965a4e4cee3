"""Model enumeration, posterior model probabilities, and BMA prediction."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from . import blockprior, design, hyperg
from .errors import (BudgetExceeded, DimensionMismatch, DomainError,
                     EmptyModelList)

ALL_SUBSETS_MAX_P = 25


@dataclass(frozen=True)
class ModelSpec:
    """Inclusion vector over the p predictors plus the induced partition.

    The induced partition renumbers the included columns 0..p_gamma-1 while
    keeping the parent block grouping; empty blocks are dropped. The empty
    model is the null model.
    """

    gamma: tuple[int, ...]
    induced_partition: design.BlockPartition | None

    @staticmethod
    def from_gamma(gamma, partition: design.BlockPartition) -> "ModelSpec":
        gamma = tuple(int(bool(g)) for g in gamma)
        if len(gamma) != partition.p:
            raise DimensionMismatch(
                f"gamma length {len(gamma)} != p {partition.p}")
        included = [i for i, g in enumerate(gamma) if g]
        if not included:
            return ModelSpec(gamma=gamma, induced_partition=None)
        newpos = {col: j for j, col in enumerate(included)}
        blocks = []
        for b in partition.blocks:
            keep = [newpos[c] for c in b if c in newpos]
            if keep:
                blocks.append(tuple(keep))
        return ModelSpec(gamma=gamma,
                         induced_partition=design.BlockPartition(blocks))

    @property
    def is_null(self) -> bool:
        return self.induced_partition is None

    @property
    def included(self) -> tuple[int, ...]:
        return tuple(i for i, g in enumerate(self.gamma) if g)

    @property
    def p_gamma(self) -> int:
        return sum(self.gamma)

    @property
    def model_id(self) -> str:
        return "".join(str(g) for g in self.gamma)


@dataclass(frozen=True)
class ModelPosterior:
    models: tuple[ModelSpec, ...]
    log_bf_null: np.ndarray
    prior_prob: np.ndarray
    post_prob: np.ndarray

    def to_rows(self) -> list[dict]:
        return [
            {"model_id": m.model_id,
             "gamma_bits": list(m.gamma),
             "log_bf_null": float(self.log_bf_null[i]),
             "post_prob": float(self.post_prob[i])}
            for i, m in enumerate(self.models)
        ]

    def top_model(self) -> ModelSpec:
        return self.models[int(np.argmax(self.post_prob))]


def enumerate_models(partition: design.BlockPartition,
                     mode: str) -> list[ModelSpec]:
    """All 2^p single-predictor subsets, or 2^k whole-block subsets."""
    p = partition.p
    if mode == "all-subsets":
        if p > ALL_SUBSETS_MAX_P:
            raise BudgetExceeded(
                f"all-subsets enumeration limited to p <= "
                f"{ALL_SUBSETS_MAX_P}, got p={p}")
        out = []
        for bits in itertools.product((0, 1), repeat=p):
            out.append(ModelSpec.from_gamma(bits, partition))
        return out
    if mode == "block-subsets":
        out = []
        for keep in itertools.product((0, 1), repeat=partition.k):
            gamma = [0] * p
            for bi, kept in enumerate(keep):
                if kept:
                    for c in partition.blocks[bi]:
                        gamma[c] = 1
            out.append(ModelSpec.from_gamma(gamma, partition))
        return out
    raise DomainError(f"unknown enumeration mode {mode!r}")


def posterior_model_probs(models: list[ModelSpec],
                          log_bfs: np.ndarray,
                          prior: str | np.ndarray = "uniform",
                          ) -> ModelPosterior:
    """Normalize prior x BF in log-sum-exp arithmetic.

    +inf log BFs are honored as sentinels: all mass goes to the sentinel
    holders, split according to the model prior.
    """
    if len(models) == 0:
        raise EmptyModelList("no models to normalize over")
    log_bfs = np.asarray(log_bfs, dtype=float)
    if len(log_bfs) != len(models):
        raise DimensionMismatch("log_bfs length != number of models")
    if isinstance(prior, str):
        if prior != "uniform":
            raise DomainError(f"unknown model prior {prior!r}")
        prior_prob = np.full(len(models), 1.0 / len(models))
    else:
        prior_prob = np.asarray(prior, dtype=float)
        if len(prior_prob) != len(models) or np.any(prior_prob < 0):
            raise DomainError("invalid model prior vector")
        prior_prob = prior_prob / prior_prob.sum()
    if np.any(np.isnan(log_bfs)):
        raise DomainError("NaN log Bayes factor")
    inf_mask = np.isinf(log_bfs) & (log_bfs > 0)
    post = np.zeros(len(models))
    if np.any(inf_mask):
        w = np.where(inf_mask, prior_prob, 0.0)
        post = w / w.sum()
    else:
        logw = np.where(prior_prob > 0, np.log(prior_prob,
                                               where=prior_prob > 0,
                                               out=np.full_like(prior_prob,
                                                                -np.inf)),
                        -np.inf) + log_bfs
        post = np.exp(logw - logsumexp(logw))
        post = post / post.sum()
    return ModelPosterior(models=tuple(models), log_bf_null=log_bfs,
                          prior_prob=prior_prob, post_prob=post)


def model_inference(d: design.CenteredDesign, spec: ModelSpec,
                    mode: str, a: float = 3.0, *, seed: int = 0,
                    budget: int = 10**6, rtol: float = 1e-7,
                    ) -> tuple[float, np.ndarray, str]:
    """log BF vs null, full-length posterior coefficient mean, and the
    method label of the evidence computation.

    all-subsets scores each model with the single-block prior; block-subsets
    uses the block prior on the induced partition (orthogonalizing the
    slice if needed and mapping the shrunk coefficients back through the
    triangular transform).
    """
    p = d.p
    if spec.is_null:
        return 0.0, np.zeros(p), "closed-form"
    cols = list(spec.included)
    Xs = d.X[:, cols]
    if mode == "all-subsets":
        part = design.BlockPartition.single(len(cols))
        ds = design.CenteredDesign(y=d.y, X=Xs, partition=part,
                                   y_mean=d.y_mean,
                                   x_means=d.x_means[cols])
        fit = design.fit_least_squares(ds)
        log_bf = hyperg.log_bf_hyper_g_stats(a, fit.n, fit.p, fit.r2,
                                             fit.one_minus_r2)
        shrink = hyperg.shrinkage_hyper_g_stats(a, fit.n, fit.p, fit.r2,
                                                fit.one_minus_r2)
        beta = shrink * fit.beta_hat_ls
        method = "closed-form"
    elif mode == "block-subsets":
        part = spec.induced_partition
        ds = design.CenteredDesign(y=d.y, X=Xs, partition=part,
                                   y_mean=d.y_mean,
                                   x_means=d.x_means[cols])
        T = None
        if not design.check_block_orthogonality(ds):
            ds, T = design.block_orthogonalize(ds)
        fit = design.fit_least_squares(ds)
        prior = blockprior.BlockHyperGPrior(a, part)
        post = blockprior.bf_block_hyper_g(prior, fit, seed=seed,
                                           budget=budget, rtol=rtol)
        log_bf = post.log_bf_null
        kappa = np.array(fit.beta_hat_ls, dtype=float, copy=True)
        for bi, bcols in enumerate(part.blocks):
            kappa[list(bcols)] *= post.t_mean[bi]
        beta = kappa if T is None else np.linalg.solve(T, kappa)
        method = post.method
    else:
        raise DomainError(f"unknown enumeration mode {mode!r}")
    out = np.zeros(p)
    out[cols] = beta
    return float(log_bf), out, method


def evaluate_model_space(d: design.CenteredDesign, mode: str,
                         a: float = 3.0, *, seed: int = 0,
                         budget: int = 10**6, rtol: float = 1e-7,
                         prior: str | np.ndarray = "uniform",
                         ) -> tuple[ModelPosterior, np.ndarray, list[str]]:
    """Score every enumerated model; returns the posterior, a matrix of
    full-length posterior coefficient means (one row per model), and the
    per-model method labels."""
    models = enumerate_models(d.partition, mode)
    log_bfs = np.empty(len(models))
    means = np.zeros((len(models), d.p))
    methods = []
    for i, spec in enumerate(models):
        log_bfs[i], means[i], meth = model_inference(d, spec, mode, a,
                                                     seed=seed,
                                                     budget=budget,
                                                     rtol=rtol)
        methods.append(meth)
    return posterior_model_probs(models, log_bfs, prior), means, methods


def bma_predict(x_star: np.ndarray, posterior: ModelPosterior,
                post_means: np.ndarray, x_means: np.ndarray,
                alpha_hat: float) -> float:
    """alpha_hat + sum_gamma pi(gamma | y) (x* - xbar)^T E[beta | y, gamma]."""
    x_star = np.asarray(x_star, dtype=float)
    post_means = np.atleast_2d(np.asarray(post_means, dtype=float))
    if x_star.shape != (post_means.shape[1],):
        raise DimensionMismatch(
            f"x_star has shape {x_star.shape}, expected "
            f"({post_means.shape[1]},)")
    if post_means.shape[0] != len(posterior.models):
        raise DimensionMismatch("one coefficient row per model required")
    xc = x_star - np.asarray(x_means, dtype=float)
    return float(alpha_hat + posterior.post_prob @ (post_means @ xc))
