"""Command-line entry point: fit, model selection, and the experiment suite.

All inputs come from a JSON config file; --seed/--budget/--orthogonalize
override the corresponding config entries. Reports are JSON with sorted
keys plus CSV sweep tables, each embedding the config hash, seed, library
version, and the method behind every computed number. Exit codes: 0 ok,
2 config error, 3 data error, 4 numerical failure, 5 budget exceeded,
6 experiment verdict failed.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import json
import math
import os
import sys

import numpy as np

from . import __version__, blockprior, design, experiments, hyperg, models
from .errors import (BlockHyperGError, BudgetExceeded, ConfigError,
                     DataError, DimensionMismatch, DomainError,
                     EmptyModelList, IntegralDiverges, NoConvergence,
                     NotBlockOrthogonal, OutOfInterior,
                     PreconditionViolated, RankDeficient,
                     SimulationBudgetExceeded)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4
EXIT_BUDGET = 5
EXIT_VERDICT = 6

_CONFIG_ERRORS = (ConfigError, PreconditionViolated)
_DATA_ERRORS = (DataError,)
_BUDGET_ERRORS = (BudgetExceeded, SimulationBudgetExceeded)
_NUMERICAL_ERRORS = (NoConvergence, NotBlockOrthogonal, IntegralDiverges,
                     OutOfInterior, RankDeficient, DomainError,
                     DimensionMismatch, EmptyModelList)

EXPERIMENT_NAMES = ("els", "clp", "info", "selection", "prediction",
                    "sigma2")


def _stderr_tag(exc: Exception) -> None:
    msg = str(exc).splitlines()[0] if str(exc) else exc.__class__.__name__
    print(f"blockhyperg:error:{exc.__class__.__name__}: {msg}",
          file=sys.stderr)


def load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}")
    if not isinstance(cfg, dict):
        raise ConfigError("config root must be a JSON object")
    return cfg


def _validate_config(cfg: dict) -> dict:
    mode = cfg.get("mode")
    if not isinstance(mode, str):
        raise ConfigError("config requires a string 'mode'")
    if mode not in ("fit", "select") and not mode.startswith("experiment:"):
        raise ConfigError(f"unknown mode {mode!r}")
    if mode.startswith("experiment:"):
        name = mode.split(":", 1)[1]
        if name not in EXPERIMENT_NAMES:
            raise ConfigError(
                f"unknown experiment {name!r}; choose from "
                f"{', '.join(EXPERIMENT_NAMES)}")
    prior = cfg.setdefault("prior", {"type": "block-hyper-g", "a": 3.0})
    ptype = prior.get("type")
    if ptype not in ("fixed-g", "hyper-g", "block-hyper-g"):
        raise ConfigError(f"unknown prior type {prior.get('type')!r}")
    if ptype == "fixed-g":
        g = prior.get("g")
        if not isinstance(g, (int, float)) or not (g >= 0
                                                   and math.isfinite(g)):
            raise ConfigError("fixed-g prior needs finite g >= 0")
    else:
        a = prior.setdefault("a", 3.0)
        if not isinstance(a, (int, float)) or not (2.0 < a <= 4.0):
            raise ConfigError(f"prior needs 2 < a <= 4, got a={a}")
    if mode in ("fit", "select"):
        if not isinstance(cfg.get("data"), str):
            raise ConfigError(f"mode {mode!r} requires a 'data' CSV path")
        if not isinstance(cfg.get("response"), str):
            raise ConfigError(f"mode {mode!r} requires a 'response' column")
        blocks = cfg.get("blocks")
        if (not isinstance(blocks, list) or not blocks
                or not all(isinstance(b, list) and b for b in blocks)):
            raise ConfigError(
                "'blocks' must be a non-empty list of column-name lists")
    cfg.setdefault("seed", 0)
    cfg.setdefault("budget", 10 ** 6)
    cfg.setdefault("orthogonalize", False)
    cfg.setdefault("output_dir", ".")
    return cfg


def _config_hash(cfg: dict) -> str:
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def _provenance(cfg: dict) -> dict:
    return {
        "version": __version__,
        "seed": int(cfg["seed"]),
        "config_hash": _config_hash(cfg),
        "timestamp": datetime.datetime.now(
            datetime.timezone.utc).isoformat(),
    }


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return [_jsonable(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, np.integer):
        return int(x)
    if isinstance(x, dict):
        return {k: _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    return x


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(_jsonable(payload), fh, sort_keys=True, indent=2)
        fh.write("\n")


def _load_design(cfg: dict) -> tuple[design.CenteredDesign, list[str]]:
    X_raw, y_raw, partition, names = design.load_csv_design(
        cfg["data"], cfg["response"], cfg["blocks"])
    d = design.center_design(X_raw, y_raw, partition)
    if cfg["orthogonalize"]:
        d, _ = design.block_orthogonalize(d)
    return d, names


def cmd_fit(cfg: dict) -> int:
    d, names = _load_design(cfg)
    fit = design.fit_least_squares(d)
    prior = cfg["prior"]
    report = _provenance(cfg)
    report.update({
        "mode": "fit",
        "n": fit.n,
        "p": fit.p,
        "columns": names,
        "blocks": [list(b) for b in cfg["blocks"]],
        "alpha_hat": fit.alpha_hat,
        "beta_hat_ls": fit.beta_hat_ls,
        "sigma2_hat": fit.sigma2_hat,
        "r2": fit.r2,
        "r2_blocks": fit.r2_blocks,
        "block_orthogonal": fit.block_orthogonal,
        "prior": prior,
    })
    if prior["type"] == "fixed-g":
        g = float(prior["g"])
        shrink = g / (1.0 + g)
        report.update({
            "log_bf_null": hyperg.log_bf_fixed_g_stats(
                g, fit.n, fit.p, fit.r2, fit.one_minus_r2),
            "shrinkage": shrink,
            "posterior_mean": shrink * fit.beta_hat_ls,
            "method": "closed-form",
            "error_estimate": 0.0,
        })
    elif prior["type"] == "hyper-g":
        a = float(prior["a"])
        shrink = hyperg.shrinkage_hyper_g_stats(a, fit.n, fit.p, fit.r2,
                                                fit.one_minus_r2)
        report.update({
            "log_bf_null": hyperg.log_bf_hyper_g_stats(
                a, fit.n, fit.p, fit.r2, fit.one_minus_r2),
            "shrinkage": shrink,
            "posterior_mean": shrink * fit.beta_hat_ls,
            "method": "closed-form",
            "error_estimate": 0.0,
        })
        if fit.n > a + fit.p - 1.0:
            ig = hyperg.sigma2_limit_hyper_g(hyperg.HyperGPrior(a), fit.n,
                                             fit.p, fit.sigma2_hat)
            report["sigma2_limit"] = {"shape": ig.shape, "scale": ig.scale}
    else:
        a = float(prior["a"])
        bprior = blockprior.BlockHyperGPrior(a, d.partition)
        post = blockprior.bf_block_hyper_g(bprior, fit, seed=cfg["seed"],
                                           budget=cfg["budget"])
        mean = np.array(fit.beta_hat_ls, dtype=float, copy=True)
        for bi, cols in enumerate(d.partition.blocks):
            mean[list(cols)] *= post.t_mean[bi]
        report.update({
            "log_bf_null": post.log_bf_null,
            "shrinkage": post.t_mean,
            "posterior_mean": mean,
            "method": post.method,
            "error_estimate": post.error_estimate,
        })
        try:
            dens = blockprior.sigma2_density_exact_block(bprior, fit)
            if dens.alpha + float(dens.nu.sum()) > 1.0:
                report["sigma2_posterior_mean"] = dens.mean()
        except DomainError:
            pass  # improper or degenerate: omit the summary
    out = os.path.join(cfg["output_dir"], "fit.json")
    _write_json(out, report)
    return EXIT_OK


def cmd_select(cfg: dict) -> int:
    d, names = _load_design(cfg)
    prior = cfg["prior"]
    if prior["type"] == "fixed-g":
        raise ConfigError("model selection requires a hyper-g family prior")
    a = float(prior["a"])
    mode = cfg.get("enumeration", "block-subsets")
    posterior, means, methods = models.evaluate_model_space(
        d, mode, a=a, seed=cfg["seed"], budget=cfg["budget"])
    order = np.argsort(-posterior.post_prob, kind="stable")
    rows = posterior.to_rows()
    rows = [dict(rows[i], method=methods[i],
                 posterior_mean=means[i]) for i in order]
    report = _provenance(cfg)
    report.update({
        "mode": "select",
        "enumeration": mode,
        "columns": names,
        "prior": prior,
        "models": rows,
    })
    if "x_star" in cfg:
        x_star = np.asarray(cfg["x_star"], dtype=float)
        report["bma_prediction"] = models.bma_predict(
            x_star, posterior, means, d.x_means, d.y_mean)
    out = os.path.join(cfg["output_dir"], "models.json")
    _write_json(out, report)
    return EXIT_OK


def _sequence_from_config(cfg: dict) -> experiments.SequenceSpec:
    a = float(cfg["prior"].get("a", 3.0))
    kwargs = {}
    if "scales" in cfg:
        kwargs["scales"] = tuple(float(c) for c in cfg["scales"])
    if "noise" in cfg:
        kwargs["noise"] = float(cfg["noise"])
    return experiments.standard_sequence(
        n=int(cfg.get("n", 50)),
        sizes=tuple(int(s) for s in cfg.get("sizes", (2, 1))),
        a=a, seed=int(cfg["seed"]), **kwargs)


def cmd_experiment(cfg: dict) -> int:
    name = cfg["mode"].split(":", 1)[1]
    if name in ("els", "clp", "info", "sigma2"):
        spec = _sequence_from_config(cfg)
        if name == "els":
            result = experiments.run_els_experiment(spec)
        elif name == "clp":
            result = experiments.run_clp_experiment(spec)
        elif name == "info":
            result = experiments.run_info_consistency(
                spec, regime=cfg.get("regime", "divergent"),
                fixed_g=cfg.get("fixed_g"))
        else:
            result = experiments.sigma2_limit_check(spec)
    else:
        schedule = tuple(int(n) for n in cfg.get("n_schedule",
                                                 (100, 400, 1600)))
        reps = int(cfg.get("replicates", 200))
        a = float(cfg["prior"].get("a", 3.0))
        if name == "selection":
            result = experiments.run_selection_consistency(
                n_schedule=schedule, replicates=reps,
                seed=int(cfg["seed"]), a=a)
        else:
            result = experiments.run_prediction_consistency(
                n_schedule=schedule, replicates=reps,
                seed=int(cfg["seed"]), a=a,
                noise=float(cfg.get("noise", 1.0)))
    csv_path = os.path.join(cfg["output_dir"], f"{name}.csv")
    result.write_csv(csv_path)
    payload = _provenance(cfg)
    payload.update(result.verdict_payload())
    _write_json(os.path.join(cfg["output_dir"], f"{name}_verdict.json"),
                payload)
    return EXIT_OK if result.passed else EXIT_VERDICT


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="blockhyperg",
        description="Bayes factors, shrinkage, and model averaging under "
                    "g-prior mixtures")
    parser.add_argument("--config", required=True,
                        help="path to the JSON run configuration")
    parser.add_argument("--seed", type=int, default=None,
                        help="override the config seed")
    parser.add_argument("--orthogonalize", action="store_true",
                        help="block-orthogonalize the design before use")
    parser.add_argument("--budget", type=int, default=None,
                        help="override the integration evaluation budget")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg["seed"] = args.seed
        if args.budget is not None:
            cfg["budget"] = args.budget
        if args.orthogonalize:
            cfg["orthogonalize"] = True
        cfg = _validate_config(cfg)
        os.makedirs(cfg["output_dir"], exist_ok=True)
        if cfg["mode"] == "fit":
            return cmd_fit(cfg)
        if cfg["mode"] == "select":
            return cmd_select(cfg)
        return cmd_experiment(cfg)
    except _CONFIG_ERRORS as exc:
        _stderr_tag(exc)
        return EXIT_CONFIG
    except _DATA_ERRORS as exc:
        _stderr_tag(exc)
        return EXIT_DATA
    except _BUDGET_ERRORS as exc:
        _stderr_tag(exc)
        return EXIT_BUDGET
    except _NUMERICAL_ERRORS as exc:
        _stderr_tag(exc)
        return EXIT_NUMERICAL
    except BlockHyperGError as exc:  # anything not classified above
        _stderr_tag(exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
