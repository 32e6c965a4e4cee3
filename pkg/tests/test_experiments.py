"""Sweep and replication harness: determinism, output format, verdicts."""

import math

import numpy as np
import pytest

from blockhyperg.design import (BlockPartition, CenteredDesign,
                                center_design, fit_least_squares)
from blockhyperg.errors import (DomainError, PreconditionViolated,
                                SimulationBudgetExceeded)
from blockhyperg.experiments import (DEFAULT_SCALES, MAX_REPLICATES,
                                     ExperimentResult, SequenceSpec,
                                     make_sequence, run_clp_experiment,
                                     run_els_experiment,
                                     run_info_consistency,
                                     run_prediction_consistency,
                                     run_selection_consistency,
                                     sigma2_limit_check, standard_sequence)


class TestSequence:
    def test_standard_sequence_deterministic(self):
        s1 = standard_sequence(seed=4)
        s2 = standard_sequence(seed=4)
        np.testing.assert_array_equal(s1.base.X, s2.base.X)
        np.testing.assert_array_equal(s1.eps, s2.eps)
        np.testing.assert_array_equal(s1.beta1, s2.beta1)

    def test_only_block_one_grows(self):
        spec = standard_sequence()
        seq = make_sequence(spec)
        assert [c for c, _, _ in seq] == list(DEFAULT_SCALES)
        # the fitted norm of the fixed block stays put while block 1 grows
        q2 = [float(fit.r2_blocks[1] * fit.yty) for _, _, fit in seq]
        q1 = [float(fit.r2_blocks[0] * fit.yty) for _, _, fit in seq]
        assert max(q2) / min(q2) < 1.0 + 1e-6
        assert q1[-1] > 1e10 * q1[0]
        for _, d, _ in seq:
            np.testing.assert_array_equal(d.X, spec.base.X)

    def test_spec_validation(self):
        spec = standard_sequence()
        with pytest.raises(DomainError):
            SequenceSpec(base=spec.base, alpha=1.0,
                         beta1=np.zeros(3), beta_rest=spec.beta_rest,
                         eps=spec.eps, scales=spec.scales)
        with pytest.raises(DomainError):
            SequenceSpec(base=spec.base, alpha=1.0, beta1=spec.beta1,
                         beta_rest=spec.beta_rest, eps=spec.eps,
                         scales=(1.0, 1.0))
        rng = np.random.default_rng(0)
        X = rng.normal(size=(50, 3))
        X -= X.mean(axis=0)
        base = CenteredDesign(y=np.zeros(50), X=X,
                              partition=BlockPartition.contiguous((2, 1)))
        with pytest.raises(PreconditionViolated):
            SequenceSpec(base=base, alpha=1.0, beta1=spec.beta1,
                         beta_rest=spec.beta_rest, eps=spec.eps,
                         scales=spec.scales)


class TestResultObject:
    def test_passed_requires_verdicts(self):
        res = ExperimentResult(name="x")
        assert not res.passed
        res.verdicts["ok"] = True
        assert res.passed
        res.verdicts["bad"] = False
        assert not res.passed

    def test_csv_roundtrip(self, tmp_path):
        res = ExperimentResult(name="x")
        res.add(10.0, "stat", 0.1 + 0.2, 1e-9)
        path = tmp_path / "out.csv"
        res.write_csv(str(path))
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "x,statistic,value,err"
        x, stat, val, err = lines[1].split(",")
        assert float(val) == 0.1 + 0.2  # repr round-trips exactly
        assert stat == "stat"

    def test_series_filters(self):
        res = ExperimentResult(name="x")
        res.add(1.0, "a", 2.0)
        res.add(2.0, "b", 3.0)
        res.add(3.0, "a", 4.0)
        assert res.series("a") == [(1.0, 2.0), (3.0, 4.0)]

    def test_verdict_payload_sorted(self):
        res = ExperimentResult(name="x", seed=5)
        res.verdicts["zeta"] = True
        res.verdicts["alpha"] = True
        payload = res.verdict_payload()
        assert list(payload["verdicts"]) == ["alpha", "zeta"]
        assert payload["passed"] and payload["seed"] == 5


class TestSweeps:
    def test_els_passes_and_is_deterministic(self):
        r1 = run_els_experiment(standard_sequence())
        r2 = run_els_experiment(standard_sequence())
        assert r1.passed
        assert r1.rows == r2.rows

    def test_clp_passes(self):
        res = run_clp_experiment(standard_sequence())
        assert res.passed
        ratios = res.series("hyperg_log_bf_ratio")
        assert ratios[-1][1] < -10.0
        floor = res.series("block_bf_floor")[0][1]
        assert all(v >= floor - 1e-4
                   for _, v in res.series("block_bf_ratio"))

    def test_clp_needs_two_blocks(self):
        spec = standard_sequence(sizes=(2, 1, 1))
        with pytest.raises(PreconditionViolated):
            run_clp_experiment(spec)

    def test_info_divergent(self):
        res = run_info_consistency(standard_sequence(), "divergent")
        assert res.passed
        vals = [v for _, v in res.series("hyperg_log_bf")]
        assert vals[-1] > vals[0]

    def test_info_bounded(self):
        spec = standard_sequence(n=5, sizes=(2, 1), a=4.0)
        res = run_info_consistency(spec, "bounded")
        assert res.passed

    def test_info_regime_preconditions(self):
        with pytest.raises(PreconditionViolated):
            run_info_consistency(standard_sequence(), "bounded")
        with pytest.raises(PreconditionViolated):
            run_info_consistency(standard_sequence(), "oscillating")

    def test_sigma2_limits(self):
        res = sigma2_limit_check(standard_sequence())
        assert res.passed
        tv = res.series("tv_block_vs_limit")[0][1]
        assert tv < 0.01
        mean = res.series("limit_mean")[0][1]
        bound = res.series("limit_mean_bound")[0][1]
        assert mean <= bound + 1e-9


class TestReplicatedRuns:
    def test_budget_guards(self):
        with pytest.raises(SimulationBudgetExceeded):
            run_selection_consistency(replicates=MAX_REPLICATES + 1)
        with pytest.raises(PreconditionViolated):
            run_prediction_consistency(n_schedule=(100,), replicates=2)

    def test_selection_smoke_deterministic(self):
        kw = dict(n_schedule=(60, 120), replicates=3, seed=1)
        r1 = run_selection_consistency(**kw)
        r2 = run_selection_consistency(**kw)
        assert r1.rows == r2.rows
        stats = {r["statistic"] for r in r1.rows}
        assert "case1_missing_block_median_log_bf" in stats
        assert "case2c_new_block_only_median_log_bf" in stats
        # the grossly wrong model already loses badly at these tiny n
        case1 = r1.series("case1_missing_block_median_log_bf")
        assert case1[-1][1] < -5.0

    def test_prediction_smoke(self):
        res = run_prediction_consistency(n_schedule=(60, 120),
                                         replicates=3, seed=2)
        meds = [v for _, v in res.series("median_abs_error")]
        assert len(meds) == 2 and all(v > 0 for v in meds)


class TestNullBlockScaling:
    def test_n_r2_of_noise_block_is_tight(self):
        # for a block carrying no signal, n * R_i^2 has an n-free limit law;
        # the upper quantile should be stable across a 4x change in n
        quantiles = []
        for n in (150, 600):
            vals = []
            for rep in range(200):
                rng = np.random.default_rng([42, rep, n])
                X = rng.normal(size=(n, 4))
                y = X[:, :2] @ np.array([1.0, -1.0]) + rng.normal(size=n)
                d = center_design(X, y, BlockPartition.contiguous((2, 2)))
                fit = fit_least_squares(d)
                vals.append(n * float(fit.r2_blocks[1]))
            quantiles.append(float(np.percentile(vals, 95)))
        ratio = quantiles[1] / quantiles[0]
        assert 0.5 < ratio < 2.0
