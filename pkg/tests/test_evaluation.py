from dataclasses import dataclass, replace

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import make_ds
from pareto_tl.data import fit_unit_scaler
from pareto_tl.errors import ConfigError, IndexOutOfRange, TargetTooSmall
from pareto_tl.evaluation import (
    BASELINE_KEY,
    FtAnnTrainer,
    IdtrTrainer,
    Runner,
    RunStats,
    TaskSpec,
    baseline_error,
    baseline_trainer,
    config_digest,
    loocv_score,
    multi_run_median,
    run_seed,
    run_task,
    scale_domains,
)
from pareto_tl.pareto import peel_frontiers
from pareto_tl.distances import compute_distance_table
from pareto_tl.report import render_json
from pareto_tl.transfer import FineTuneConfig, MsAnnConfig


@dataclass(frozen=True)
class ConstantTrainer:
    value: float = 0.0
    name: str = "constant"
    stochastic: bool = False

    def prepare(self, source, seed):
        return None

    def fit_predict(self, ctx, source, train, X_test, seed):
        return np.full((X_test.shape[0], train.n_out), self.value)


@dataclass(frozen=True)
class NoisyTrainer:
    """Predicts the training mean plus seed-dependent noise."""
    name: str = "noisy"
    stochastic: bool = True

    def prepare(self, source, seed):
        return float(np.random.default_rng(seed).normal())

    def fit_predict(self, ctx, source, train, X_test, seed):
        noise = np.random.default_rng(seed).normal()
        return np.full((X_test.shape[0], 1), train.outputs.mean() + 0.1 * noise + 0.01 * ctx)


class RecordingTrainer:
    name, stochastic = "recording", False

    def __init__(self):
        self.calls = []

    def prepare(self, source, seed):
        return None

    def fit_predict(self, ctx, source, train, X_test, seed):
        self.calls.append((train.inputs.copy(), X_test.copy()))
        return np.zeros((1, 1))


class LookupTrainer:
    """Knows the full target and returns the true label of every query."""
    name, stochastic = "lookup", False

    def __init__(self, full):
        self.full = full

    def prepare(self, source, seed):
        return None

    def fit_predict(self, ctx, source, train, X_test, seed):
        idx = [int(np.argmin(np.linalg.norm(self.full.inputs - x, axis=1))) for x in X_test]
        return self.full.outputs[idx]


# LOOCV

def test_loocv_constant_zero_on_ones():
    T = make_ds([[0.0], [1.0]], [1.0, 1.0])
    assert loocv_score(ConstantTrainer(0.0), None, T, 0) == 1.0


def test_loocv_perfect_predictor():
    T = make_ds(np.random.default_rng(0).random((5, 2)), np.arange(5.0))
    assert loocv_score(LookupTrainer(T), None, T, 0) == 0.0


def test_loocv_nine_folds_of_eight():
    X = np.arange(9.0)[:, None]
    T = make_ds(X, np.zeros(9))
    rec = RecordingTrainer()
    loocv_score(rec, None, T, 0)
    assert len(rec.calls) == 9
    assert all(train.shape[0] == 8 for train, _ in rec.calls)
    held = sorted(float(x[0, 0]) for _, x in rec.calls)
    assert held == list(range(9))
    for train, x in rec.calls:
        assert x[0, 0] not in train[:, 0]


def test_loocv_mean_of_fold_rmse():
    T = make_ds([[0.0], [1.0], [2.0]], [1.0, -2.0, 4.0])
    assert loocv_score(ConstantTrainer(0.5), None, T, 0) == pytest.approx((0.5 + 2.5 + 3.5) / 3)


def test_loocv_needs_two_rows():
    with pytest.raises(TargetTooSmall):
        loocv_score(ConstantTrainer(), None, make_ds([[0.0]], [1.0]), 0)


# run statistics

@given(st.lists(st.floats(0, 10), min_size=1, max_size=60))
def test_median_matches_sort_oracle(vals):
    s = sorted(vals)
    n = len(s)
    expect = s[n // 2] if n % 2 else 0.5 * (s[n // 2 - 1] + s[n // 2])
    stats = RunStats.from_values(vals)
    assert stats.median == pytest.approx(expect, abs=1e-12)
    assert stats.min <= stats.q1 <= stats.median <= stats.q3 <= stats.max
    assert stats.n_runs == n


def test_deterministic_trainer_values_replicated():
    T = make_ds([[0.0], [1.0], [2.0]], [1.0, 1.0, 1.0])
    stats = multi_run_median(ConstantTrainer(0.0), None, T, n_runs=50)
    assert stats.values == (1.0,) * 50 and stats.median == 1.0


def test_single_run():
    T = make_ds([[0.0], [1.0], [2.0]], [0.3, 0.1, 0.2])
    stats = multi_run_median(NoisyTrainer(), None, T, n_runs=1, master_seed=4, key=7)
    assert stats.median == stats.values[0] == loocv_score(NoisyTrainer(), None, T, run_seed(4, 0, 7, 0))


def test_run_order_independence():
    T = make_ds(np.random.default_rng(1).random((4, 1)), np.random.default_rng(2).random(4))
    stats = multi_run_median(NoisyTrainer(), None, T, n_runs=12, master_seed=3, task_key=5, key=11)
    order = np.random.default_rng(0).permutation(12)
    shuffled = {int(r): loocv_score(NoisyTrainer(), None, T, run_seed(3, 5, 11, int(r))) for r in order}
    assert stats.values == tuple(shuffled[r] for r in range(12))
    assert len(set(stats.values)) == 12


def test_parallel_equals_sequential():
    T = make_ds(np.random.default_rng(1).random((4, 1)), np.random.default_rng(2).random(4))
    seq = multi_run_median(NoisyTrainer(), None, T, n_runs=8, master_seed=1, key=2)
    with Runner(3) as runner:
        par = multi_run_median(NoisyTrainer(), None, T, n_runs=8, master_seed=1, key=2, runner=runner)
    assert seq == par


def test_runner_rejects_zero_jobs():
    with pytest.raises(ConfigError):
        Runner(0)


# baselines

def test_tree_baseline_on_constant_target():
    T = make_ds(np.random.default_rng(3).random((5, 2)), np.full(5, 0.8))
    assert baseline_error(T, "tree", n_runs=3).median == pytest.approx(0.0, abs=1e-12)


def test_baseline_deterministic_per_seed():
    T = make_ds(np.random.default_rng(4).random((4, 2)), np.random.default_rng(5).random(4))
    cfg = FineTuneConfig(epochs_source=10, epochs_target=5)
    a = baseline_error(T, "mlp", n_runs=3, master_seed=9, ft_cfg=cfg)
    b = baseline_error(T, "mlp", n_runs=3, master_seed=9, ft_cfg=cfg)
    assert a == b


def test_network_baseline_epoch_budget():
    assert baseline_trainer("mlp").epochs == 150
    assert baseline_trainer("mlp", FineTuneConfig(30, 20)).epochs == 50
    with pytest.raises(ConfigError):
        baseline_trainer("svm")


def test_baseline_key_is_fixed():
    T = make_ds([[0.0], [1.0], [2.0]], [0.3, 0.1, 0.2])
    a = baseline_error(T, "mlp", n_runs=2, ft_cfg=FineTuneConfig(3, 2))
    b = multi_run_median(baseline_trainer("mlp", FineTuneConfig(3, 2)), None, T, 2, 0, 0, BASELINE_KEY)
    assert a == b


# task specs

def test_spec_validation():
    with pytest.raises(ConfigError):
        TaskSpec("t", ("a.csv", "b.csv"), "t.csv", 2, method="idtr")
    with pytest.raises(ConfigError):
        TaskSpec("t", ("a.csv",), "t.csv", 2, method="msann", mode="exhaustive")
    with pytest.raises(ConfigError):
        TaskSpec("t", ("a.csv",), "t.csv", 2, mode="sideways")
    with pytest.raises(ConfigError):
        TaskSpec("t", ("a.csv",), "t.csv", 2, subset=(1, 2))
    with pytest.raises(ConfigError):
        TaskSpec("t", ("a.csv",), "t.csv", 2, metrics=("euclidean", "hamming"))
    assert TaskSpec("t", ("a.csv",), "t.csv", 2).baseline == "tree"
    assert TaskSpec("t", ("a.csv",), "t.csv", 2, method="ftann").baseline == "mlp"


def test_config_digest_stable_and_sensitive():
    a = TaskSpec("t", ("a.csv",), "t.csv", 2)
    assert config_digest(a) == config_digest(TaskSpec("t", ("a.csv",), "t.csv", 2))
    assert config_digest(a) != config_digest(replace(a, seed=1))


def test_joint_and_per_dataset_scaling():
    S = make_ds([[0.0], [2.0]], [0.0, 4.0])
    T = make_ds([[1.0], [3.0]], [1.0, 2.0])
    (s,), t, _ = scale_domains([S], T, "joint")
    np.testing.assert_allclose(s.inputs[:, 0], [0, 2 / 3])
    np.testing.assert_allclose(t.outputs[:, 0], [0.25, 0.5])
    (s,), t, scalers = scale_domains([S], T, "per-dataset")
    np.testing.assert_allclose(s.inputs[:, 0], [0, 1])
    np.testing.assert_allclose(t.inputs[:, 0], [0, 1])
    assert len(scalers) == 2


# end to end

def _spec(**kw):
    base = dict(task_id="unit", sources=("s.csv",), target="t.csv", n_in=3, n_runs=3)
    base.update(kw)
    return TaskSpec(**base)


def test_all_source_single_row(small_task):
    rep = run_task(_spec(mode="all-source"), datasets=([small_task[0]], small_task[1]))
    assert len(rep.steps) == 1
    assert rep.chosen_size == rep.n_source == 20
    assert rep.all_source_median == rep.chosen_median == rep.steps[0].stats.median


def test_exhaustive_covers_every_frontier(small_task):
    S, T = small_task
    rep = run_task(_spec(mode="exhaustive"), datasets=([S], T))
    (s,), t, _ = scale_domains([S], T)
    frontiers = peel_frontiers(compute_distance_table(s, t, ("euclidean", "cosine")))
    assert len(rep.steps) == rep.n_frontiers == len(frontiers)
    assert rep.steps[-1].subset_size == 20
    medians = [x.stats.median for x in rep.steps]
    assert rep.chosen_median == min(medians)
    assert rep.chosen_step == medians.index(min(medians)) + 1
    assert rep.all_source_median == medians[-1]


def test_local_is_prefix_of_exhaustive(small_task):
    S, T = small_task
    ex = run_task(_spec(mode="exhaustive"), datasets=([S], T))
    lo = run_task(_spec(mode="local"), datasets=([S], T))
    assert [x.stats for x in lo.steps] == [x.stats for x in ex.steps[:len(lo.steps)]]
    assert lo.all_source_median == ex.all_source_median
    assert lo.baseline == ex.baseline


def test_all_source_matches_last_exhaustive_step(small_task):
    S, T = small_task
    cfg = FineTuneConfig(epochs_source=5, epochs_target=3)
    ex = run_task(_spec(method="ftann", finetune=cfg), datasets=([S], T))
    al = run_task(_spec(method="ftann", finetune=cfg, mode="all-source"), datasets=([S], T))
    assert al.steps[0].stats == ex.steps[-1].stats
    assert al.chosen_step == ex.n_frontiers


def test_report_byte_identical_on_repeat(small_task):
    S, T = small_task
    spec = _spec(method="ftann", finetune=FineTuneConfig(5, 3), mode="local")
    assert render_json(run_task(spec, datasets=([S], T))) == render_json(run_task(spec, datasets=([S], T)))


def test_fixed_subset_and_range_check(small_task):
    S, T = small_task
    rep = run_task(_spec(mode="all-source", subset=(3, 1, 3)), datasets=([S], T))
    assert rep.steps[0].cumulative == (1, 3) and rep.chosen_size == 2
    with pytest.raises(IndexOutOfRange):
        run_task(_spec(mode="all-source", subset=(0, 20)), datasets=([S], T))


def test_baseline_method(small_task):
    rep = run_task(_spec(method="baseline", mode="all-source"), datasets=([small_task[0]], small_task[1]))
    assert rep.steps[0].step == 0 and rep.chosen_median == rep.sigma_baseline


def test_multi_source_reports_parameter_count():
    rng = np.random.default_rng(6)
    srcs = [make_ds(rng.random((5, 4)), rng.random(5), f"s{i}") for i in range(4)]
    tgt = make_ds(rng.random((3, 4)), rng.random(3), "t")
    spec = TaskSpec("ms", tuple(f"s{i}.csv" for i in range(4)), "t.csv", 4, method="msann", mode="all-source",
                    n_runs=1, msann=MsAnnConfig(epoch_max=2), finetune=FineTuneConfig(2, 1))
    rep = run_task(spec, datasets=(srcs, tgt))
    assert rep.param_count == 924
    assert rep.n_source == 20 and len(rep.steps) == 1


def test_target_too_small(small_task):
    with pytest.raises(TargetTooSmall):
        run_task(_spec(), datasets=([small_task[0]], make_ds(np.zeros((1, 3)), [0.0])))


def test_scaler_is_fit_on_union(small_task):
    S, T = small_task
    sc = fit_unit_scaler(S, T)
    (s,), t, (sc2,) = scale_domains([S], T)
    np.testing.assert_array_equal(sc.mins, sc2.mins)
