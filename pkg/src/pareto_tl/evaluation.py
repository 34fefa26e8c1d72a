"""Experiment protocol: leave-one-out scoring, multi-run medians, baselines and the task driver.

A run is one full leave-one-out pass over the target rows with its own random
stream. The stream of run ``r`` is derived from (master seed, task, the set of
source rows used, r), so the same subset gets the same runs whichever search
step reaches it and whatever order or process the runs execute in.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .data import LabeledDataset, apply_scaler, fit_unit_scaler, load_csv, remove_row
from .distances import ModelDistanceConfig, canonical_metrics, compute_distance_table
from .errors import ConfigError, IndexOutOfRange, ShapeMismatch, TargetTooSmall
from .mlp import mlp_param_count
from .pareto import exhaustive_search, local_search, peel_frontiers
from .seeding import derive_seed, stable_int, subset_key
from .transfer import (
    FineTuneConfig,
    MsAnnConfig,
    TwoStageBoostConfig,
    finetune,
    fit_idtr,
    fit_msann,
    fit_target_only,
    msann_param_count,
    pretrain_source,
)

METHODS = ("idtr", "ftann", "msann", "baseline")
MODES = ("local", "exhaustive", "all-source")
BASELINE_MODELS = ("tree", "mlp")


# ---------------------------------------------------------------------------
# trainers
#
# ``prepare`` does the work that depends only on the source and the run seed
# (e.g. pretraining), ``fit_predict`` trains on one fold and predicts the
# held-out rows. ``stochastic=False`` marks trainers whose runs are identical.


@dataclass(frozen=True)
class IdtrTrainer:
    cfg: TwoStageBoostConfig = TwoStageBoostConfig()
    name: str = "idtr"
    stochastic: bool = False

    def prepare(self, source, seed):
        return None

    def fit_predict(self, ctx, source, train, X_test, seed):
        return fit_idtr(source, train, self.cfg).predict(X_test)


@dataclass(frozen=True)
class FtAnnTrainer:
    cfg: FineTuneConfig = FineTuneConfig()
    name: str = "ftann"
    stochastic: bool = True

    def prepare(self, source, seed):
        # the source model does not see target rows, so one pretraining per run serves every fold
        return pretrain_source(source, source.n_in, source.n_out, self.cfg, derive_seed(seed, 0))

    def fit_predict(self, ctx, source, train, X_test, seed):
        return finetune(ctx, train, self.cfg, seed).predict(X_test)


@dataclass(frozen=True)
class TargetOnlyMlp:
    epochs: int = 150
    cfg: FineTuneConfig = FineTuneConfig()
    name: str = "mlp-baseline"
    stochastic: bool = True

    def prepare(self, source, seed):
        return None

    def fit_predict(self, ctx, source, train, X_test, seed):
        return fit_target_only(train, self.epochs, self.cfg, seed).predict(X_test)


@dataclass(frozen=True)
class MsAnnTrainer:
    cfg: MsAnnConfig = MsAnnConfig()
    name: str = "msann"
    stochastic: bool = True

    def prepare(self, source, seed):
        return None

    def fit_predict(self, ctx, sources, train, X_test, seed):
        return fit_msann(sources, train, self.cfg, seed).predict(X_test)


# ---------------------------------------------------------------------------
# scoring


def loocv_score(trainer, source, target: LabeledDataset, seed: int) -> float:
    """Mean over target rows of the RMSE on that row when trained without it."""
    if target.n_rows < 2:
        raise TargetTooSmall("leave-one-out needs at least 2 target rows")
    ctx = trainer.prepare(source, seed)
    errs = []
    for j in range(target.n_rows):
        train = remove_row(target, j)
        pred = np.asarray(trainer.fit_predict(ctx, source, train, target.inputs[j:j + 1],
                                              derive_seed(seed, 1, j)), dtype=float)
        r = pred.reshape(1, -1) - target.outputs[j:j + 1]
        errs.append(float(np.sqrt(np.mean(r * r))))
    return float(np.mean(errs))


@dataclass(frozen=True)
class RunStats:
    values: tuple[float, ...]
    median: float
    q1: float
    q3: float
    min: float
    max: float

    @classmethod
    def from_values(cls, values) -> "RunStats":
        v = np.asarray(values, dtype=float)
        if v.size == 0:
            raise ValueError("no run values")
        q1, med, q3 = np.percentile(v, [25, 50, 75])
        return cls(tuple(float(x) for x in v), float(np.median(v)), float(q1), float(q3),
                   float(v.min()), float(v.max()))

    @property
    def n_runs(self) -> int:
        return len(self.values)


def run_seed(master_seed: int, task_key: int, subset: int, r: int) -> int:
    return derive_seed(master_seed, task_key, subset, r)


def _score_job(job):
    trainer, source, target, seed = job
    return loocv_score(trainer, source, target, seed)


class Runner:
    """Maps scoring jobs over a process pool (``jobs > 1``) or in-process."""

    def __init__(self, jobs: int = 1):
        if jobs < 1:
            raise ConfigError("jobs must be >= 1")
        self.jobs = jobs
        self._pool = None

    def __enter__(self):
        if self.jobs > 1:
            self._pool = ProcessPoolExecutor(max_workers=self.jobs)
        return self

    def __exit__(self, *exc):
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    def map(self, jobs) -> list[float]:
        jobs = list(jobs)
        if self._pool is None or len(jobs) < 2:
            return [_score_job(j) for j in jobs]
        return list(self._pool.map(_score_job, jobs))


def multi_run_many(trainer, sources: list, target: LabeledDataset, n_runs: int, master_seed: int,
                   task_key: int, keys: list[int], runner: Runner | None = None) -> list[RunStats]:
    """RunStats for several source subsets at once (one pool round trip)."""
    if n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    runner = runner or Runner(1)
    todo = n_runs if trainer.stochastic else 1
    jobs = [(trainer, src, target, run_seed(master_seed, task_key, key, r))
            for src, key in zip(sources, keys) for r in range(todo)]
    scores = runner.map(jobs)
    out = []
    for i in range(len(sources)):
        vals = scores[i * todo:(i + 1) * todo]
        if not trainer.stochastic:
            vals = vals * n_runs
        out.append(RunStats.from_values(vals))
    return out


def multi_run_median(trainer, source, target: LabeledDataset, n_runs: int = 50, master_seed: int = 0,
                     task_key: int = 0, key: int | None = None, runner: Runner | None = None) -> RunStats:
    """Score ``n_runs`` independent leave-one-out runs and summarise them."""
    if key is None:
        key = _source_key(source)
    return multi_run_many(trainer, [source], target, n_runs, master_seed, task_key, [key], runner)[0]


def _source_key(source) -> int:
    if source is None:
        return stable_int("no-source")
    if isinstance(source, LabeledDataset):
        return subset_key(range(source.n_rows)) ^ stable_int(source.domain_id)
    return stable_int("|".join(f"{s.domain_id}:{s.n_rows}" for s in source))


BASELINE_KEY = stable_int("baseline")


def baseline_trainer(model: str, ft_cfg: FineTuneConfig = FineTuneConfig(),
                     boost_cfg: TwoStageBoostConfig = TwoStageBoostConfig()):
    if model == "tree":
        return IdtrTrainer(boost_cfg, name="tree-baseline")
    if model == "mlp":
        return TargetOnlyMlp(ft_cfg.epochs_source + ft_cfg.epochs_target, ft_cfg)
    raise ConfigError(f"unknown baseline model {model!r}; choose from {', '.join(BASELINE_MODELS)}")


def baseline_error(target: LabeledDataset, model: str = "tree", n_runs: int = 50, master_seed: int = 0,
                   task_key: int = 0, runner: Runner | None = None, ft_cfg: FineTuneConfig = FineTuneConfig(),
                   boost_cfg: TwoStageBoostConfig = TwoStageBoostConfig()) -> RunStats:
    """Same protocol without source data: boosting alone, or the network trained from scratch."""
    trainer = baseline_trainer(model, ft_cfg, boost_cfg)
    return multi_run_median(trainer, None, target, n_runs, master_seed, task_key, BASELINE_KEY, runner)


# ---------------------------------------------------------------------------
# task specification


@dataclass(frozen=True)
class TaskSpec:
    task_id: str
    sources: tuple[str, ...]  # CSV paths
    target: str
    n_in: int
    n_out: int = 1
    method: str = "idtr"
    metrics: tuple[str, ...] = ("euclidean", "cosine")
    mode: str = "exhaustive"
    n_runs: int = 50
    seed: int = 0
    baseline_model: str | None = None  # default: tree for idtr, mlp otherwise
    scaling: str = "joint"  # or "per-dataset"
    subset: tuple[int, ...] | None = None  # fixed source rows for all-source evaluation
    boost: TwoStageBoostConfig = TwoStageBoostConfig()
    finetune: FineTuneConfig = FineTuneConfig()
    msann: MsAnnConfig = MsAnnConfig()
    elm: ModelDistanceConfig = ModelDistanceConfig()

    def __post_init__(self):
        object.__setattr__(self, "sources", tuple(str(s) for s in self.sources))
        object.__setattr__(self, "metrics", canonical_metrics(self.metrics))
        if self.subset is not None:
            object.__setattr__(self, "subset", tuple(int(i) for i in self.subset))
        validate_task(self)

    @property
    def baseline(self) -> str:
        if self.baseline_model is not None:
            return self.baseline_model
        return "tree" if self.method in ("idtr", "baseline") else "mlp"

    def to_dict(self) -> dict:
        return asdict(self)


def validate_task(spec: TaskSpec) -> None:
    if not str(spec.task_id):
        raise ConfigError("task_id must be nonempty")
    if spec.method not in METHODS:
        raise ConfigError(f"unknown method {spec.method!r}; choose from {', '.join(METHODS)}")
    if spec.mode not in MODES:
        raise ConfigError(f"unknown mode {spec.mode!r}; choose from {', '.join(MODES)}")
    if spec.scaling not in ("joint", "per-dataset"):
        raise ConfigError("scaling must be 'joint' or 'per-dataset'")
    if spec.baseline not in BASELINE_MODELS:
        raise ConfigError(f"unknown baseline model {spec.baseline!r}")
    if spec.n_runs < 1:
        raise ConfigError("n_runs must be >= 1")
    if spec.n_in < 1 or spec.n_out < 1:
        raise ConfigError("n_in and n_out must be >= 1")
    if spec.method in ("idtr", "ftann") and len(spec.sources) != 1:
        raise ConfigError(f"method {spec.method} needs exactly one source, got {len(spec.sources)}")
    if spec.method == "msann":
        if len(spec.sources) < 1:
            raise ConfigError("msann needs at least one source")
        if spec.mode != "all-source":
            raise ConfigError("msann is evaluated on all listed sources; use mode 'all-source'")
    if spec.method == "baseline" and spec.mode != "all-source":
        raise ConfigError("the baseline method has no source to search; use mode 'all-source'")
    if spec.subset is not None and spec.mode != "all-source":
        raise ConfigError("a fixed subset only applies to mode 'all-source'")


def config_digest(spec: TaskSpec) -> str:
    """Stable hash of the canonical JSON form of ``spec``."""
    text = json.dumps(spec.to_dict(), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class StepResult:
    step: int
    subset_size: int
    selected: tuple[int, ...]
    cumulative: tuple[int, ...]
    stats: RunStats


@dataclass(frozen=True)
class EvalReport:
    task_id: str
    method: str
    mode: str
    seed: int
    n_runs: int
    n_source: int
    baseline: RunStats
    steps: tuple[StepResult, ...] = ()
    chosen_step: int | None = None
    chosen_size: int = 0
    chosen_median: float | None = None
    all_source_median: float | None = None
    n_frontiers: int | None = None
    termination: str = ""
    metrics: tuple[str, ...] = ()
    param_count: int | None = None
    provenance: dict = field(default_factory=dict)

    @property
    def sigma_baseline(self) -> float:
        return self.baseline.median


def _load_domains(spec: TaskSpec):
    sources = [load_csv(p, spec.n_in, spec.n_out, domain_id=Path(p).stem) for p in spec.sources]
    target = load_csv(spec.target, spec.n_in, spec.n_out, domain_id=Path(spec.target).stem)
    return sources, target


def scale_domains(sources: list, target: LabeledDataset, how: str = "joint"):
    """Unit-scale every domain; returns scaled sources, scaled target and the scalers used."""
    if how == "joint":
        sc = fit_unit_scaler(*sources, target)
        return [apply_scaler(sc, s) for s in sources], apply_scaler(sc, target), [sc]
    scalers = [fit_unit_scaler(d) for d in sources + [target]]
    scaled = [apply_scaler(sc, d) for sc, d in zip(scalers, sources + [target])]
    return scaled[:-1], scaled[-1], scalers


def method_trainer(spec: TaskSpec):
    if spec.method == "idtr":
        return IdtrTrainer(spec.boost)
    if spec.method == "ftann":
        return FtAnnTrainer(spec.finetune)
    if spec.method == "msann":
        return MsAnnTrainer(spec.msann)
    return baseline_trainer(spec.baseline, spec.finetune, spec.boost)


def run_task(spec: TaskSpec, jobs: int = 1, datasets=None) -> EvalReport:
    """Scale, score the baseline, build and peel the distance table, then search or evaluate.

    ``datasets=(sources, target)`` supplies in-memory domains instead of the CSV paths.
    """
    sources, target = datasets if datasets is not None else _load_domains(spec)
    sources = list(sources)
    for s in sources:
        if s.n_in != target.n_in or s.n_out != target.n_out:
            raise ShapeMismatch("source and target widths differ")
    if target.n_rows < 2:
        raise TargetTooSmall("the target needs at least 2 rows")
    sources, target, scalers = scale_domains(sources, target, spec.scaling)
    task_key = stable_int(str(spec.task_id))
    trainer = method_trainer(spec)
    prov = {
        "config_digest": config_digest(spec),
        "master_seed": spec.seed,
        "elm_seed": spec.elm.seed,
        "scaling": spec.scaling,
        "degenerate_columns": sorted({c for sc in scalers for c in sc.degenerate_columns()}),
        "baseline_model": spec.baseline,
    }
    common = dict(task_id=str(spec.task_id), method=spec.method, mode=spec.mode, seed=spec.seed,
                  n_runs=spec.n_runs, metrics=spec.metrics, provenance=prov)

    with Runner(jobs) as runner:
        base = baseline_error(target, spec.baseline, spec.n_runs, spec.seed, task_key, runner,
                              spec.finetune, spec.boost)

        if spec.method == "msann":
            st = multi_run_median(trainer, sources, target, spec.n_runs, spec.seed, task_key,
                                  _source_key(sources), runner)
            return EvalReport(n_source=sum(s.n_rows for s in sources), baseline=base,
                              chosen_size=sum(s.n_rows for s in sources), chosen_median=st.median,
                              all_source_median=st.median,
                              param_count=msann_param_count(target.n_in, target.n_out, len(sources)),
                              termination="all-source",
                              steps=(StepResult(1, sum(s.n_rows for s in sources), (), (), st),), **common)

        if spec.method == "baseline":
            step = StepResult(0, 0, (), (), base)
            return EvalReport(n_source=sum(s.n_rows for s in sources), baseline=base, steps=(step,),
                              chosen_step=0, chosen_median=base.median, termination="baseline",
                              param_count=mlp_param_count(target.n_in, target.n_out)
                              if spec.baseline == "mlp" else None, **common)

        source = sources[0]
        param_count = mlp_param_count(target.n_in, target.n_out) if spec.method == "ftann" else None
        table = compute_distance_table(source, target, spec.metrics, spec.elm)
        frontiers = peel_frontiers(table)

        def stats_for(subsets):
            subs = [source.subset(list(c)) for c in subsets]
            return multi_run_many(trainer, subs, target, spec.n_runs, spec.seed, task_key,
                                  [subset_key(c) for c in subsets], runner)

        if spec.mode == "all-source":
            rows = tuple(range(source.n_rows)) if spec.subset is None else tuple(sorted(set(spec.subset)))
            if spec.subset is not None and rows and (rows[0] < 0 or rows[-1] >= source.n_rows):
                raise IndexOutOfRange(f"subset index out of range for {source.n_rows} source rows")
            st = stats_for([rows])[0]
            label = len(frontiers) if spec.subset is None else None
            return EvalReport(n_source=source.n_rows, baseline=base,
                              steps=(StepResult(label or 0, len(rows), rows, rows, st),),
                              chosen_step=label, chosen_size=len(rows), chosen_median=st.median,
                              all_source_median=st.median if spec.subset is None else None,
                              n_frontiers=len(frontiers), termination="all-source",
                              param_count=param_count, **common)

        cache: dict[int, RunStats] = {}
        if spec.mode == "exhaustive":
            for f, st in zip(frontiers, stats_for([f.cumulative for f in frontiers])):
                cache[f.k] = st

        def evaluate(k, cumulative):
            if k not in cache:
                cache[k] = stats_for([cumulative])[0]
            return cache[k]

        search = local_search if spec.mode == "local" else exhaustive_search
        trace = search(frontiers, evaluate, base.median)
        all_rows = tuple(range(source.n_rows))
        last = frontiers[-1]
        all_st = cache[last.k] if last.k in cache else stats_for([all_rows])[0]

    steps = tuple(StepResult(r.step.k, len(r.step.cumulative), r.step.selected, r.step.cumulative,
                             cache[r.step.k]) for r in trace.records)
    return EvalReport(n_source=source.n_rows, baseline=base, steps=steps, chosen_step=trace.chosen_step,
                      chosen_size=len(trace.chosen), chosen_median=cache[trace.chosen_step].median,
                      all_source_median=all_st.median, n_frontiers=len(frontiers),
                      termination=trace.termination, param_count=param_count, **common)
