"""Command-line front end.

Commands: ``distances``, ``select``, ``evaluate``, ``reproduce``. Exit codes:
0 success, 2 configuration error, 3 data error, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .data import load_csv
from .distances import ModelDistanceConfig, compute_distance_table
from .errors import ConfigError, DataError, IndexOutOfRange, MissingFile, NumericError
from .evaluation import EvalReport, TaskSpec, run_task, scale_domains
from .pareto import FrontierStep, local_search
from .report import render_csv, render_json, step_table
from .tasks import ACQUIRE_HINT, DATA_ENV, MACHINES, check_data_dir, get_task, load_dataset, source_combinations
from .transfer import FineTuneConfig, MsAnnConfig, TwoStageBoostConfig

log = logging.getLogger("pareto_tl")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

_NESTED = {"boost": TwoStageBoostConfig, "finetune": FineTuneConfig, "msann": MsAnnConfig,
           "elm": ModelDistanceConfig}
_EXTRA_KEYS = {"output_dir"}


# ---------------------------------------------------------------------------
# configuration


def _build(cls, data: dict, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be a JSON object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {', '.join(unknown)}")
    try:
        return cls(**data)
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from None


def parse_config(raw: dict, base_dir: Path = Path("."), seed: int | None = None,
                 **overrides) -> tuple[TaskSpec, dict]:
    """Validate a config mapping into a TaskSpec plus CLI-only settings."""
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    raw = dict(raw)
    extra = {k: raw.pop(k) for k in list(raw) if k in _EXTRA_KEYS}
    spec_fields = {f.name for f in dataclasses.fields(TaskSpec)}
    unknown = sorted(set(raw) - spec_fields)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    for key, cls in _NESTED.items():
        if key in raw:
            raw[key] = _build(cls, raw[key], key)
    resolve = lambda p: str((base_dir / p) if not Path(p).is_absolute() else Path(p))
    if "sources" in raw:
        if isinstance(raw["sources"], str) or not isinstance(raw["sources"], list):
            raise ConfigError("sources must be a list of CSV paths")
        raw["sources"] = [resolve(p) for p in raw["sources"]]
    if "target" in raw:
        raw["target"] = resolve(raw["target"])
    if seed is not None:
        raw["seed"] = seed
    raw.update({k: v for k, v in overrides.items() if v is not None})
    spec = _build(TaskSpec, raw, "config")
    if "output_dir" in extra:
        extra["output_dir"] = resolve(extra["output_dir"])
    return spec, extra


def load_config(path, seed=None, **overrides):
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from None
    return parse_config(raw, path.parent, seed, **overrides)


# ---------------------------------------------------------------------------
# output helpers


def _out_dir(args, extra) -> Path:
    out = args.out or extra.get("output_dir") or "results"
    return Path(out)


def _write(path: Path, text: str, force: bool) -> None:
    if path.exists() and not force:
        raise ConfigError(f"{path} exists; pass --force to overwrite")
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text)
    print(f"wrote {path}")


def _warn_degenerate(names) -> None:
    for n in names:
        log.warning("column %s is constant; it is scaled to 0", n)


def _write_report(report: EvalReport, out: Path, stem: str, force: bool) -> None:
    _warn_degenerate(report.provenance.get("degenerate_columns", []))
    sys.stdout.write(step_table(report))
    paths = [(out / f"{stem}.json", render_json(report)), (out / f"{stem}.csv", render_csv(report))]
    for p, _ in paths:
        if p.exists() and not force:
            raise ConfigError(f"{p} exists; pass --force to overwrite")
    for p, text in paths:
        _write(p, text, True)


def _stem(spec: TaskSpec, mode: str) -> str:
    return f"{spec.task_id}_{spec.method}_{mode}"


# ---------------------------------------------------------------------------
# commands


def cmd_distances(args) -> int:
    spec, extra = load_config(args.config, args.seed)
    if len(spec.sources) != 1:
        raise ConfigError("distances needs exactly one source")
    source = load_csv(spec.sources[0], spec.n_in, spec.n_out, Path(spec.sources[0]).stem)
    target = load_csv(spec.target, spec.n_in, spec.n_out, Path(spec.target).stem)
    (source,), target, scalers = scale_domains([source], target, spec.scaling)
    _warn_degenerate(sorted({c for sc in scalers for c in sc.degenerate_columns()}))
    table = compute_distance_table(source, target, spec.metrics, spec.elm)
    _write(_out_dir(args, extra) / f"{spec.task_id}_distances.csv", table.to_csv(), args.force)
    return EXIT_OK


def cmd_select(args) -> int:
    spec, extra = load_config(args.config, args.seed, mode=args.mode)
    if spec.mode not in ("local", "exhaustive"):
        raise ConfigError("select needs mode 'local' or 'exhaustive'")
    report = run_task(spec, jobs=args.jobs)
    _write_report(report, _out_dir(args, extra), _stem(spec, spec.mode), args.force)
    return EXIT_OK


def read_subset_file(path) -> tuple[int, ...]:
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"subset file not found: {path}")
    tokens = path.read_text().replace(",", " ").split()
    try:
        idx = tuple(int(t) for t in tokens)
    except ValueError as exc:
        raise DataError(f"subset file {path} must list integer row indices: {exc}") from None
    if not idx:
        raise DataError(f"subset file {path} lists no indices")
    if min(idx) < 0:
        raise IndexOutOfRange(f"negative index in subset file {path}")
    return idx


def cmd_evaluate(args) -> int:
    subset = None if args.subset == "all" else read_subset_file(args.subset)
    spec, extra = load_config(args.config, args.seed, mode="all-source")
    if subset is not None:
        if spec.method == "msann":
            raise ConfigError("a subset file applies to single-source methods only")
        spec = dataclasses.replace(spec, subset=subset)
    report = run_task(spec, jobs=args.jobs)
    stem = _stem(spec, "all-source" if subset is None else "subset")
    _write_report(report, _out_dir(args, extra), stem, args.force)
    return EXIT_OK


def local_from_exhaustive(report: EvalReport):
    """Replay the local stopping rule over an exhaustive report's steps.

    Valid because every subset's runs are seeded by the subset itself, so the
    local search would have produced exactly these values.
    """
    steps = [FrontierStep(s.step, s.selected, s.cumulative) for s in report.steps]
    stats = {s.step: s.stats for s in report.steps}
    trace = local_search(steps, lambda k, c: stats[k], report.sigma_baseline)
    chosen = trace.record(trace.chosen_step)
    return trace.chosen_step, len(chosen.step.cumulative), chosen.sigma, trace.termination


TABLE_COLUMNS = ("task", "method", "metrics", "local_median_rmse", "local_step", "local_subset_size",
                 "exhaustive_median_rmse", "exhaustive_step", "exhaustive_subset_size",
                 "all_source_median_rmse", "all_source_step", "all_source_size", "baseline_rmse")
MULTI_COLUMNS = ("task", "sources", "epochs", "median_rmse", "param_count", "baseline_rmse")


def _reproduce_single(task, data_dir, args):
    source = load_dataset(data_dir, task.sources[0])
    target = load_dataset(data_dir, task.target)
    metric_sets = task.metric_sets
    if args.metric_sets:
        metric_sets = tuple(tuple(m.split(",")) for m in args.metric_sets)
    methods = tuple(args.methods) if args.methods else task.methods
    rows, reports = [], []
    for method in methods:
        for metrics in metric_sets:
            spec = TaskSpec(str(task.task_id), (task.sources[0],), task.target, source.n_in, source.n_out,
                            method=method, metrics=metrics, mode="exhaustive", n_runs=args.n_runs,
                            seed=args.seed or 0, elm=ModelDistanceConfig(seed=args.seed or 0))
            rep = run_task(spec, jobs=args.jobs, datasets=([source], target))
            lk, ln, lmed, _ = local_from_exhaustive(rep)
            rows.append([task.task_id, method, "+".join(rep.metrics), lmed, lk, ln, rep.chosen_median,
                         rep.chosen_step, rep.chosen_size, rep.all_source_median, rep.n_frontiers,
                         rep.n_source, rep.sigma_baseline])
            reports.append(rep)
            log.info("task %s %s %s done", task.task_id, method, "+".join(rep.metrics))
    return TABLE_COLUMNS, rows, reports


def _reproduce_multi(task, data_dir, args):
    sources = {k: load_dataset(data_dir, k) for k in task.sources}
    target = load_dataset(data_dir, task.target)
    rows, reports = [], []
    epochs = args.epochs or [50, 100, 150]
    for combo in source_combinations(task.sources):
        for e in epochs:
            spec = TaskSpec(str(task.task_id), combo, task.target, target.n_in, target.n_out, method="msann",
                            mode="all-source", n_runs=args.n_runs, seed=args.seed or 0,
                            msann=MsAnnConfig(epoch_max=e))
            rep = run_task(spec, jobs=args.jobs, datasets=([sources[k] for k in combo], target))
            rows.append([task.task_id, " + ".join(MACHINES[k] for k in combo), e, rep.chosen_median,
                         rep.param_count, rep.sigma_baseline])
            reports.append(rep)
    return MULTI_COLUMNS, rows, reports


def cmd_reproduce(args) -> int:
    task = get_task(args.task)
    data_dir = args.data_dir or os.environ.get(DATA_ENV)
    if not data_dir:
        raise MissingFile(f"no data directory given (use --data-dir or {DATA_ENV}). {ACQUIRE_HINT}")
    check_data_dir(data_dir, task)
    build = _reproduce_single if task.kind == "single" else _reproduce_multi
    columns, rows, reports = build(task, data_dir, args)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    out = Path(args.out or "results")
    table = buf.getvalue()
    sys.stdout.write(table)
    payload = json.dumps([dataclasses.asdict(r) for r in reports], indent=2, sort_keys=True) + "\n"
    for p in (out / f"task{task.task_id}_table.csv", out / f"task{task.task_id}_reports.json"):
        if p.exists() and not args.force:
            raise ConfigError(f"{p} exists; pass --force to overwrite")
    _write(out / f"task{task.task_id}_table.csv", table, True)
    _write(out / f"task{task.task_id}_reports.json", payload, True)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="master seed (overrides the config)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes for the runs")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--force", action="store_true", help="overwrite existing outputs")
    common.add_argument("-v", "--verbose", action="store_true")

    p = argparse.ArgumentParser(prog="pareto-tl", description="Pareto-frontier source data selection for "
                                "transfer-learning regression.")
    sub = p.add_subparsers(dest="command", required=True)

    d = sub.add_parser("distances", parents=[common], help="write the per-row distance table")
    d.add_argument("config")
    d.set_defaults(func=cmd_distances)

    s = sub.add_parser("select", parents=[common], help="peel frontiers and search for a source subset")
    s.add_argument("config")
    s.add_argument("--mode", choices=("local", "exhaustive"), default=None)
    s.set_defaults(func=cmd_select)

    e = sub.add_parser("evaluate", parents=[common], help="evaluate a fixed source subset")
    e.add_argument("config")
    e.add_argument("--subset", default="all", help="'all' or a file of source row indices")
    e.set_defaults(func=cmd_evaluate)

    r = sub.add_parser("reproduce", parents=[common], help="run a benchmark task on external data")
    r.add_argument("task")
    r.add_argument("--data-dir", default=None, help=f"dataset directory (default: ${DATA_ENV})")
    r.add_argument("--n-runs", type=int, default=50)
    r.add_argument("--methods", nargs="+", choices=("idtr", "ftann"), default=None)
    r.add_argument("--metric-sets", nargs="+", default=None, help="e.g. euclidean,cosine performance,feature")
    r.add_argument("--epochs", nargs="+", type=int, default=None, help="multi-source epoch budgets")
    r.set_defaults(func=cmd_reproduce)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
