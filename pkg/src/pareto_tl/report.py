"""Render evaluation reports as CSV (one row per evaluated step) or JSON (everything)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict

from .errors import ConfigError
from .evaluation import EvalReport, RunStats, StepResult

CSV_COLUMNS = ("task", "method", "mode", "median_rmse", "step", "subset_size", "baseline_rmse", "seed")


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def render_csv(report: EvalReport) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for st in report.steps:
        w.writerow([report.task_id, report.method, report.mode, _fmt(st.stats.median), st.step,
                    st.subset_size, _fmt(report.sigma_baseline), report.seed])
    if not report.steps:
        w.writerow([report.task_id, report.method, report.mode, _fmt(report.chosen_median),
                    "" if report.chosen_step is None else report.chosen_step, report.chosen_size,
                    _fmt(report.sigma_baseline), report.seed])
    return buf.getvalue()


def report_to_dict(report: EvalReport) -> dict:
    return asdict(report)


def render_json(report: EvalReport) -> str:
    return json.dumps(report_to_dict(report), indent=2, sort_keys=True, allow_nan=False) + "\n"


def _stats(d) -> RunStats:
    return RunStats(tuple(d["values"]), d["median"], d["q1"], d["q3"], d["min"], d["max"])


def report_from_dict(d: dict) -> EvalReport:
    d = dict(d)
    d["baseline"] = _stats(d["baseline"])
    d["steps"] = tuple(
        StepResult(s["step"], s["subset_size"], tuple(s["selected"]), tuple(s["cumulative"]), _stats(s["stats"]))
        for s in d["steps"]
    )
    d["metrics"] = tuple(d["metrics"])
    return EvalReport(**d)


def parse_json(text: str) -> EvalReport:
    return report_from_dict(json.loads(text))


def render_report(report: EvalReport, fmt: str = "json") -> str:
    if fmt == "csv":
        return render_csv(report)
    if fmt == "json":
        return render_json(report)
    raise ConfigError(f"unknown report format {fmt!r}; choose csv or json")


def step_table(report: EvalReport) -> str:
    """Plain-text per-step summary, in the ``step (source rows)`` style."""
    lines = [f"task {report.task_id}  method {report.method}  mode {report.mode}",
             f"baseline median RMSE {report.sigma_baseline:.4f}"]
    if report.param_count is not None:
        lines.append(f"parameters {report.param_count}")
    lines.append(f"{'step (rows)':>14}  {'median':>8}  {'q1':>8}  {'q3':>8}")
    for st in report.steps:
        mark = " *" if st.step == report.chosen_step else ""
        lines.append(f"{f'{st.step} ({st.subset_size})':>14}  {st.stats.median:8.4f}  "
                     f"{st.stats.q1:8.4f}  {st.stats.q3:8.4f}{mark}")
    if report.chosen_step is not None:
        lines.append(f"chosen: step {report.chosen_step} with {report.chosen_size} source rows, "
                     f"median RMSE {report.chosen_median:.4f} ({report.termination})")
    if report.all_source_median is not None and report.n_frontiers is not None:
        lines.append(f"all source: {report.n_frontiers} ({report.n_source}), "
                     f"median RMSE {report.all_source_median:.4f}")
    return "\n".join(lines) + "\n"
