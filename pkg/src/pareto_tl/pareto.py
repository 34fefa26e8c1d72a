"""Pareto frontiers over distance columns and the frontier-peeling searches.

All coordinates are minimised. Search drivers take an ``evaluate`` callable
mapping a step index and the cumulative source indices to a statistic object
with a ``median`` attribute (or a plain float).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DataError


def dominates(a, b) -> bool:
    a = np.asarray(a)
    b = np.asarray(b)
    return bool(np.all(a <= b) and np.any(a < b))


def pareto_frontier(points) -> np.ndarray:
    """Indices of non-dominated points, ascending. Duplicates are all kept."""
    P = np.asarray(points, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    if P.ndim != 2 or P.shape[0] == 0 or P.shape[1] == 0:
        raise DataError(f"expected a nonempty N x m array, got shape {P.shape}")
    le = np.all(P[:, None, :] <= P[None, :, :], axis=2)
    lt = np.any(P[:, None, :] < P[None, :, :], axis=2)
    dominated = np.any(le & lt, axis=0)
    return np.flatnonzero(~dominated)


@dataclass(frozen=True)
class FrontierStep:
    k: int
    selected: tuple[int, ...]
    cumulative: tuple[int, ...]


def peel_frontiers(table_or_points) -> list[FrontierStep]:
    """Repeatedly remove the frontier of the remaining rows until none remain."""
    P = getattr(table_or_points, "normalized", table_or_points)
    P = np.asarray(P, dtype=float)
    if P.ndim == 1:
        P = P[:, None]
    remaining = np.arange(P.shape[0])
    steps = []
    cumulative: list[int] = []
    while remaining.size:
        front = remaining[pareto_frontier(P[remaining])]
        cumulative = sorted(cumulative + front.tolist())
        steps.append(FrontierStep(len(steps) + 1, tuple(int(i) for i in front), tuple(cumulative)))
        remaining = np.setdiff1d(remaining, front)
    return steps


@dataclass
class StepRecord:
    step: FrontierStep
    sigma: float
    run_errors: list = field(default_factory=list)


@dataclass
class SearchTrace:
    mode: str
    sigma_baseline: float
    records: list[StepRecord]
    chosen_step: int
    chosen: tuple[int, ...]
    termination: str
    n_frontiers: int = 0

    @property
    def sigmas(self) -> list[float]:
        return [r.sigma for r in self.records]

    def record(self, k: int) -> StepRecord:
        return self.records[k - 1]


def _unpack(result):
    sigma = getattr(result, "median", result)
    runs = list(getattr(result, "values", []))
    return float(sigma), runs


def _best(records) -> StepRecord:
    # first minimum, i.e. the smaller subset on ties
    return min(records, key=lambda r: r.sigma)


def local_search(steps: list[FrontierStep], evaluate: Callable, sigma_baseline: float) -> SearchTrace:
    """Stop at the first step whose error rises after a previous step beat the baseline.

    When the trigger fires at step k the cumulative subset through step k-1
    is returned. Otherwise the best step seen is returned with termination
    ``"exhausted-without-trigger"``.
    """
    if not steps:
        raise DataError("no frontier steps to search")
    records: list[StepRecord] = []
    for step in steps:
        sigma, runs = _unpack(evaluate(step.k, step.cumulative))
        records.append(StepRecord(step, sigma, runs))
        if len(records) >= 2:
            prev = records[-2].sigma
            if sigma > prev and prev < sigma_baseline:
                chosen = records[-2]
                return SearchTrace("local", sigma_baseline, records, chosen.step.k,
                                   chosen.step.cumulative, "trigger", len(steps))
    best = _best(records)
    return SearchTrace("local", sigma_baseline, records, best.step.k, best.step.cumulative,
                       "exhausted-without-trigger", len(steps))


def exhaustive_search(steps: list[FrontierStep], evaluate: Callable, sigma_baseline: float) -> SearchTrace:
    """Evaluate every cumulative subset and return the arg-min (smallest step on ties)."""
    if not steps:
        raise DataError("no frontier steps to search")
    records = []
    for step in steps:
        sigma, runs = _unpack(evaluate(step.k, step.cumulative))
        records.append(StepRecord(step, sigma, runs))
    best = _best(records)
    return SearchTrace("exhaustive", sigma_baseline, records, best.step.k, best.step.cumulative,
                       "all-frontiers", len(steps))
