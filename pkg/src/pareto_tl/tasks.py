"""Catalogue of the benchmark transfer tasks and the expected data-directory layout.

The datasets are external and not shipped. Expected files under the data
directory::

    melt_pool/ded_lb_p.csv       PFR (g/min), SS (mm/min), LP (W), width      61 rows
    melt_pool/ded_lb_w.csv       WFR (m/min), TS (mm/s), LP (W), EP (W), width  9 rows
    relative_density/<machine>.csv
        laser_power, speed, hatch_spacing, energy_density, relative_density

with ``<machine>`` one of ``slm_125_hl``, ``slm_250_hl``, ``eos_m270``,
``slm``, ``concept_laser_m2``, ``concept_laser_m3``. All files have a header
row. The melt-pool files are converted to the common (MFR, TS, ED) inputs on
load.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from pathlib import Path

from .data import (
    DENSITY_SS316L,
    LabeledDataset,
    ProcessFeatureRow,
    common_feature_dataset,
    load_csv,
)
from .errors import ConfigError, MissingFile

DATA_ENV = "PARETO_TL_DATA"

MACHINES = {
    "slm_125_hl": "SLM 125 HL",
    "slm_250_hl": "SLM 250 HL",
    "eos_m270": "EOS M270",
    "slm": "SLM",
    "concept_laser_m2": "Concept Laser M2",
    "concept_laser_m3": "Concept Laser M3",
}
SOURCE_MACHINES = ("slm_250_hl", "slm_125_hl", "eos_m270", "concept_laser_m2")

ALL_METRIC_SETS = tuple(
    c for r in (2, 3, 4) for c in itertools.combinations(("euclidean", "cosine", "performance", "feature"), r)
)

ACQUIRE_HINT = (
    "The melt pool width data (DED-LB/p and DED-LB/w) and the LPBF relative density data "
    "are not distributed with this package. Obtain them from their publishers, convert them "
    "to the CSV layout documented in pareto_tl.tasks, and point --data-dir (or the "
    f"{DATA_ENV} environment variable) at the directory."
)


@dataclass(frozen=True)
class BenchmarkTask:
    task_id: int
    sources: tuple[str, ...]  # dataset keys
    target: str
    kind: str  # "single" or "multi"
    metric_sets: tuple[tuple[str, ...], ...]
    methods: tuple[str, ...]


def _single(tid, src, tgt, metric_sets):
    return BenchmarkTask(tid, (src,), tgt, "single", metric_sets, ("idtr", "ftann"))


TASKS = {
    1: _single(1, "ded_lb_p", "ded_lb_w", ALL_METRIC_SETS),
    **{2 + i: _single(2 + i, m, "slm", (("euclidean", "performance"),)) for i, m in enumerate(SOURCE_MACHINES)},
    **{6 + i: _single(6 + i, m, "concept_laser_m3", (("euclidean", "performance"),))
       for i, m in enumerate(SOURCE_MACHINES)},
    10: BenchmarkTask(10, SOURCE_MACHINES, "slm", "multi", (), ("msann",)),
    11: BenchmarkTask(11, SOURCE_MACHINES, "concept_laser_m3", "multi", (), ("msann",)),
}


def get_task(task_id) -> BenchmarkTask:
    try:
        return TASKS[int(task_id)]
    except (KeyError, ValueError):
        raise ConfigError(f"unknown task id {task_id!r}; choose from {sorted(TASKS)}") from None


def source_combinations(sources) -> list[tuple[str, ...]]:
    """Every combination of two or more sources, largest first."""
    return [c for r in range(len(sources), 1, -1) for c in itertools.combinations(sources, r)]


def dataset_path(data_dir, key: str) -> Path:
    data_dir = Path(data_dir)
    if key in ("ded_lb_p", "ded_lb_w"):
        return data_dir / "melt_pool" / f"{key}.csv"
    if key in MACHINES:
        return data_dir / "relative_density" / f"{key}.csv"
    raise ConfigError(f"unknown dataset key {key!r}")


def _melt_pool(path: Path, kind: str) -> LabeledDataset:
    n_in = 3 if kind == "p" else 4
    raw = load_csv(path, n_in, 1, domain_id=f"ded_lb_{kind}")
    rows = []
    for x in raw.inputs:
        if kind == "p":
            rows.append(ProcessFeatureRow("DED-LB/p", x[0], x[1], x[2], 0.0, DENSITY_SS316L))
        else:
            rows.append(ProcessFeatureRow("DED-LB/w", x[0], x[1], x[2], x[3]))
    return common_feature_dataset(rows, raw.outputs[:, 0], raw.domain_id)


def load_dataset(data_dir, key: str) -> LabeledDataset:
    path = dataset_path(data_dir, key)
    if not path.is_file():
        raise MissingFile(f"dataset file not found: {path}. {ACQUIRE_HINT}")
    if key == "ded_lb_p":
        return _melt_pool(path, "p")
    if key == "ded_lb_w":
        return _melt_pool(path, "w")
    return load_csv(path, 4, 1, domain_id=key)


def check_data_dir(data_dir, task: BenchmarkTask) -> None:
    d = Path(data_dir)
    if not d.is_dir():
        raise MissingFile(f"data directory not found: {d}. {ACQUIRE_HINT}")
    missing = [str(dataset_path(d, k)) for k in task.sources + (task.target,) if not dataset_path(d, k).is_file()]
    if missing:
        raise MissingFile(f"missing dataset files: {', '.join(missing)}. {ACQUIRE_HINT}")
