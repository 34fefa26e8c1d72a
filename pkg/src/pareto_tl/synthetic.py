"""Synthetic shifted-cluster transfer task.

Most source rows follow the target's response surface up to a small offset;
a fraction sits in a far-away cluster whose response is strongly shifted, so
using every source row should hurt and a well-chosen subset should not.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import LabeledDataset, write_csv

FIXTURE_DIR = Path(__file__).resolve().parents[2] / "data" / "synthetic"
FEATURES = ("x0", "x1", "x2")


def response(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.sin(2.0 * X[:, 0]) + 0.5 * X[:, 1] ** 2 + 0.3 * X[:, 2]


def shifted_cluster_task(n_source: int = 60, n_target: int = 9, far_fraction: float = 0.3,
                         seed: int = 0, noise: float = 0.02):
    """Return ``(source, target)`` datasets with 3 inputs and 1 output."""
    rng = np.random.default_rng(seed)
    n_far = int(round(far_fraction * n_source))
    n_near = n_source - n_far
    Xt = rng.uniform(0.2, 0.8, size=(n_target, 3))
    yt = response(Xt) + noise * rng.standard_normal(n_target)
    Xn = rng.uniform(0.1, 0.9, size=(n_near, 3))
    yn = response(Xn) + 0.05 + noise * rng.standard_normal(n_near)
    Xf = rng.uniform(0.75, 1.0, size=(n_far, 3)) + np.array([0.3, 0.3, 0.0])
    yf = response(Xf) + 1.5 + noise * rng.standard_normal(n_far)
    Xs = np.vstack([Xn, Xf])
    ys = np.concatenate([yn, yf])
    order = rng.permutation(n_source)
    source = LabeledDataset("synthetic_source", Xs[order], ys[order, None], FEATURES, ("y",))
    target = LabeledDataset("synthetic_target", Xt, yt[:, None], FEATURES, ("y",))
    return source, target


def write_fixture(directory=FIXTURE_DIR, **kwargs) -> tuple[Path, Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    source, target = shifted_cluster_task(**kwargs)
    sp, tp = directory / "source.csv", directory / "target.csv"
    write_csv(source, sp)
    write_csv(target, tp)
    return sp, tp
