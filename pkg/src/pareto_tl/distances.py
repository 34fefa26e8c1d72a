"""Per-source-row distances to a target domain.

Spatial distances (euclidean, cosine) work on concatenated ``[x, y]`` rows.
Model distances (performance, feature) measure how a source ELM changes when
one source row is left out; every ELM in one table shares the same frozen
hidden layer so only the data differs between fits.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, remove_row
from .elm import DEFAULT_HIDDEN, DEFAULT_RIDGE, ElmHidden, draw_hidden, elm_train
from .errors import ConfigError, DataError, EmptyData, ShapeMismatch

METRICS = ("euclidean", "cosine", "performance", "feature")
MODEL_METRICS = ("performance", "feature")
_ALIASES = {"euc": "euclidean", "cos": "cosine", "per": "performance", "fea": "feature"}


def canonical_metrics(names) -> tuple[str, ...]:
    """Validate metric names (short aliases allowed) and return them in canonical order."""
    if isinstance(names, str):
        names = [n for n in names.replace(",", " ").split() if n]
    out = []
    for name in names:
        key = _ALIASES.get(str(name).lower(), str(name).lower())
        if key not in METRICS:
            raise ConfigError(f"unknown distance metric {name!r}; choose from {', '.join(METRICS)}")
        if key not in out:
            out.append(key)
    if not out:
        raise ConfigError("at least one distance metric is required")
    return tuple(m for m in METRICS if m in out)


@dataclass(frozen=True)
class ModelDistanceConfig:
    hidden: int = DEFAULT_HIDDEN
    ridge: float = DEFAULT_RIDGE
    seed: int = 0


def error_score(predicted, actual) -> float:
    """0.5 * RMSE + 0.5 * max absolute error, pooled over all outputs."""
    p = np.asarray(predicted, dtype=float)
    a = np.asarray(actual, dtype=float)
    if p.shape != a.shape:
        raise ShapeMismatch(f"shapes differ: {p.shape} vs {a.shape}")
    if p.size == 0:
        raise EmptyData("error_score of empty arrays")
    r = p - a
    return 0.5 * float(np.sqrt(np.mean(r * r))) + 0.5 * float(np.max(np.abs(r)))


def _target_rows(target) -> np.ndarray:
    T = target.rows if isinstance(target, LabeledDataset) else np.atleast_2d(np.asarray(target, float))
    if T.shape[0] == 0:
        raise EmptyData("target has no rows")
    return T


def euclidean_distance(source_row, target) -> float:
    """Distance from one ``[x, y]`` row to its nearest target row."""
    T = _target_rows(target)
    s = np.asarray(source_row, dtype=float)
    if s.shape != (T.shape[1],):
        raise ShapeMismatch("source row and target rows differ in width")
    return float(np.min(np.linalg.norm(T - s, axis=1)))


def cosine_distance(source_row, target) -> float:
    """Angle-based distance around the target row nearest to ``source_row``.

    With ``k`` the nearest target row, ``v1 = s - t_k``, the partner ``j`` is the
    target row closest to ``t_k`` among those strictly on the source side of
    the hyperplane through ``t_k`` normal to ``v1``. Returns ``1 - cos(v1, v2)``
    with ``v2 = t_j - t_k``; 1 when no partner exists, 0 when ``s == t_k``.
    """
    T = _target_rows(target)
    s = np.asarray(source_row, dtype=float)
    if s.shape != (T.shape[1],):
        raise ShapeMismatch("source row and target rows differ in width")
    k = int(np.argmin(np.linalg.norm(T - s, axis=1)))
    v1 = s - T[k]
    n1 = np.linalg.norm(v1)
    if n1 == 0.0:
        return 0.0
    rel = T - T[k]
    same_side = rel @ v1 > 0.0
    if not same_side.any():
        return 1.0
    gaps = np.where(same_side, np.linalg.norm(rel, axis=1), np.inf)
    v2 = rel[int(np.argmin(gaps))]
    return float(1.0 - (v1 @ v2) / (n1 * np.linalg.norm(v2)))


def orthogonal_procrustes(A, B) -> np.ndarray:
    """Orthogonal ``T`` minimising ``||T A - B||_F``.

    ``T = U V^T`` from the SVD of ``B A^T``. When ``B A^T`` is rank deficient
    the optimum is not unique; the part of ``T`` acting on the null space is
    then chosen as close to the identity as possible, which makes ``T``
    well defined and ``||T - I||`` meaningful.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes differ: {A.shape} vs {B.shape}")
    if A.ndim == 1:
        A, B = A[:, None], B[:, None]
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise DataError("non-finite input to orthogonal_procrustes")
    M = B @ A.T
    U, s, Vt = np.linalg.svd(M)
    k = M.shape[0]
    tol = k * np.finfo(float).eps * (s[0] if s.size else 0.0)
    r = int(np.sum(s > tol))
    if r == k:
        return U @ Vt
    Ur, Uc = U[:, :r], U[:, r:]
    Vr, Vc = Vt[:r].T, Vt[r:].T
    P, _, Qt = np.linalg.svd(Vc.T @ Uc)
    R = Qt.T @ P.T
    return Ur @ Vr.T + Uc @ R @ Vc.T


def _alignment_gap(theta_s, theta_t) -> float:
    T = orthogonal_procrustes(theta_s, theta_t)
    return float(np.linalg.norm(T - np.eye(T.shape[0])))


@dataclass(frozen=True, eq=False)
class _ModelFits:
    hidden: ElmHidden
    base_source: object
    base_target: object
    loo_sources: list


def _fit_models(source: LabeledDataset, target: LabeledDataset, cfg: ModelDistanceConfig,
                rows=None) -> _ModelFits:
    if source.n_rows < 2:
        raise DataError("model distances need at least 2 source rows")
    hidden = draw_hidden(source.n_in, cfg.hidden, cfg.seed)
    fit = lambda ds: elm_train(ds.inputs, ds.outputs, ridge=cfg.ridge, hidden_map=hidden)
    rows = range(source.n_rows) if rows is None else rows
    return _ModelFits(
        hidden,
        fit(source),
        fit(target),
        [fit(remove_row(source, i)) for i in rows],
    )


def performance_distance(i: int, source: LabeledDataset, target: LabeledDataset,
                         cfg: ModelDistanceConfig = ModelDistanceConfig()) -> float:
    """Target error of the full-source ELM minus that of the ELM without row ``i``."""
    fits = _fit_models(source, target, cfg, rows=[i])
    Xt, Yt = target.inputs, target.outputs
    return error_score(fits.base_source.predict(Xt), Yt) - error_score(fits.loo_sources[0].predict(Xt), Yt)


def feature_distance(i: int, source: LabeledDataset, target: LabeledDataset,
                     cfg: ModelDistanceConfig = ModelDistanceConfig()) -> float:
    """Change in ``||T - I||_F`` between source and target output layers when row ``i`` is dropped."""
    fits = _fit_models(source, target, cfg, rows=[i])
    theta_t = fits.base_target.output_weights
    base = _alignment_gap(fits.base_source.output_weights, theta_t)
    return base - _alignment_gap(fits.loo_sources[0].output_weights, theta_t)


def model_distances(source: LabeledDataset, target: LabeledDataset,
                    cfg: ModelDistanceConfig = ModelDistanceConfig()) -> tuple[np.ndarray, np.ndarray]:
    """Performance and feature distances for every source row, sharing all ELM fits."""
    fits = _fit_models(source, target, cfg)
    Xt, Yt = target.inputs, target.outputs
    base_err = error_score(fits.base_source.predict(Xt), Yt)
    theta_t = fits.base_target.output_weights
    base_gap = _alignment_gap(fits.base_source.output_weights, theta_t)
    per = np.array([base_err - error_score(m.predict(Xt), Yt) for m in fits.loo_sources])
    fea = np.array([base_gap - _alignment_gap(m.output_weights, theta_t) for m in fits.loo_sources])
    return per, fea


def base_transferability_score(source: LabeledDataset, target: LabeledDataset,
                               cfg: ModelDistanceConfig = ModelDistanceConfig()) -> float:
    """Target error of an ELM trained on all of ``source`` (reporting only)."""
    if source.n_rows == 0 or target.n_rows == 0:
        raise EmptyData("both datasets must be nonempty")
    model = elm_train(source.inputs, source.outputs, cfg.hidden, cfg.ridge, cfg.seed)
    return error_score(model.predict(target.inputs), target.outputs)


def minmax_normalize(values) -> np.ndarray:
    """Per-column min-max to [0, 1]; constant columns become 0."""
    v = np.asarray(values, dtype=float)
    lo = v.min(axis=0)
    span = v.max(axis=0) - lo
    out = (v - lo) / np.where(span == 0, 1.0, span)
    return np.where(span == 0, 0.0, out)


@dataclass(frozen=True, eq=False)
class DistanceTable:
    metrics: tuple[str, ...]
    raw: np.ndarray  # N_s x m
    normalized: np.ndarray
    provenance: dict = field(default_factory=dict)

    @property
    def n_source(self) -> int:
        return self.raw.shape[0]

    def column(self, metric: str, normalized: bool = True) -> np.ndarray:
        j = self.metrics.index(metric)
        return (self.normalized if normalized else self.raw)[:, j]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        header = ["source_index"]
        for m in self.metrics:
            header += [f"{m}_raw", f"{m}_norm"]
        w.writerow(header)
        for i in range(self.n_source):
            row = [i]
            for j in range(len(self.metrics)):
                row += [repr(float(self.raw[i, j])), repr(float(self.normalized[i, j]))]
            w.writerow(row)
        return buf.getvalue()


def compute_distance_table(source: LabeledDataset, target: LabeledDataset, metrics,
                           cfg: ModelDistanceConfig | None = None, seed: int | None = None) -> DistanceTable:
    """Raw and normalised distances of every source row. ``seed`` overrides ``cfg.seed``."""
    metrics = canonical_metrics(metrics)
    if source.n_in != target.n_in or source.n_out != target.n_out:
        raise ShapeMismatch("source and target widths differ")
    if source.n_rows == 0:
        raise EmptyData("source has no rows")
    if cfg is None:
        if any(m in MODEL_METRICS for m in metrics):
            cfg = ModelDistanceConfig()
    if cfg is not None and seed is not None:
        cfg = ModelDistanceConfig(cfg.hidden, cfg.ridge, seed)
    S, T = source.rows, target.rows
    cols = {}
    if "euclidean" in metrics:
        cols["euclidean"] = np.array([euclidean_distance(s, T) for s in S])
    if "cosine" in metrics:
        cols["cosine"] = np.array([cosine_distance(s, T) for s in S])
    if any(m in MODEL_METRICS for m in metrics):
        cols["performance"], cols["feature"] = model_distances(source, target, cfg)
    raw = np.column_stack([cols[m] for m in metrics])
    prov = {"n_source": source.n_rows, "n_target": target.n_rows}
    if cfg is not None:
        prov["elm"] = {"hidden": cfg.hidden, "ridge": cfg.ridge, "seed": cfg.seed}
    return DistanceTable(metrics, raw, minmax_normalize(raw), prov)
