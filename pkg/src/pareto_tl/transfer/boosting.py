"""Instance-based transfer: two-stage TrAdaBoost.R2 over weighted CART trees.

Outer step ``t`` moves the target share of the pooled weight linearly from
``N_t / (N_s + N_t)`` to 1 by shrinking source weights with ``beta ** e_i``
(``e_i`` the adjusted error of a tree fit on the pool, ``beta`` found by root
finding). Each outer step runs an AdaBoost.R2 inner loop in which only target
weights are boosted, and is scored by cross-validation on the target rows. The
ensemble from the best-scoring outer step is kept.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from ..data import LabeledDataset
from ..errors import EmptyEnsemble, ShapeMismatch, TargetTooSmall
from ..tree import MAX_DEPTH, RegressionTree, tree_fit, tree_predict


@dataclass(frozen=True)
class TwoStageBoostConfig:
    outer_steps: int = 5
    inner_rounds: int = 10
    max_depth: int = MAX_DEPTH
    cv_folds: int | None = None  # None: leave-one-out over the target rows

    def __post_init__(self):
        if self.outer_steps < 1 or self.inner_rounds < 1:
            raise ValueError("outer_steps and inner_rounds must be >= 1")


def weighted_median(values, weights) -> np.ndarray:
    """Row-wise weighted median of ``values`` (rows x members).

    The smallest member value whose cumulative weight reaches half the total.
    """
    V = np.atleast_2d(np.asarray(values, dtype=float))
    w = np.asarray(weights, dtype=float)
    if V.shape[1] != w.size:
        raise ShapeMismatch("one weight per member expected")
    order = np.argsort(V, axis=1, kind="stable")
    cum = np.cumsum(w[order], axis=1)
    pick = np.argmax(cum >= 0.5 * cum[:, -1:], axis=1)
    rows = np.arange(V.shape[0])
    return V[rows, order[rows, pick]]


@dataclass(frozen=True, eq=False)
class BoostedTrees:
    trees: tuple[RegressionTree, ...]
    weights: np.ndarray  # log(1/beta) per member

    def predict(self, X) -> np.ndarray:
        if not self.trees:
            raise EmptyEnsemble("ensemble has no members")
        preds = np.column_stack([tree_predict(t, X) for t in self.trees])
        return weighted_median(preds, self.weights)


@dataclass(frozen=True, eq=False)
class IdtrModel:
    ensembles: tuple[BoostedTrees, ...]  # one per output column
    chosen_step: int
    cv_errors: tuple[float, ...]

    def predict(self, X) -> np.ndarray:
        return idtr_predict(self, X)


def idtr_predict(model, X) -> np.ndarray:
    if isinstance(model, BoostedTrees):
        return model.predict(X)
    X = np.asarray(X, dtype=float)
    return np.column_stack([e.predict(X) for e in model.ensembles])


def adaboost_r2(X, y, w, n_target: int, rounds: int, max_depth: int = MAX_DEPTH) -> BoostedTrees:
    """AdaBoost.R2 where only the last ``n_target`` weights are boosted."""
    w = np.asarray(w, dtype=float) / np.sum(w)
    trees, weights = [], []
    tgt = slice(w.size - n_target, w.size)
    for _ in range(rounds):
        tree = tree_fit(X, y, w, max_depth)
        r = np.abs(tree_predict(tree, X) - y)
        rmax = r.max()
        if rmax == 0.0:
            trees.append(tree)
            weights.append(1.0)
            break
        e = r / rmax
        wt = w[tgt]
        eps = float(np.sum(wt * e[tgt]) / np.sum(wt))
        if eps <= 0.0:
            trees.append(tree)
            weights.append(1.0)
            break
        if eps >= 0.5:
            if not trees:
                trees.append(tree)
                weights.append(1.0)
            break
        beta = eps / (1.0 - eps)
        trees.append(tree)
        weights.append(float(np.log(1.0 / beta)))
        w = w.copy()
        w[tgt] *= beta ** (1.0 - e[tgt])
        w /= w.sum()
    return BoostedTrees(tuple(trees), np.array(weights))


def target_fraction(t: int, n_source: int, n_target: int, outer_steps: int) -> float:
    base = n_target / (n_source + n_target)
    if outer_steps == 1:
        return base
    return base + t / (outer_steps - 1) * (1.0 - base)


def reweight_source(X, y, w, n_target: int, fraction: float, max_depth: int = MAX_DEPTH) -> np.ndarray:
    """Shrink source weights by ``beta ** e_i`` so target weights sum to ``fraction`` of the pool."""
    w = np.asarray(w, dtype=float).copy()
    n_source = w.size - n_target
    if n_source == 0:
        return w / w.sum()
    ws, wt = w[:n_source], w[n_source:]
    t_sum = wt.sum()
    goal = 0.0 if fraction >= 1.0 else t_sum * (1.0 - fraction) / fraction
    if goal <= 0.0:
        w[:n_source] = 0.0
        return w / w.sum()
    tree = tree_fit(X, y, w, max_depth)
    r = np.abs(tree_predict(tree, X) - y)
    rmax = r.max()
    e = r[:n_source] / rmax if rmax > 0 else np.zeros(n_source)
    mass = lambda beta: float(np.sum(ws * beta**e)) - goal
    if mass(1.0) <= 0.0:
        beta = 1.0
    elif mass(0.0) >= 0.0:
        beta = 0.0
    else:
        beta = brentq(mass, 0.0, 1.0, xtol=1e-14, rtol=1e-12)
    new_ws = ws * beta**e
    total = new_ws.sum()
    # exact share even when beta alone cannot reach it (rows with zero error)
    w[:n_source] = new_ws * (goal / total) if total > 0 else 0.0
    return w / w.sum()


def _cv_folds(n: int, folds: int | None) -> list[np.ndarray]:
    if folds is None or folds >= n:
        return [np.array([j]) for j in range(n)]
    return [a for a in np.array_split(np.arange(n), folds) if a.size]


def _cv_error(Xs, ys, ws, Xt, yt, wt, cfg: TwoStageBoostConfig) -> float:
    errs = []
    n_t = yt.size
    for held in _cv_folds(n_t, cfg.cv_folds):
        keep = np.setdiff1d(np.arange(n_t), held)
        wk = wt[keep] * (wt.sum() / wt[keep].sum())
        X = np.vstack([Xs, Xt[keep]])
        y = np.concatenate([ys, yt[keep]])
        model = adaboost_r2(X, y, np.concatenate([ws, wk]), keep.size, cfg.inner_rounds, cfg.max_depth)
        r = model.predict(Xt[held]) - yt[held]
        errs.append(float(np.sqrt(np.mean(r * r))))
    return float(np.mean(errs))


def _fit_column(Xs, ys, Xt, yt, cfg: TwoStageBoostConfig):
    n_s, n_t = ys.size, yt.size
    X = np.vstack([Xs, Xt])
    y = np.concatenate([ys, yt])
    w = np.full(n_s + n_t, 1.0 / (n_s + n_t))
    best = None
    errors = []
    for t in range(cfg.outer_steps):
        if t > 0 and n_s > 0:
            w = reweight_source(X, y, w, n_t, target_fraction(t, n_s, n_t, cfg.outer_steps), cfg.max_depth)
        err = _cv_error(Xs, ys, w[:n_s], Xt, yt, w[n_s:], cfg)
        errors.append(err)
        if best is None or err < best[0]:
            best = (err, t, adaboost_r2(X, y, w, n_t, cfg.inner_rounds, cfg.max_depth))
        if n_s == 0:
            # nothing to reweight: later outer steps would repeat this one
            break
    return best[2], best[1], errors


def fit_idtr(source: LabeledDataset | None, target: LabeledDataset,
             cfg: TwoStageBoostConfig = TwoStageBoostConfig(), seed=None) -> IdtrModel:
    """Two-stage TrAdaBoost.R2. Deterministic, so ``seed`` is accepted and ignored."""
    if target.n_rows < 2:
        raise TargetTooSmall("two-stage boosting needs at least 2 target rows")
    if source is None:
        Xs = np.empty((0, target.n_in))
        Ys = np.empty((0, target.n_out))
    else:
        if source.n_in != target.n_in or source.n_out != target.n_out:
            raise ShapeMismatch("source and target widths differ")
        Xs, Ys = source.inputs, source.outputs
    ensembles, steps, errors = [], [], []
    for j in range(target.n_out):
        ens, step, errs = _fit_column(Xs, Ys[:, j], target.inputs, target.outputs[:, j], cfg)
        ensembles.append(ens)
        steps.append(step)
        errors.extend(errs)
    return IdtrModel(tuple(ensembles), steps[0], tuple(errors))
