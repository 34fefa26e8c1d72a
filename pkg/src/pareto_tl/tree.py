"""Weighted CART regression tree.

Splits minimise the weighted sum of squared deviations of the two children,
thresholds are midpoints between consecutive distinct feature values, and ties
go to the lowest feature index and then the smallest threshold. The grower is
compiled with numba because boosting inside leave-one-out loops fits many
thousands of trees per experiment.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .errors import EmptyData, ShapeMismatch

MAX_DEPTH = 6


@numba.njit(cache=True)
def _best_split(X, yc, w, idx, sse):
    """Best (feature, threshold, child_sse) for the rows ``idx``; feature -1 if none."""
    m = idx.size
    p = X.shape[1]
    best_f = -1
    best_t = 0.0
    best = sse
    tol = 1e-12 * (sse + 1e-300)
    xs = np.empty(m)
    ws = np.empty(m)
    ys = np.empty(m)
    sw = np.empty(m)
    ss = np.empty(m)
    sq = np.empty(m)
    for f in range(p):
        col = X[idx, f]
        order = np.argsort(col, kind="mergesort")
        for k in range(m):
            j = order[k]
            xs[k] = col[j]
            ws[k] = w[idx[j]]
            ys[k] = yc[idx[j]]
        # suffix sums for the right child avoid cancellation when weights span many magnitudes
        for k in range(m - 1, -1, -1):
            nxt = k + 1
            sw[k] = ws[k] + (sw[nxt] if nxt < m else 0.0)
            ss[k] = ws[k] * ys[k] + (ss[nxt] if nxt < m else 0.0)
            sq[k] = ws[k] * ys[k] * ys[k] + (sq[nxt] if nxt < m else 0.0)
        lw = 0.0
        ls = 0.0
        lq = 0.0
        for k in range(m - 1):
            lw += ws[k]
            ls += ws[k] * ys[k]
            lq += ws[k] * ys[k] * ys[k]
            if xs[k] == xs[k + 1]:
                continue
            rw = sw[k + 1]
            rs = ss[k + 1]
            rq = sq[k + 1]
            if lw <= 0.0 or rw <= 0.0:
                continue
            left = lq - ls * ls / lw
            right = rq - rs * rs / rw
            if left < 0.0:
                left = 0.0
            if right < 0.0:
                right = 0.0
            cand = left + right
            if cand < best - tol:
                best = cand
                best_f = f
                thr = xs[k] + (xs[k + 1] - xs[k]) / 2.0
                if thr >= xs[k + 1]:
                    thr = xs[k]
                best_t = thr
    return best_f, best_t, best


@numba.njit(cache=True)
def _grow(X, y, w, max_depth):
    # a binary tree over n rows has at most 2n - 1 nodes
    cap = min(2 ** (max_depth + 1) - 1, 2 * X.shape[0] - 1)
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    value = np.zeros(cap)
    n_nodes = 1
    stack_node = [0]
    stack_depth = [0]
    stack_idx = [np.arange(X.shape[0])]
    while len(stack_node) > 0:
        node = stack_node.pop()
        depth = stack_depth.pop()
        idx = stack_idx.pop()
        wsum = 0.0
        s = 0.0
        for j in idx:
            wsum += w[j]
            s += w[j] * y[j]
        if wsum <= 0.0:
            continue
        mean = s / wsum
        value[node] = mean
        sse = 0.0
        scale = 0.0
        for j in idx:
            d = y[j] - mean
            sse += w[j] * d * d
            scale += w[j] * y[j] * y[j]
        if depth >= max_depth or idx.size < 2 or sse <= 1e-15 * scale + 1e-300:
            continue
        yc = y - mean
        f, t, child = _best_split(X, yc, w, idx, sse)
        if f < 0:
            continue
        go_left = X[idx, f] <= t
        li = idx[go_left]
        ri = idx[~go_left]
        feature[node] = f
        threshold[node] = t
        left[node] = n_nodes
        right[node] = n_nodes + 1
        stack_node.append(n_nodes)
        stack_depth.append(depth + 1)
        stack_idx.append(li)
        stack_node.append(n_nodes + 1)
        stack_depth.append(depth + 1)
        stack_idx.append(ri)
        n_nodes += 2
    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], value[:n_nodes]


@dataclass(frozen=True, eq=False)
class RegressionTree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_features: int

    @property
    def n_nodes(self) -> int:
        return self.feature.size

    def depth(self) -> int:
        depths = np.zeros(self.n_nodes, dtype=int)
        for node in range(self.n_nodes):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[node] + 1
                depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def predict(self, X) -> np.ndarray:
        return tree_predict(self, X)


def tree_fit(X, y, sample_weight=None, max_depth: int = MAX_DEPTH) -> RegressionTree:
    """Grow a tree on rows with positive weight; zero-weight rows are ignored."""
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if y.ndim == 2:
        if y.shape[1] != 1:
            raise ShapeMismatch("tree_fit takes a single output column")
        y = y[:, 0]
    if X.ndim != 2 or X.shape[0] != y.size:
        raise ShapeMismatch("X rows and y length differ")
    w = np.ones(y.size) if sample_weight is None else np.asarray(sample_weight, dtype=float)
    if w.shape != y.shape:
        raise ShapeMismatch("sample_weight length differs from y")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("sample weights must be finite and nonnegative")
    keep = w > 0
    if not keep.any():
        raise EmptyData("no rows with positive weight")
    if not keep.all():
        X, y, w = np.ascontiguousarray(X[keep]), y[keep], w[keep]
    if max_depth < 0:
        raise ValueError("max_depth must be >= 0")
    feat, thr, lft, rgt, val = _grow(X, np.ascontiguousarray(y), np.ascontiguousarray(w), min(max_depth, 60))
    return RegressionTree(feat, thr, lft, rgt, val, X.shape[1])


@numba.njit(cache=True)
def _descend(X, feature, threshold, left, right, value):
    out = np.empty(X.shape[0])
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]
    return out


def tree_predict(tree: RegressionTree, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != tree.n_features:
        raise ShapeMismatch(f"expected {tree.n_features} feature columns")
    return _descend(X, tree.feature, tree.threshold, tree.left, tree.right, tree.value)
