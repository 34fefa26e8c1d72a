"""Independent reference implementations used as test oracles.

Everything here is written with plain loops or a different numerical route
than the package so that agreement is evidence of correctness rather than
of shared code.
"""

from __future__ import annotations

import math

import numpy as np

from pareto_tl.mlp import chain_forward, mlp_loss_grad


def brute_euclidean(s, T) -> float:
    best = math.inf
    for t in T:
        d = math.sqrt(sum((a - b) ** 2 for a, b in zip(s, t)))
        best = min(best, d)
    return best


def brute_cosine(s, T) -> float:
    dists = [math.sqrt(sum((a - b) ** 2 for a, b in zip(s, t))) for t in T]
    k = min(range(len(T)), key=lambda j: (dists[j], j))
    v1 = [a - b for a, b in zip(s, T[k])]
    n1 = math.sqrt(sum(a * a for a in v1))
    if n1 == 0.0:
        return 0.0
    partner, gap = None, math.inf
    for j, t in enumerate(T):
        rel = [a - b for a, b in zip(t, T[k])]
        if sum(a * b for a, b in zip(rel, v1)) > 0.0:
            g = math.sqrt(sum(a * a for a in rel))
            if g < gap:
                partner, gap = rel, g
    if partner is None:
        return 1.0
    return 1.0 - sum(a * b for a, b in zip(v1, partner)) / (n1 * gap)


def brute_dominates(a, b) -> bool:
    return all(x <= y for x, y in zip(a, b)) and any(x < y for x, y in zip(a, b))


def brute_frontier(P) -> list[int]:
    return [i for i in range(len(P)) if not any(brute_dominates(P[j], P[i]) for j in range(len(P)) if j != i)]


def rank1_alignment_gap(a, b) -> float:
    """``||T - I||_F`` for the identity-nearest orthogonal map aligning two column vectors.

    In the plane spanned by the two vectors both the rotation (trace 2 cos)
    and the reflection (trace 0) carry one direction onto the other; the
    identity acts on the complement. The larger trace wins.
    """
    a, b = np.ravel(a), np.ravel(b)
    c = float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return 2.0 * math.sqrt(1.0 - max(min(c, 1.0), 0.0))


class ElmOracle:
    """Same-seed ELM recomputed with scalar loops and an SVD ridge filter."""

    def __init__(self, n_in: int, seed: int, hidden: int = 20, ridge: float = 1e-6):
        rng = np.random.default_rng(seed)
        self.W = rng.uniform(-1.0, 1.0, size=(hidden, n_in))
        self.b = rng.uniform(-1.0, 1.0, size=hidden)
        self.ridge = ridge

    def features(self, X) -> np.ndarray:
        H = len(self.b)
        return np.array([[math.tanh(sum(self.W[h, i] * x[i] for i in range(len(x))) + self.b[h])
                          for h in range(H)] for x in X])

    def fit(self, X, Y) -> np.ndarray:
        U, s, Vt = np.linalg.svd(self.features(X), full_matrices=False)
        return Vt.T @ np.diag(s / (s * s + self.ridge)) @ U.T @ Y


def brute_error(pred, actual) -> float:
    res = [p - a for p, a in zip(np.ravel(pred), np.ravel(actual))]
    return 0.5 * math.sqrt(sum(r * r for r in res) / len(res)) + 0.5 * max(abs(r) for r in res)


def brute_model_distances(source, target, seed: int):
    """Performance and feature distances for single-output data."""
    elm = ElmOracle(source.n_in, seed)
    Xs, Ys, Xt, Yt = source.inputs, source.outputs, target.inputs, target.outputs
    Ft = elm.features(Xt)
    th_s, th_t = elm.fit(Xs, Ys), elm.fit(Xt, Yt)
    base_err = brute_error(Ft @ th_s, Yt)
    base_gap = rank1_alignment_gap(th_s, th_t)
    per, fea = [], []
    for i in range(len(Xs)):
        keep = [j for j in range(len(Xs)) if j != i]
        th_n = elm.fit(Xs[keep], Ys[keep])
        per.append(base_err - brute_error(Ft @ th_n, Yt))
        fea.append(base_gap - rank1_alignment_gap(th_n, th_t))
    return np.array(per), np.array(fea)


def weighted_median(values, weights):
    """Smallest value whose cumulative weight reaches half the total."""
    pairs = sorted(zip(values, weights))
    total = sum(weights)
    acc = 0.0
    for v, w in pairs:
        acc += w
        if acc >= 0.5 * total:
            return v
    return pairs[-1][0]


def _sqdist(a, b) -> float:
    return sum((x - y) ** 2 for x, y in zip(a, b))


def brute_mmd(A, B) -> float:
    """Biased squared MMD, Gaussian kernel, bandwidth = median squared pairwise distance."""
    Z = [list(r) for r in A] + [list(r) for r in B]
    pair_d = sorted(_sqdist(Z[i], Z[j]) for i in range(len(Z)) for j in range(i + 1, len(Z)))
    if not pair_d:
        s = 0.0
    elif len(pair_d) % 2:
        s = pair_d[len(pair_d) // 2]
    else:
        s = 0.5 * (pair_d[len(pair_d) // 2 - 1] + pair_d[len(pair_d) // 2])
    if s <= 1e-12:
        s = 1.0
    k = lambda a, b: math.exp(-_sqdist(a, b) / (2.0 * s))
    n, m = len(A), len(B)
    aa = sum(k(a, b) for a in A for b in A) / (n * n)
    bb = sum(k(a, b) for a in B for b in B) / (m * m)
    ab = sum(k(a, b) for a in A for b in B) / (n * m)
    return aa + bb - 2.0 * ab


def brute_cov(A):
    n, d = len(A), len(A[0])
    mean = [sum(r[c] for r in A) / n for c in range(d)]
    if n < 2:
        return [[0.0] * d for _ in range(d)]
    return [[sum((r[p] - mean[p]) * (r[q] - mean[q]) for r in A) / (n - 1) for q in range(d)] for p in range(d)]


def brute_coral(A, B) -> float:
    CA, CB = brute_cov(A), brute_cov(B)
    d = len(CA)
    return sum((CA[p][q] - CB[p][q]) ** 2 for p in range(d) for q in range(d)) / (4.0 * d * d)


def brute_regressor_distance(outputs) -> float:
    N = len(outputs)
    n_rows = len(outputs[0])
    total = 0.0
    for i in range(N):
        for j in range(i + 1, N):
            a, b = np.ravel(outputs[i]), np.ravel(outputs[j])
            total += sum((x - y) ** 2 for x, y in zip(a, b)) / len(a)
    return 2.0 / (N * (N - 1) * n_rows) * total


def brute_beta(step, step_max) -> float:
    return 1.0 + 1.0 / (1.0 + math.exp(10.0 * step / step_max))


def central_difference(f, arrays, h):
    """Central differences of scalar ``f(list_of_arrays)`` for every coordinate."""
    out = []
    for k, a in enumerate(arrays):
        g = np.zeros_like(a)
        for idx in np.ndindex(a.shape):
            up = [b.copy() for b in arrays]
            dn = [b.copy() for b in arrays]
            up[k][idx] += h
            dn[k][idx] -= h
            g[idx] = (f(up) - f(dn)) / (2 * h)
        out.append(g)
    return out


def relu_pattern(params, X):
    _, cache = chain_forward(params.layers, X)
    return [z > 0 for z in cache[1]]


def mlp_fd_worst(params, X, Y, h=1e-5):
    """Worst relative error over coordinates whose +-h step keeps every ReLU on the same side."""
    _, grads = mlp_loss_grad(params, X, Y)
    arrays = params.arrays()
    worst, checked = 0.0, 0
    for k, a in enumerate(arrays):
        for idx in np.ndindex(a.shape):
            up = [b.copy() for b in arrays]
            dn = [b.copy() for b in arrays]
            up[k][idx] += h
            dn[k][idx] -= h
            pu, pd = params.with_arrays(up), params.with_arrays(dn)
            if any(np.any(u != d) for u, d in zip(relu_pattern(pu, X), relu_pattern(pd, X))):
                continue
            fd = (mlp_loss_grad(pu, X, Y)[0] - mlp_loss_grad(pd, X, Y)[0]) / (2 * h)
            g = grads[k][idx]
            scale = max(abs(fd), abs(g), 1e-6)
            worst = max(worst, abs(fd - g) / scale)
            checked += 1
    assert checked > 0.9 * sum(a.size for a in arrays)
    return worst
