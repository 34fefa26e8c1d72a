"""Loss terms for the multi-source network, each with an analytic gradient."""

from __future__ import annotations

import math

import numpy as np

from ..errors import NeedTwoRegressors, NonFiniteLoss, ShapeMismatch


def _pair(A, B):
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.ndim != 2 or B.ndim != 2 or A.shape[1] != B.shape[1]:
        raise ShapeMismatch(f"feature matrices must share a column count: {A.shape} vs {B.shape}")
    if A.shape[0] == 0 or B.shape[0] == 0:
        raise ShapeMismatch("feature matrices must be nonempty")
    return A, B


def _median_bandwidth(D):
    """Median squared pairwise distance and the (row, col, share) pairs it depends on."""
    n = D.shape[0]
    iu, ju = np.triu_indices(n, k=1)
    vals = D[iu, ju]
    if vals.size == 0:
        return 0.0, []
    order = np.argsort(vals, kind="stable")
    half = vals.size // 2
    if vals.size % 2:
        p = order[half]
        return float(vals[p]), [(iu[p], ju[p], 1.0)]
    p, q = order[half - 1], order[half]
    return float(0.5 * (vals[p] + vals[q])), [(iu[p], ju[p], 0.5), (iu[q], ju[q], 0.5)]


def mmd_grad(A, B):
    """Biased squared MMD with a Gaussian kernel and its gradients w.r.t. A and B.

    The kernel is ``exp(-||a - b||^2 / (2 s))`` with ``s`` the median squared
    pairwise distance over the rows of A and B together. ``s`` depends on the
    features too and is differentiated through.
    """
    A, B = _pair(A, B)
    n, m = A.shape[0], B.shape[0]
    Z = np.vstack([A, B])
    diff = Z[:, None, :] - Z[None, :, :]
    D = np.sum(diff * diff, axis=2)
    s, med_pairs = _median_bandwidth(D)
    if s <= 1e-12:
        s, med_pairs = 1.0, []
    K = np.exp(-D / (2.0 * s))
    C = np.empty_like(D)
    C[:n, :n] = 1.0 / (n * n)
    C[n:, n:] = 1.0 / (m * m)
    C[:n, n:] = -1.0 / (n * m)
    C[n:, :n] = -1.0 / (n * m)
    CK = C * K
    value = float(CK.sum())
    G = -CK / (2.0 * s)
    dvalue_ds = float(np.sum(CK * D)) / (2.0 * s * s)
    for i, j, share in med_pairs:
        G[i, j] += dvalue_ds * share
    S = G + G.T
    dZ = 2.0 * (S.sum(axis=1)[:, None] * Z - S @ Z)
    return value, dZ[:n], dZ[n:]


def mmd(A, B) -> float:
    return mmd_grad(A, B)[0]


def _cov(A):
    n = A.shape[0]
    Ac = A - A.mean(axis=0)
    if n < 2:
        return Ac, np.zeros((A.shape[1], A.shape[1])), 0.0
    return Ac, Ac.T @ Ac / (n - 1), 1.0 / (n - 1)


def coral_grad(A, B):
    """``||C_A - C_B||_F^2 / (4 d^2)`` with sample covariances, plus gradients."""
    A, B = _pair(A, B)
    d = A.shape[1]
    Ac, CA, fa = _cov(A)
    Bc, CB, fb = _cov(B)
    diff = CA - CB
    value = float(np.sum(diff * diff)) / (4.0 * d * d)
    G = diff / (2.0 * d * d)
    return value, 2.0 * fa * Ac @ G, -2.0 * fb * Bc @ G


def coral(A, B) -> float:
    return coral_grad(A, B)[0]


def regressor_distance_grad(outputs):
    """Pairwise-MSE regressor distance, with the extra ``1/N_t`` factor kept, plus gradients."""
    outs = [np.asarray(o, dtype=float) for o in outputs]
    N = len(outs)
    if N < 2:
        raise NeedTwoRegressors("regressor distance needs at least two regressors")
    shape = outs[0].shape
    if any(o.shape != shape for o in outs):
        raise ShapeMismatch("regressor outputs differ in shape")
    n_rows = shape[0]
    coef = 2.0 / (N * (N - 1) * n_rows)
    size = outs[0].size
    total = 0.0
    grads = [np.zeros(shape) for _ in outs]
    for i in range(N - 1):
        for j in range(i + 1, N):
            diff = outs[i] - outs[j]
            total += float(np.mean(diff * diff))
            g = coef * 2.0 * diff / size
            grads[i] += g
            grads[j] -= g
    return coef * total, grads


def regressor_distance(outputs) -> float:
    return regressor_distance_grad(outputs)[0]


def beta_step(step: float, step_max: float, ramp_up: bool = False) -> float:
    """Step-varying trade-off weight.

    The default schedule ``1 + 1/(1 + exp(10 step/step_max))`` falls from 1.5
    towards 1. ``ramp_up=True`` gives the increasing ``2/(1 + exp(-10 p)) - 1``
    schedule for sensitivity runs.
    """
    p = step / step_max
    if ramp_up:
        return 2.0 / (1.0 + math.exp(-10.0 * p)) - 1.0
    return 1.0 + 1.0 / (1.0 + math.exp(10.0 * p))


def multi_order_discrepancy(l_mmd: float, l_coral: float, coral_weight: float = 5000.0) -> float:
    return l_mmd + coral_weight * l_coral


def total_loss(l_error, l_dis, l_reg, step, step_max, gamma=1.0, mu=10.0, ramp_up=False) -> float:
    parts = (l_error, l_dis, l_reg)
    if not all(math.isfinite(p) for p in parts):
        raise NonFiniteLoss(f"non-finite loss component in {parts}")
    b = beta_step(step, step_max, ramp_up)
    return l_error + gamma * b * l_dis + mu * b * l_reg
