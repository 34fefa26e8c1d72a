"""Multi-source network: a shared extractor, per-domain extractors and regressors.

Layout for n inputs: common extractor n -> 2n (ReLU); per source domain an
extractor 2n -> 3n (ReLU, dropout) -> 2n (ReLU) and a regressor 2n -> n_out.
The prediction is the mean of the per-domain regressors.

Each update draws a batch of ``min(|source_i|, |target|)`` rows without
replacement from source domain ``i`` and from the target, and minimises

    mse(source_i) + gamma * b(step) * (mmd + coral_weight * coral)
                  + mu * b(step) * regressor_distance

where the discrepancies compare the i-th extractor's source and target
features and the regressor distance compares all regressors on the target
batch. Target labels are not part of the objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..data import LabeledDataset
from ..errors import NonFiniteLoss, ShapeMismatch
from ..mlp import AdamState, adam_update, chain_backward, chain_forward, dropout_mask, init_dense
from .losses import beta_step, coral_grad, mmd_grad, regressor_distance_grad


@dataclass(frozen=True)
class MsAnnConfig:
    epoch_max: int = 150
    lr: float = 0.005
    coral_weight: float = 5000.0
    gamma: float = 1.0
    mu: float = 10.0
    dropout_prob: float = 0.05
    ramp_up: bool = False  # increasing trade-off schedule instead of the default decreasing one

    def __post_init__(self):
        if self.epoch_max < 0:
            raise ValueError("epoch_max must be >= 0")
        if min(self.lr, self.coral_weight, self.gamma, self.mu, self.dropout_prob) < 0:
            raise ValueError("coefficients must be >= 0")


def msann_param_count(n_in: int, n_out: int, n_sources: int) -> int:
    n, N = n_in, n_sources
    return (2 + 12 * N) * n * n + (2 + 5 * N + 2 * n_out * N) * n + n_out * N


@dataclass(frozen=True, eq=False)
class MsAnnModel:
    n_in: int
    n_out: int
    common: tuple  # ((W, b),)
    extractors: tuple  # per domain: ((W, b), (W, b))
    regressors: tuple  # per domain: ((W, b),)
    dropout_prob: float = 0.05
    adam: AdamState = field(default_factory=AdamState)
    steps: int = 0  # completed updates

    @property
    def n_sources(self) -> int:
        return len(self.extractors)

    def arrays(self) -> list[np.ndarray]:
        out = [a for layer in self.common for a in layer]
        for ext, reg in zip(self.extractors, self.regressors):
            out += [a for layer in ext + reg for a in layer]
        return out

    def with_arrays(self, arrays, adam=None, steps=None) -> "MsAnnModel":
        it = iter(arrays)
        take = lambda k: tuple((next(it), next(it)) for _ in range(k))
        common = take(1)
        ext, reg = [], []
        for _ in range(self.n_sources):
            ext.append(take(2))
            reg.append(take(1))
        return MsAnnModel(self.n_in, self.n_out, common, tuple(ext), tuple(reg), self.dropout_prob,
                          self.adam if adam is None else adam, self.steps if steps is None else steps)

    def param_count(self) -> int:
        return sum(a.size for a in self.arrays())

    def predict(self, X) -> np.ndarray:
        return msann_predict(self, X)


def msann_init(n_in: int, n_out: int, n_sources: int, seed=0, dropout_prob: float = 0.05) -> MsAnnModel:
    if n_sources < 1:
        raise ValueError("at least one source domain is required")
    rng = np.random.default_rng(seed)
    n = n_in
    common = (init_dense(rng, n, 2 * n),)
    ext, reg = [], []
    for _ in range(n_sources):
        ext.append((init_dense(rng, 2 * n, 3 * n), init_dense(rng, 3 * n, 2 * n)))
        reg.append((init_dense(rng, 2 * n, n_out),))
    return MsAnnModel(n_in, n_out, common, tuple(ext), tuple(reg), dropout_prob)


def _check(model: MsAnnModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_in:
        raise ShapeMismatch(f"expected {model.n_in} input columns, got shape {X.shape}")
    return X


def msann_predict(model: MsAnnModel, X) -> np.ndarray:
    X = _check(model, X)
    h, _ = chain_forward(model.common, X, relu_last=True)
    outs = []
    for ext, reg in zip(model.extractors, model.regressors):
        f, _ = chain_forward(ext, h, relu_last=True)
        o, _ = chain_forward(reg, f)
        outs.append(o)
    return np.mean(outs, axis=0)


def _branch(model, j, h, rng):
    mask = dropout_mask(rng, (h.shape[0], 3 * model.n_in), model.dropout_prob)
    f, fcache = chain_forward(model.extractors[j], h, relu_last=True, masks={0: mask})
    o, rcache = chain_forward(model.regressors[j], f)
    return f, o, fcache, rcache


def msann_loss_grad(model: MsAnnModel, i: int, Xs, Ys, Xt, step: int, step_max: int,
                    cfg: MsAnnConfig = MsAnnConfig(), rng=None):
    """Total loss for source domain ``i`` on fixed batches, and its gradient.

    ``rng=None`` turns dropout off. Returns ``(loss, parts, grads)`` with
    ``parts`` the dict of components and ``grads`` aligned with ``model.arrays()``.
    """
    Xs, Xt = _check(model, Xs), _check(model, Xt)
    Ys = np.asarray(Ys, dtype=float).reshape(Xs.shape[0], -1)
    N = model.n_sources
    b = beta_step(step, step_max, cfg.ramp_up)

    hs, cs_cache = chain_forward(model.common, Xs, relu_last=True)
    ht, ct_cache = chain_forward(model.common, Xt, relu_last=True)
    fs, os_, fs_cache, rs_cache = _branch(model, i, hs, rng)
    tgt = [_branch(model, j, ht, rng) for j in range(N)]

    r = os_ - Ys
    l_err = float(np.mean(r * r))
    d_os = 2.0 * r / r.size
    l_mmd, g_mmd_s, g_mmd_t = mmd_grad(fs, tgt[i][0])
    l_cor, g_cor_s, g_cor_t = coral_grad(fs, tgt[i][0])
    l_dis = l_mmd + cfg.coral_weight * l_cor
    if N >= 2:
        l_reg, g_reg = regressor_distance_grad([t[1] for t in tgt])
    else:
        l_reg, g_reg = 0.0, [np.zeros_like(tgt[0][1])]
    loss = l_err + cfg.gamma * b * l_dis + cfg.mu * b * l_reg
    parts = {"error": l_err, "mmd": l_mmd, "coral": l_cor, "dis": l_dis, "reg": l_reg, "beta": b}
    if not np.isfinite(loss):
        raise NonFiniteLoss(f"multi-source loss became {loss} ({parts})")

    wd = cfg.gamma * b
    zero = lambda layers: [(np.zeros_like(W), np.zeros_like(bb)) for W, bb in layers]
    g_ext = [zero(e) for e in model.extractors]
    g_reg_layers = [zero(rg) for rg in model.regressors]

    def add(acc, grads):
        for k, (dW, db) in enumerate(grads):
            acc[k] = (acc[k][0] + dW, acc[k][1] + db)

    # source path through branch i
    gr, d_fs = chain_backward(model.regressors[i], rs_cache, d_os)
    add(g_reg_layers[i], gr)
    d_fs = d_fs + wd * (g_mmd_s + cfg.coral_weight * g_cor_s)
    ge, d_hs = chain_backward(model.extractors[i], fs_cache, d_fs)
    add(g_ext[i], ge)

    # target paths through every branch
    d_ht = np.zeros_like(ht)
    for j, (ft, ot, fcache, rcache) in enumerate(tgt):
        gr, d_ft = chain_backward(model.regressors[j], rcache, cfg.mu * b * g_reg[j])
        add(g_reg_layers[j], gr)
        if j == i:
            d_ft = d_ft + wd * (g_mmd_t + cfg.coral_weight * g_cor_t)
        ge, d_h = chain_backward(model.extractors[j], fcache, d_ft)
        add(g_ext[j], ge)
        d_ht += d_h

    gc_s, _ = chain_backward(model.common, cs_cache, d_hs)
    gc_t, _ = chain_backward(model.common, ct_cache, d_ht)
    grads = [gc_s[0][0] + gc_t[0][0], gc_s[0][1] + gc_t[0][1]]
    for j in range(N):
        grads += [a for layer in g_ext[j] + g_reg_layers[j] for a in layer]
    return loss, parts, grads


def fit_msann(sources, target: LabeledDataset, cfg: MsAnnConfig = MsAnnConfig(), seed=0,
              history: list | None = None) -> MsAnnModel:
    """Train on ``sources`` (list of datasets) and the target inputs.

    ``history``, when given, receives the loss components of every update.
    """
    sources = list(sources)
    if not sources:
        raise ValueError("at least one source domain is required")
    for s in sources:
        if s.n_in != target.n_in or s.n_out != target.n_out:
            raise ShapeMismatch("all domains must share input and output widths")
        if s.n_rows == 0:
            raise ShapeMismatch("source domains must be nonempty")
    if target.n_rows == 0:
        raise ShapeMismatch("target must be nonempty")
    rng = np.random.default_rng(seed)
    model = msann_init(target.n_in, target.n_out, len(sources), rng, cfg.dropout_prob)
    N = len(sources)
    step_max = N * cfg.epoch_max
    arrays, adam, done = model.arrays(), model.adam, 0
    Xt = target.inputs
    for _ in range(cfg.epoch_max):
        for i, src in enumerate(sources):
            nb = min(src.n_rows, target.n_rows)
            si = rng.choice(src.n_rows, nb, replace=False)
            ti = rng.choice(target.n_rows, nb, replace=False)
            current = model.with_arrays(arrays)
            loss, parts, grads = msann_loss_grad(current, i, src.inputs[si], src.outputs[si], Xt[ti],
                                                 done + 1, step_max, cfg, rng)
            if history is not None:
                history.append(dict(parts, loss=loss, domain=i, step=done + 1))
            arrays, adam = adam_update(arrays, grads, adam, cfg.lr)
            done += 1
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise NonFiniteLoss("multi-source parameters became non-finite")
    return model.with_arrays(arrays, adam, done)
