"""Small fully-connected networks with hand-written backprop and Adam.

The three-hidden-layer regression network has widths (2n, 3n, 2n) for n
inputs, rectifier hidden units, an identity output and inverted dropout after
the second hidden layer. The dense-chain helpers are shared with the
multi-source network, which splits the same stack into a common extractor,
per-domain extractors and per-domain regressors.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .errors import NonFiniteLoss, ShapeMismatch

Layer = tuple[np.ndarray, np.ndarray]  # (W fan_in x fan_out, b fan_out)


# ---------------------------------------------------------------------------
# building blocks


def init_dense(rng: np.random.Generator, fan_in: int, fan_out: int) -> Layer:
    bound = np.sqrt(1.0 / fan_in)
    W = rng.uniform(-bound, bound, size=(fan_in, fan_out))
    b = rng.uniform(-bound, bound, size=fan_out)
    return W, b


def dropout_mask(rng, shape, p: float) -> np.ndarray | None:
    """Inverted-dropout mask, or None when nothing is dropped."""
    if p <= 0.0 or rng is None:
        return None
    keep = rng.random(shape) >= p
    return keep / (1.0 - p)


def chain_forward(layers, X, relu_last=False, masks=None):
    """Affine+ReLU chain. ``masks[i]`` multiplies the activation of layer i.

    Returns the output and a cache for :func:`chain_backward`.
    """
    masks = masks or {}
    acts = [X]
    pre = []
    a = X
    last = len(layers) - 1
    for i, (W, b) in enumerate(layers):
        z = a @ W + b
        pre.append(z)
        a = np.maximum(z, 0.0) if (i < last or relu_last) else z
        if i in masks and masks[i] is not None:
            a = a * masks[i]
        acts.append(a)
    return a, (acts, pre, relu_last, masks)


def chain_backward(layers, cache, dout):
    """Gradients ``[(dW, db), ...]`` and the gradient w.r.t. the chain input."""
    acts, pre, relu_last, masks = cache
    grads = [None] * len(layers)
    g = dout
    last = len(layers) - 1
    for i in range(last, -1, -1):
        W, _ = layers[i]
        if i in masks and masks[i] is not None:
            g = g * masks[i]
        if i < last or relu_last:
            g = g * (pre[i] > 0)
        grads[i] = (acts[i].T @ g, g.sum(axis=0))
        g = g @ W.T
    return grads, g


def mse(pred, target) -> float:
    return float(np.mean((pred - target) ** 2))


@dataclass(frozen=True, eq=False)
class AdamState:
    m: tuple = ()
    v: tuple = ()
    t: int = 0


def adam_update(params, grads, state: AdamState, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """One Adam step over parallel lists of arrays; returns (new_params, new_state)."""
    if state.t == 0 or not state.m:
        m_prev = [np.zeros_like(p) for p in params]
        v_prev = [np.zeros_like(p) for p in params]
    else:
        m_prev, v_prev = state.m, state.v
    t = state.t + 1
    new_p, new_m, new_v = [], [], []
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    for p, g, m, v in zip(params, grads, m_prev, v_prev):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        new_p.append(p - lr * (m / c1) / (np.sqrt(v / c2) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_p, AdamState(tuple(new_m), tuple(new_v), t)


# ---------------------------------------------------------------------------
# the three-hidden-layer regressor


@dataclass(frozen=True)
class MlpSpec:
    n_in: int
    n_out: int
    dropout_prob: float = 0.05

    @property
    def widths(self) -> tuple[int, ...]:
        n = self.n_in
        return (n, 2 * n, 3 * n, 2 * n, self.n_out)


# dropout sits on the output of the second hidden layer (layer index 1)
DROPOUT_LAYER = 1


def mlp_param_count(n_in: int, n_out: int) -> int:
    return 14 * n_in**2 + (7 + 2 * n_out) * n_in + n_out


@dataclass(frozen=True, eq=False)
class MlpParams:
    spec: MlpSpec
    layers: tuple  # tuple of (W, b)
    adam: AdamState = field(default_factory=AdamState)

    def arrays(self) -> list[np.ndarray]:
        return [a for layer in self.layers for a in layer]

    def with_arrays(self, arrays, adam=None) -> "MlpParams":
        layers = tuple((arrays[2 * i], arrays[2 * i + 1]) for i in range(len(self.layers)))
        return MlpParams(self.spec, layers, self.adam if adam is None else adam)

    def n_stored(self) -> int:
        return sum(a.size for a in self.arrays())

    def fresh_optimizer(self) -> "MlpParams":
        return replace(self, adam=AdamState())

    def equals(self, other: "MlpParams") -> bool:
        return all(np.array_equal(a, b) for a, b in zip(self.arrays(), other.arrays()))

    def predict(self, X) -> np.ndarray:
        return mlp_forward(self, X, mode="infer")


def mlp_init(spec: MlpSpec, seed=0) -> MlpParams:
    rng = np.random.default_rng(seed)
    w = spec.widths
    layers = tuple(init_dense(rng, w[i], w[i + 1]) for i in range(len(w) - 1))
    return MlpParams(spec, layers)


def _check_input(params: MlpParams, X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != params.spec.n_in:
        raise ShapeMismatch(f"expected {params.spec.n_in} input columns, got shape {X.shape}")
    return X


def mlp_forward(params: MlpParams, X, mode: str = "infer", rng=None) -> np.ndarray:
    X = _check_input(params, X)
    masks = None
    if mode == "train":
        shape = (X.shape[0], params.spec.widths[DROPOUT_LAYER + 1])
        masks = {DROPOUT_LAYER: dropout_mask(rng, shape, params.spec.dropout_prob)}
    elif mode != "infer":
        raise ValueError(f"unknown mode {mode!r}")
    out, _ = chain_forward(params.layers, X, masks=masks)
    return out


def mlp_loss_grad(params: MlpParams, X, Y, rng=None, train: bool = False):
    """MSE loss and its gradient as a flat list aligned with ``params.arrays()``."""
    X = _check_input(params, X)
    Y = np.asarray(Y, dtype=float).reshape(X.shape[0], -1)
    masks = None
    if train:
        shape = (X.shape[0], params.spec.widths[DROPOUT_LAYER + 1])
        masks = {DROPOUT_LAYER: dropout_mask(rng, shape, params.spec.dropout_prob)}
    out, cache = chain_forward(params.layers, X, masks=masks)
    loss = mse(out, Y)
    dout = 2.0 * (out - Y) / out.size
    grads, _ = chain_backward(params.layers, cache, dout)
    return loss, [g for pair in grads for g in pair]


def train_arrays(params: MlpParams, X, Y, epochs: int, lr: float = 0.005, rng=None) -> MlpParams:
    """Full-batch Adam, one update per epoch. Dropout is drawn from ``rng``."""
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if epochs == 0:
        return params
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float).reshape(X.shape[0], -1)
    if X.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    arrays = params.arrays()
    adam = params.adam
    for _ in range(epochs):
        loss, grads = mlp_loss_grad(params.with_arrays(arrays), X, Y, rng=rng, train=True)
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"MLP loss became {loss}")
        arrays, adam = adam_update(arrays, grads, adam, lr)
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise NonFiniteLoss("MLP parameters became non-finite")
    return params.with_arrays(arrays, adam)


def mlp_train(params: MlpParams, data, epochs: int, lr: float = 0.005, rng=None) -> MlpParams:
    """Train on a :class:`~pareto_tl.data.LabeledDataset`."""
    return train_arrays(params, data.inputs, data.outputs, epochs, lr, rng)
