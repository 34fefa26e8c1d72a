"""Extreme learning machine: frozen random tanh layer + ridge output layer."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import ShapeMismatch, SingularSystem

DEFAULT_HIDDEN = 20
DEFAULT_RIDGE = 1e-6


@dataclass(frozen=True, eq=False)
class ElmHidden:
    """The random hidden map ``h(x) = tanh(x @ W.T + b)`` (W is H x n_in)."""

    weights: np.ndarray
    bias: np.ndarray
    seed: int | None = None

    @property
    def size(self) -> int:
        return self.bias.size

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[1] != self.weights.shape[1]:
            raise ShapeMismatch(f"expected {self.weights.shape[1]} input columns")
        return np.tanh(X @ self.weights.T + self.bias)


def draw_hidden(n_in: int, hidden: int = DEFAULT_HIDDEN, seed=0) -> ElmHidden:
    if hidden < 1:
        raise ValueError("hidden size must be >= 1")
    rng = np.random.default_rng(seed)
    W = rng.uniform(-1.0, 1.0, size=(hidden, n_in))
    b = rng.uniform(-1.0, 1.0, size=hidden)
    W.setflags(write=False)
    b.setflags(write=False)
    return ElmHidden(W, b, seed if isinstance(seed, int) else None)


@dataclass(frozen=True, eq=False)
class ElmModel:
    hidden: ElmHidden
    output_weights: np.ndarray  # H x n_out
    ridge: float

    def predict(self, X) -> np.ndarray:
        return elm_predict(self, X)


def solve_output_weights(Hm: np.ndarray, Y: np.ndarray, ridge: float) -> np.ndarray:
    """argmin_theta ||Hm theta - Y||^2 + ridge ||theta||^2."""
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    if ridge > 0:
        # stacked least squares [Hm; sqrt(ridge) I] avoids squaring the condition number
        k = Hm.shape[1]
        A = np.vstack([Hm, np.sqrt(ridge) * np.eye(k)])
        B = np.vstack([Y, np.zeros((k, Y.shape[1]))])
        try:
            theta, *_ = scipy.linalg.lstsq(A, B)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise SingularSystem(str(exc)) from exc
    else:
        # minimum-norm least squares; exact whenever the system is consistent
        theta, *_ = np.linalg.lstsq(Hm, Y, rcond=None)
    if not np.all(np.isfinite(theta)):
        raise SingularSystem("output weights are not finite")
    return theta


def elm_train(X, Y, hidden: int = DEFAULT_HIDDEN, ridge: float = DEFAULT_RIDGE, seed=0,
              hidden_map: ElmHidden | None = None) -> ElmModel:
    """Fit the output layer in closed form.

    Pass ``hidden_map`` to reuse a frozen hidden layer across several fits;
    otherwise one is drawn from ``seed``.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape[0] != Y.shape[0]:
        raise ShapeMismatch("X and Y row counts differ")
    if hidden_map is None:
        hidden_map = draw_hidden(X.shape[1], hidden, seed)
    theta = solve_output_weights(hidden_map.transform(X), Y, ridge)
    return ElmModel(hidden_map, theta, ridge)


def elm_predict(model: ElmModel, X) -> np.ndarray:
    return model.hidden.transform(X) @ model.output_weights
