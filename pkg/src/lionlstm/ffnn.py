"""Feedforward baseline: 2 inputs, 3 sigmoid hidden units, 1 linear output.

The network sees only the last step ``(gwl, rainfall)`` of each window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import WindowedSamples
from .errors import NumericalError
from .lstm import sigmoid

N_IN = 2
N_HIDDEN = 3
PARAM_COUNT = N_HIDDEN * N_IN + N_HIDDEN + N_HIDDEN + 1


@dataclass
class FfnnParams:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: float

    def __post_init__(self):
        self.W1 = np.asarray(self.W1, dtype=float).reshape(N_HIDDEN, N_IN)
        self.b1 = np.asarray(self.b1, dtype=float).reshape(N_HIDDEN)
        self.W2 = np.asarray(self.W2, dtype=float).reshape(N_HIDDEN)
        self.b2 = float(self.b2)

    @classmethod
    def zeros(cls) -> "FfnnParams":
        return cls(np.zeros((N_HIDDEN, N_IN)), np.zeros(N_HIDDEN), np.zeros(N_HIDDEN), 0.0)

    def to_vector(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2, [self.b2]])

    @classmethod
    def from_vector(cls, v) -> "FfnnParams":
        v = np.asarray(v, dtype=float)
        if v.shape != (PARAM_COUNT,):
            raise ValueError(f"expected {PARAM_COUNT} values, got {v.shape}")
        return cls(v[:6].reshape(3, 2), v[6:9], v[9:12], v[12])

    def to_dict(self) -> dict:
        return {"w1": self.W1.ravel().tolist(), "b1": self.b1.tolist(),
                "w2": self.W2.tolist(), "b2": self.b2}

    @classmethod
    def from_dict(cls, doc: dict) -> "FfnnParams":
        return cls(doc["w1"], doc["b1"], doc["w2"], doc["b2"])


def ffnn_forward(params: FfnnParams, x) -> float:
    x = np.asarray(x, dtype=float)
    hidden = sigmoid(params.W1 @ x + params.b1)
    return float(params.W2 @ hidden + params.b2)


def ffnn_inputs(samples: WindowedSamples) -> np.ndarray:
    """The last window step of every sample, shape (N, 2)."""
    return samples.inputs[:, -1, :]


def predict_batch(params: FfnnParams, X: np.ndarray) -> np.ndarray:
    hidden = sigmoid(X @ params.W1.T + params.b1)
    return hidden @ params.W2 + params.b2


def predict(params: FfnnParams, samples: WindowedSamples) -> np.ndarray:
    return predict_batch(params, ffnn_inputs(samples))


def mse_and_grad(params: FfnnParams, X: np.ndarray, y: np.ndarray):
    """MSE over (X, y) and its gradient in ``to_vector`` order."""
    a = X @ params.W1.T + params.b1
    hidden = sigmoid(a)
    pred = hidden @ params.W2 + params.b2
    resid = pred - y
    mse = float(np.mean(resid ** 2))
    dpred = 2.0 * resid / len(y)
    g_w2 = hidden.T @ dpred
    g_b2 = dpred.sum()
    da = np.outer(dpred, params.W2) * hidden * (1.0 - hidden)
    g_w1 = da.T @ X
    g_b1 = da.sum(axis=0)
    return mse, np.concatenate([g_w1.ravel(), g_b1, g_w2, [g_b2]])


def init_params(seed: int, scale: float = 0.5) -> FfnnParams:
    rng = np.random.default_rng(seed)
    return FfnnParams.from_vector(rng.uniform(-scale, scale, PARAM_COUNT))


def train_ffnn_gd(samples: WindowedSamples, learning_rate: float, epochs: int, seed: int):
    """Full-batch gradient descent; returns ``(params, trace)``.

    ``trace[k]`` is the training MSE at the start of epoch ``k``.
    """
    if learning_rate <= 0:
        raise ValueError("learning rate must be positive")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    X = ffnn_inputs(samples)
    y = samples.targets
    params = init_params(seed)
    v = params.to_vector()
    trace: list[float] = []
    for epoch in range(epochs):
        with np.errstate(over="ignore", invalid="ignore"):
            mse, grad = mse_and_grad(FfnnParams.from_vector(v), X, y)
        if not (np.isfinite(mse) and np.all(np.isfinite(grad))):
            raise NumericalError(f"FFNN training diverged at epoch {epoch}")
        trace.append(mse)
        v = v - learning_rate * grad
    return FfnnParams.from_vector(v), trace
