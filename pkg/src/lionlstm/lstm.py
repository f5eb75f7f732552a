"""Single-layer LSTM: cell step, sequence forward pass, genome codec, BPTT.

Gate equations (``z = [h_prev, x]``, hidden state first)::

    f = sigmoid(W_f z + b_f)       i = sigmoid(W_i z + b_i)
    c_hat = tanh(W_c z + b_c)      C = f * C_prev + i * c_hat
    o = sigmoid(W_o z + b_o)       h = o * tanh(C)

A linear readout ``W_y . h_L + b_y`` maps the final hidden state to a
prediction in normalized units.

Genome layout (the JSON wire format): rows of W_f, W_i, W_c, W_o (each
row-major), then b_f, b_i, b_c, b_o, W_y, b_y.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataio import WindowedSamples
from .errors import NumericalError


def sigmoid(x):
    # Split by sign so large |x| never overflows exp.
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


@dataclass
class LstmParams:
    W_f: np.ndarray
    W_i: np.ndarray
    W_c: np.ndarray
    W_o: np.ndarray
    b_f: np.ndarray
    b_i: np.ndarray
    b_c: np.ndarray
    b_o: np.ndarray
    W_y: np.ndarray
    b_y: float

    @property
    def H(self) -> int:
        return self.b_f.shape[0]

    @property
    def D(self) -> int:
        return self.W_f.shape[1] - self.H

    def __post_init__(self):
        for name in ("W_f", "W_i", "W_c", "W_o", "b_f", "b_i", "b_c", "b_o", "W_y"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float))
        self.b_y = float(self.b_y)
        H = self.b_f.shape[0]
        for name in ("W_f", "W_i", "W_c", "W_o"):
            w = getattr(self, name)
            if w.ndim != 2 or w.shape[0] != H or w.shape[1] <= H:
                raise ValueError(f"{name} has shape {w.shape}, expected ({H}, {H}+D)")
        if len({getattr(self, n).shape for n in ("W_f", "W_i", "W_c", "W_o")}) != 1:
            raise ValueError("gate matrices differ in shape")
        for name in ("b_i", "b_c", "b_o", "W_y"):
            if getattr(self, name).shape != (H,):
                raise ValueError(f"{name} must have length {H}")

    @classmethod
    def zeros(cls, H: int, D: int) -> "LstmParams":
        return genome_to_params(np.zeros(genome_dim(H, D)), H, D)

    def copy(self) -> "LstmParams":
        return genome_to_params(params_to_genome(self), self.H, self.D)

    def to_dict(self) -> dict:
        return {"h": self.H, "d": self.D, "genome": params_to_genome(self).tolist()}

    @classmethod
    def from_dict(cls, doc: dict) -> "LstmParams":
        return genome_to_params(np.asarray(doc["genome"], dtype=float), int(doc["h"]), int(doc["d"]))


@dataclass
class LstmState:
    C: np.ndarray
    h: np.ndarray

    @classmethod
    def zeros(cls, H: int) -> "LstmState":
        return cls(np.zeros(H), np.zeros(H))


@dataclass
class GateActivations:
    f: np.ndarray
    i: np.ndarray
    c_hat: np.ndarray
    o: np.ndarray


def genome_dim(H: int, D: int) -> int:
    return 4 * H * (H + D) + 4 * H + H + 1


def _unpack(genome: np.ndarray, H: int, D: int):
    """Views into a genome: stacked gate matrix (4H, H+D), stacked bias, W_y, b_y."""
    n_w = 4 * H * (H + D)
    W = genome[:n_w].reshape(4 * H, H + D)
    b = genome[n_w:n_w + 4 * H]
    wy = genome[n_w + 4 * H:n_w + 5 * H]
    return W, b, wy, genome[-1]


def params_to_genome(params: LstmParams) -> np.ndarray:
    return np.concatenate([
        params.W_f.ravel(), params.W_i.ravel(), params.W_c.ravel(), params.W_o.ravel(),
        params.b_f, params.b_i, params.b_c, params.b_o, params.W_y, [params.b_y],
    ])


def genome_to_params(genome, H: int, D: int) -> LstmParams:
    genome = np.asarray(genome, dtype=float)
    if genome.ndim != 1 or genome.shape[0] != genome_dim(H, D):
        raise ValueError(f"genome length {genome.shape} != genome_dim({H}, {D}) = {genome_dim(H, D)}")
    W, b, wy, by = _unpack(genome.copy(), H, D)
    return LstmParams(W[:H], W[H:2 * H], W[2 * H:3 * H], W[3 * H:],
                      b[:H], b[H:2 * H], b[2 * H:3 * H], b[3 * H:], wy, float(by))


def lstm_cell_step(params: LstmParams, x, state: LstmState):
    """One LSTM step. Returns ``(new_state, gates)``."""
    x = np.asarray(x, dtype=float)
    H, D = params.H, params.D
    if x.shape != (D,) or state.C.shape != (H,) or state.h.shape != (H,):
        raise ValueError(f"shape mismatch: x {x.shape}, C {state.C.shape}, h {state.h.shape} for H={H}, D={D}")
    z = np.concatenate([state.h, x])
    f = sigmoid(params.W_f @ z + params.b_f)
    i = sigmoid(params.W_i @ z + params.b_i)
    c_hat = np.tanh(params.W_c @ z + params.b_c)
    C = f * state.C + i * c_hat
    o = sigmoid(params.W_o @ z + params.b_o)
    h = o * np.tanh(C)
    return LstmState(C, h), GateActivations(f, i, c_hat, o)


def lstm_forward(params: LstmParams, sequence) -> float:
    """Run the cell over ``sequence`` (L x D) from a zero state; linear readout."""
    sequence = np.asarray(sequence, dtype=float)
    if sequence.ndim != 2 or sequence.shape[0] < 1:
        raise ValueError("sequence must be a non-empty L x D array")
    state = LstmState.zeros(params.H)
    for x in sequence:
        state, _ = lstm_cell_step(params, x, state)
    return float(params.W_y @ state.h + params.b_y)


def predict_batch(genome: np.ndarray, H: int, D: int, inputs: np.ndarray) -> np.ndarray:
    """Vectorised forward pass over ``inputs`` (N, L, D) for a flat genome."""
    genome = np.asarray(genome, dtype=float)
    W, b, wy, by = _unpack(genome, H, D)
    Wh, Wx = W[:, :H].T, W[:, H:].T
    # Input projections for every step at once: (L, N, 4H).
    xproj = np.einsum("nld,dk->lnk", inputs, Wx) + b
    n = inputs.shape[0]
    h = np.zeros((n, H))
    C = np.zeros((n, H))
    with np.errstate(over="ignore"):
        for t in range(inputs.shape[1]):
            z = xproj[t] + h @ Wh
            s = 1.0 / (1.0 + np.exp(-z))
            g = np.tanh(z[:, 2 * H:3 * H])
            C = s[:, :H] * C + s[:, H:2 * H] * g
            h = s[:, 3 * H:] * np.tanh(C)
    return h @ wy + by


def predict(params: LstmParams, samples: WindowedSamples) -> np.ndarray:
    return predict_batch(params_to_genome(params), params.H, params.D, samples.inputs)


def _mse_and_grad(genome: np.ndarray, H: int, D: int, inputs: np.ndarray, targets: np.ndarray):
    W, b, wy, by = _unpack(genome, H, D)
    n, L, _ = inputs.shape
    h = np.zeros((n, H))
    C = np.zeros((n, H))
    zs, gates, Cs, hs = [], [], [C], [h]
    with np.errstate(over="ignore", invalid="ignore"):
        for t in range(L):
            z_in = np.concatenate([h, inputs[:, t, :]], axis=1)
            a = z_in @ W.T + b
            f = 1.0 / (1.0 + np.exp(-a[:, :H]))
            i = 1.0 / (1.0 + np.exp(-a[:, H:2 * H]))
            g = np.tanh(a[:, 2 * H:3 * H])
            o = 1.0 / (1.0 + np.exp(-a[:, 3 * H:]))
            C = f * C + i * g
            h = o * np.tanh(C)
            zs.append(z_in)
            gates.append((f, i, g, o))
            Cs.append(C)
            hs.append(h)
        pred = h @ wy + by
        resid = pred - targets
        mse = float(np.mean(resid ** 2))
        if not np.isfinite(mse):
            raise NumericalError("non-finite loss in LSTM forward pass")

        dpred = 2.0 * resid / n
        gW = np.zeros_like(W)
        gb = np.zeros_like(b)
        gwy = h.T @ dpred
        gby = dpred.sum()
        dh = np.outer(dpred, wy)
        dC = np.zeros((n, H))
        for t in range(L - 1, -1, -1):
            f, i, g, o = gates[t]
            tc = np.tanh(Cs[t + 1])
            do = dh * tc
            dC = dC + dh * o * (1.0 - tc ** 2)
            da = np.concatenate([
                dC * Cs[t] * f * (1.0 - f),
                dC * g * i * (1.0 - i),
                dC * i * (1.0 - g ** 2),
                do * o * (1.0 - o),
            ], axis=1)
            gW += da.T @ zs[t]
            gb += da.sum(axis=0)
            dh = (da @ W)[:, :H]
            dC = dC * f
    grad = np.concatenate([gW.ravel(), gb, gwy, [gby]])
    if not np.all(np.isfinite(grad)):
        raise NumericalError("non-finite intermediate in BPTT")
    return mse, grad


def bptt_gradient(params: LstmParams, samples: WindowedSamples) -> np.ndarray:
    """Gradient of the mean squared error w.r.t. every parameter, in genome order."""
    if len(samples) < 1:
        raise ValueError("need at least one sample")
    _, grad = _mse_and_grad(params_to_genome(params), params.H, params.D,
                            samples.inputs, samples.targets)
    return grad


def mse_loss(params: LstmParams, samples: WindowedSamples) -> float:
    pred = predict(params, samples)
    return float(np.mean((pred - samples.targets) ** 2))


def init_params(H: int, D: int, seed: int, scale: float = 0.1) -> LstmParams:
    rng = np.random.default_rng(seed)
    return genome_to_params(rng.uniform(-scale, scale, genome_dim(H, D)), H, D)


def train_lstm_gd(samples: WindowedSamples, learning_rate: float, epochs: int, seed: int,
                  hidden: int = 6):
    """Full-batch gradient descent on training MSE.

    Returns ``(params, trace)`` where ``trace[k]`` is the MSE at the start of
    epoch ``k`` (before its update).
    """
    if learning_rate <= 0:
        raise ValueError("learning rate must be positive")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    D = samples.inputs.shape[2]
    genome = params_to_genome(init_params(hidden, D, seed))
    trace: list[float] = []
    for epoch in range(epochs):
        try:
            mse, grad = _mse_and_grad(genome, hidden, D, samples.inputs, samples.targets)
        except NumericalError as exc:
            raise NumericalError(f"LSTM training diverged at epoch {epoch}: {exc}") from None
        trace.append(mse)
        genome = genome - learning_rate * grad
        if not np.all(np.isfinite(genome)):
            raise NumericalError(f"LSTM training diverged at epoch {epoch}")
    return genome_to_params(genome, hidden, D), trace
