"""Fully connected ReLU network with hand-written reverse-mode gradients.

The network maps (x_i, x_j, y_i) to a truncation-error estimate, so the
input width is always n+2 and the output width n for an n-dimensional
problem. Training minimizes mean absolute error with Adam; everything is
float64 and deterministic for a fixed seed.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    ConfigError,
    EmptyBatch,
    InvalidArchitecture,
    InvalidInput,
    ModelFormatError,
    NonFiniteGradient,
)

_MAGIC = b"FCN1"
_FORMAT_VERSION = 1


@dataclass(frozen=True)
class MlpParams:
    """Weights and biases of an affine stack with ReLU between hidden layers.

    weights[k] has shape (layer_widths[k+1], layer_widths[k]); the final
    layer is linear (no activation).
    """

    layer_widths: tuple[int, ...]
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        object.__setattr__(self, "layer_widths", widths)
        if len(widths) < 2 or any(w <= 0 for w in widths):
            raise InvalidArchitecture(f"invalid layer widths {widths}")
        if len(self.weights) != len(widths) - 1 or len(self.biases) != len(widths) - 1:
            raise InvalidArchitecture("one weight matrix and bias per layer required")
        for k, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (widths[k + 1], widths[k]) or b.shape != (widths[k + 1],):
                raise InvalidArchitecture(
                    f"layer {k}: weight {w.shape} / bias {b.shape} do not match "
                    f"widths {widths[k + 1]}x{widths[k]}"
                )
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise InvalidArchitecture(f"layer {k}: non-finite parameters")

    @property
    def num_layers(self) -> int:
        return len(self.weights)

    def parameter_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))


@dataclass(frozen=True)
class Gradients:
    """Same shapes as the parameters they differentiate."""

    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]


@dataclass(frozen=True)
class AdamState:
    first_weights: tuple[np.ndarray, ...]
    first_biases: tuple[np.ndarray, ...]
    second_weights: tuple[np.ndarray, ...]
    second_biases: tuple[np.ndarray, ...]
    step_count: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8

    @classmethod
    def initial(cls, params: MlpParams) -> "AdamState":
        zw = tuple(np.zeros_like(w) for w in params.weights)
        zb = tuple(np.zeros_like(b) for b in params.biases)
        return cls(zw, zb, tuple(np.zeros_like(w) for w in params.weights),
                   tuple(np.zeros_like(b) for b in params.biases))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    learning_rate: float = 5e-3
    batch_size: int = 32
    seed: int = 0
    clip_bound: Optional[float] = None

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError(f"epochs: must be >= 1, got {self.epochs}")
        if not 0.0 < self.learning_rate < 1.0:
            raise ConfigError(f"learning_rate: must be in (0, 1), got {self.learning_rate}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size: must be >= 1, got {self.batch_size}")
        if self.clip_bound is not None and not self.clip_bound > 0:
            raise ConfigError(f"clip_bound: must be positive, got {self.clip_bound}")


def init(layer_widths: Sequence[int], seed: int) -> MlpParams:
    """He-uniform weights (bound sqrt(6/fan_in)), zero biases."""
    widths = tuple(int(w) for w in layer_widths)
    if len(widths) < 2 or any(w <= 0 for w in widths):
        raise InvalidArchitecture(f"invalid layer widths {widths}")
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        bound = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return MlpParams(widths, tuple(weights), tuple(biases))


def forward(params: MlpParams, x) -> np.ndarray:
    """Evaluate the network on one input vector."""
    a = np.asarray(x, dtype=np.float64)
    if a.shape != (params.layer_widths[0],):
        raise InvalidInput(
            f"input has shape {a.shape}, expected ({params.layer_widths[0]},)"
        )
    if not np.all(np.isfinite(a)):
        raise InvalidInput("non-finite network input")
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.maximum(w @ a + b, 0.0)
    return params.weights[-1] @ a + params.biases[-1]


def forward_batch(params: MlpParams, xs) -> np.ndarray:
    """Evaluate the network on a (batch, p_0) array of inputs."""
    a = np.asarray(xs, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != params.layer_widths[0]:
        raise InvalidInput(
            f"batch has shape {a.shape}, expected (*, {params.layer_widths[0]})"
        )
    if not np.all(np.isfinite(a)):
        raise InvalidInput("non-finite network input")
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        a = np.maximum(a @ w.T + b, 0.0)
    return a @ params.weights[-1].T + params.biases[-1]


def loss_and_grad(params: MlpParams, inputs, targets) -> tuple[float, Gradients]:
    """Mean absolute error over the batch and its exact subgradients.

    Loss is the component sum of |output - target| averaged over samples.
    Subgradients at the ReLU kink and the L1 kink are both taken as 0.
    """
    x = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    y = np.atleast_2d(np.asarray(targets, dtype=np.float64))
    if x.shape[0] == 0:
        raise EmptyBatch("loss_and_grad needs at least one sample")
    if x.shape[0] != y.shape[0]:
        raise ValueError("inputs and targets disagree on batch size")
    batch = x.shape[0]

    activations = [x]
    pre_acts = []
    a = x
    for w, b in zip(params.weights[:-1], params.biases[:-1]):
        z = a @ w.T + b
        pre_acts.append(z)
        a = np.maximum(z, 0.0)
        activations.append(a)
    out = a @ params.weights[-1].T + params.biases[-1]

    diff = out - y
    loss = float(np.sum(np.abs(diff)) / batch)

    delta = np.sign(diff) / batch
    grad_w = [None] * params.num_layers
    grad_b = [None] * params.num_layers
    grad_w[-1] = delta.T @ activations[-1]
    grad_b[-1] = delta.sum(axis=0)
    upstream = delta @ params.weights[-1]
    for k in range(params.num_layers - 2, -1, -1):
        dz = upstream * (pre_acts[k] > 0.0)
        grad_w[k] = dz.T @ activations[k]
        grad_b[k] = dz.sum(axis=0)
        if k > 0:
            upstream = dz @ params.weights[k]
    return loss, Gradients(tuple(grad_w), tuple(grad_b))


def adam_step(
    params: MlpParams,
    grads: Gradients,
    state: AdamState,
    learning_rate: float,
) -> tuple[MlpParams, AdamState]:
    """One bias-corrected Adam update; returns fresh params and state."""
    for g in (*grads.weights, *grads.biases):
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("gradient contains NaN or infinity")
    t = state.step_count + 1
    c1 = 1.0 - state.beta1**t
    c2 = 1.0 - state.beta2**t

    def update(p, g, m, v):
        m_new = state.beta1 * m + (1.0 - state.beta1) * g
        v_new = state.beta2 * v + (1.0 - state.beta2) * g * g
        step = learning_rate * (m_new / c1) / (np.sqrt(v_new / c2) + state.epsilon)
        return p - step, m_new, v_new

    new_w, new_mw, new_vw = [], [], []
    for p, g, m, v in zip(params.weights, grads.weights, state.first_weights, state.second_weights):
        p2, m2, v2 = update(p, g, m, v)
        new_w.append(p2)
        new_mw.append(m2)
        new_vw.append(v2)
    new_b, new_mb, new_vb = [], [], []
    for p, g, m, v in zip(params.biases, grads.biases, state.first_biases, state.second_biases):
        p2, m2, v2 = update(p, g, m, v)
        new_b.append(p2)
        new_mb.append(m2)
        new_vb.append(v2)

    new_params = MlpParams(params.layer_widths, tuple(new_w), tuple(new_b))
    new_state = AdamState(
        tuple(new_mw), tuple(new_mb), tuple(new_vw), tuple(new_vb),
        step_count=t, beta1=state.beta1, beta2=state.beta2, epsilon=state.epsilon,
    )
    return new_params, new_state


def lipschitz_bound(params: MlpParams) -> float:
    """alpha^K with alpha the max infinity-operator-norm over weight matrices.

    ReLU is 1-Lipschitz, so this bounds |N(u)-N(v)| / max-norm(u-v).
    """
    alpha = max(float(np.max(np.sum(np.abs(w), axis=1))) for w in params.weights)
    return alpha ** params.num_layers


def clip_weights(params: MlpParams, clip_bound: float) -> MlpParams:
    """Scale each weight row so its absolute sum is at most clip_bound."""
    if not clip_bound > 0:
        raise ValueError("clip_bound must be positive")
    new_weights = []
    for w in params.weights:
        row_sums = np.sum(np.abs(w), axis=1)
        scale = np.where(row_sums > clip_bound, clip_bound / np.maximum(row_sums, 1e-300), 1.0)
        new_weights.append(w * scale[:, None])
    return MlpParams(params.layer_widths, tuple(new_weights), params.biases)


def save_model(params: MlpParams) -> bytes:
    """Serialize to bytes: magic, version, widths, then row-major float64 layers."""
    parts = [struct.pack("<4sII", _MAGIC, _FORMAT_VERSION, len(params.layer_widths))]
    parts.append(struct.pack(f"<{len(params.layer_widths)}I", *params.layer_widths))
    for w, b in zip(params.weights, params.biases):
        parts.append(np.ascontiguousarray(w, dtype="<f8").tobytes())
        parts.append(np.ascontiguousarray(b, dtype="<f8").tobytes())
    return b"".join(parts)


def load_model(data: bytes) -> MlpParams:
    """Inverse of save_model; raises ModelFormatError on any inconsistency."""
    header = struct.calcsize("<4sII")
    if len(data) < header:
        raise ModelFormatError("checkpoint shorter than its header")
    magic, version, n_widths = struct.unpack_from("<4sII", data, 0)
    if magic != _MAGIC:
        raise ModelFormatError(f"bad magic {magic!r}")
    if version != _FORMAT_VERSION:
        raise ModelFormatError(f"unsupported format version {version}")
    offset = header + 4 * n_widths
    if n_widths < 2 or len(data) < offset:
        raise ModelFormatError("width table truncated or too short")
    widths = struct.unpack_from(f"<{n_widths}I", data, header)
    if any(w <= 0 for w in widths):
        raise ModelFormatError(f"non-positive width in {widths}")
    expected = sum(
        8 * (widths[k + 1] * widths[k] + widths[k + 1]) for k in range(n_widths - 1)
    )
    if len(data) - offset != expected:
        raise ModelFormatError(
            f"payload holds {len(data) - offset} bytes, widths {widths} need {expected}"
        )
    weights, biases = [], []
    for k in range(n_widths - 1):
        rows, cols = widths[k + 1], widths[k]
        w = np.frombuffer(data, dtype="<f8", count=rows * cols, offset=offset)
        offset += 8 * rows * cols
        b = np.frombuffer(data, dtype="<f8", count=rows, offset=offset)
        offset += 8 * rows
        weights.append(w.reshape(rows, cols).copy())
        biases.append(b.copy())
    try:
        return MlpParams(tuple(widths), tuple(weights), tuple(biases))
    except InvalidArchitecture as err:
        raise ModelFormatError(str(err)) from None


def train(
    inputs,
    targets,
    layer_widths: Sequence[int],
    config: TrainConfig,
) -> tuple[MlpParams, list[float]]:
    """Minibatch Adam training on (inputs, targets); returns params and per-epoch mean loss.

    Data order is reshuffled every epoch from the run seed, so a fixed
    (seed, config, dataset) triple reproduces the parameters bitwise.
    """
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or x.shape[0] != y.shape[0]:
        raise ValueError("inputs/targets must be 2-d with matching batch length")
    if x.shape[0] == 0:
        raise EmptyBatch("training set is empty")
    n = x.shape[0]

    params = init(layer_widths, config.seed)
    state = AdamState.initial(params)
    shuffle_rng = np.random.default_rng(np.random.SeedSequence(config.seed).spawn(1)[0])

    epoch_losses = []
    for _ in range(config.epochs):
        perm = shuffle_rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = perm[start : start + config.batch_size]
            loss, grads = loss_and_grad(params, x[idx], y[idx])
            params, state = adam_step(params, grads, state, config.learning_rate)
            if config.clip_bound is not None:
                params = clip_weights(params, config.clip_bound)
            total += loss * len(idx)
        epoch_losses.append(total / n)
    return params, epoch_losses
