"""Tiny fully-connected classifier stack over a flat parameter vector.

Parameters are packed one layer at a time, weight matrix (row-major, shape
out x in) followed by bias, so that solvers can treat the whole model as a
single point in R^d. The objective is mean softmax cross-entropy plus an
optional quadratic penalty, which keeps it nonnegative by construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .testbed import MiniBatch

__all__ = [
    "MlpSpec",
    "init_params",
    "pack",
    "unpack",
    "objective",
    "gradient",
    "objective_and_gradient",
    "predict_logits",
    "accuracy",
]

ACTIVATIONS = ("relu", "tanh")


@dataclass(frozen=True)
class MlpSpec:
    layer_widths: tuple[int, ...]
    activation: str = "relu"
    weight_decay: float = 0.0

    def __post_init__(self):
        widths = tuple(int(w) for w in self.layer_widths)
        if len(widths) < 2 or any(w < 1 for w in widths):
            raise ValueError("layer_widths needs >= 2 positive entries")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.weight_decay < 0.0:
            raise ValueError("weight_decay must be nonnegative")
        object.__setattr__(self, "layer_widths", widths)

    @property
    def n_classes(self) -> int:
        return self.layer_widths[-1]

    @property
    def n_params(self) -> int:
        widths = self.layer_widths
        return sum(widths[i + 1] * widths[i] + widths[i + 1] for i in range(len(widths) - 1))


def init_params(spec: MlpSpec, seed) -> np.ndarray:
    """Seeded init: weights uniform in +-sqrt(6/(fan_in+fan_out)), biases 0."""
    rng = np.random.default_rng(seed)
    chunks = []
    widths = spec.layer_widths
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        chunks.append(rng.uniform(-a, a, size=fan_out * fan_in))
        chunks.append(np.zeros(fan_out))
    return np.concatenate(chunks)


def unpack(spec: MlpSpec, params: np.ndarray) -> list[tuple[np.ndarray, np.ndarray]]:
    """Split a flat vector into per-layer (weight, bias) views."""
    params = np.asarray(params, dtype=np.float64)
    if params.shape != (spec.n_params,):
        raise ValueError(
            f"expected {spec.n_params} parameters, got shape {params.shape}"
        )
    layers = []
    offset = 0
    widths = spec.layer_widths
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        w = params[offset : offset + fan_out * fan_in].reshape(fan_out, fan_in)
        offset += fan_out * fan_in
        b = params[offset : offset + fan_out]
        offset += fan_out
        layers.append((w, b))
    return layers


def pack(layers: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    return np.concatenate([np.concatenate([w.ravel(), b]) for w, b in layers])


def _act(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return np.maximum(z, 0.0)
    return np.tanh(z)


def _act_deriv(z: np.ndarray, kind: str) -> np.ndarray:
    if kind == "relu":
        return (z > 0.0).astype(np.float64)  # subgradient 0 at the kink
    t = np.tanh(z)
    return 1.0 - t * t


def _forward(spec: MlpSpec, layers, features: np.ndarray):
    """Returns (logits, pre-activations, post-activations per layer)."""
    if features.shape[1] != spec.layer_widths[0]:
        raise ValueError(
            f"feature dimension {features.shape[1]} does not match input width "
            f"{spec.layer_widths[0]}"
        )
    h = features
    zs, hs = [], [h]
    for li, (w, b) in enumerate(layers):
        z = h @ w.T + b
        zs.append(z)
        h = z if li == len(layers) - 1 else _act(z, spec.activation)
        hs.append(h)
    return zs[-1], zs, hs


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    return shifted - np.log(np.sum(np.exp(shifted), axis=1, keepdims=True))


def objective(spec: MlpSpec, params: np.ndarray, batch: MiniBatch) -> float:
    """Mean cross-entropy over the batch plus weight_decay/2 * ||params||^2."""
    if len(batch) == 0:
        raise ValueError("batch must be nonempty")
    if batch.labels.max() >= spec.n_classes:
        raise ValueError("label out of range for the output layer")
    layers = unpack(spec, params)
    logits, _, _ = _forward(spec, layers, batch.features)
    logp = _log_softmax(logits)
    ce = -float(np.mean(logp[np.arange(len(batch)), batch.labels]))
    reg = 0.5 * spec.weight_decay * float(params @ params)
    return ce + reg


def gradient(spec: MlpSpec, params: np.ndarray, batch: MiniBatch) -> np.ndarray:
    return objective_and_gradient(spec, params, batch)[1]


def objective_and_gradient(
    spec: MlpSpec, params: np.ndarray, batch: MiniBatch
) -> tuple[float, np.ndarray]:
    """One forward/backward pass; exact reverse-mode gradient of objective."""
    if len(batch) == 0:
        raise ValueError("batch must be nonempty")
    if batch.labels.max() >= spec.n_classes:
        raise ValueError("label out of range for the output layer")
    params = np.asarray(params, dtype=np.float64)
    layers = unpack(spec, params)
    logits, zs, hs = _forward(spec, layers, batch.features)
    logp = _log_softmax(logits)
    n = len(batch)
    ce = -float(np.mean(logp[np.arange(n), batch.labels]))

    delta = np.exp(logp)
    delta[np.arange(n), batch.labels] -= 1.0
    delta /= n
    grads = []
    for li in range(len(layers) - 1, -1, -1):
        w, _ = layers[li]
        grads.append((delta.T @ hs[li], delta.sum(axis=0)))
        if li > 0:
            delta = (delta @ w) * _act_deriv(zs[li - 1], spec.activation)
    grads.reverse()
    flat = pack(grads) + spec.weight_decay * params
    value = ce + 0.5 * spec.weight_decay * float(params @ params)
    return value, flat


def predict_logits(spec: MlpSpec, params: np.ndarray, features: np.ndarray) -> np.ndarray:
    logits, _, _ = _forward(spec, unpack(spec, params), np.asarray(features, dtype=np.float64))
    return logits


def accuracy(spec: MlpSpec, params: np.ndarray, dataset: MiniBatch) -> float:
    """Fraction of argmax-correct predictions; ties go to the lowest class."""
    if len(dataset) == 0:
        raise ValueError("dataset must be nonempty")
    logits = predict_logits(spec, params, dataset.features)
    return float(np.mean(np.argmax(logits, axis=1) == dataset.labels))
