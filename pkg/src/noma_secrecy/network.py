"""Dense feed-forward network, written from scratch on numpy.

ReLU hidden layers, a scalar output squashed into the valid far-user
power-share interval (0.5, 1) by a scaled logistic, mean-squared-error
loss, and plain mini-batch gradient descent with per-epoch learning-rate
decay.  Gradients are exact reverse-mode derivatives; the ReLU subgradient
at zero is taken as zero.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TrainingDivergedError",
    "TrainConfig",
    "Mlp",
    "relu",
    "init_mlp",
    "forward",
    "forward_batch",
    "mse_loss",
    "backward",
    "train",
    "mac_count",
    "save_mlp",
    "load_mlp",
]

_MAGIC = b"NSMLP1\n"

SQUASH_LO = 0.5
SQUASH_HI = 1.0

#: Keeps predictions strictly inside the open squash interval even where
#: the logistic saturates to 0 or 1 at double precision.
_SQUASH_MARGIN = 1e-12


class TrainingDivergedError(ArithmeticError):
    """Loss became non-finite; carries the epoch index."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged at epoch {epoch}")
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    """Mini-batch gradient-descent hyperparameters."""

    epochs: int = 100
    batch_size: int = 64
    learning_rate: float = 0.01
    decay_rate: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be positive")
        if self.learning_rate < 0.0:
            raise ValueError("learning_rate must be >= 0")
        if not (0.0 < self.decay_rate <= 1.0):
            raise ValueError("decay_rate must lie in (0, 1]")


@dataclass
class Mlp:
    """Weights of a dense network; ``weights[i]`` has shape (out, in).

    The scalar output is mapped into ``(squash_lo, squash_hi)`` by
    ``lo + (hi - lo) * sigmoid(z)``, so any parameter setting yields a
    valid power share.
    """

    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)
    squash_lo: float = SQUASH_LO
    squash_hi: float = SQUASH_HI

    @property
    def layer_sizes(self):
        return [self.weights[0].shape[1]] + [w.shape[0] for w in self.weights]

    def copy(self) -> "Mlp":
        return Mlp([w.copy() for w in self.weights],
                   [b.copy() for b in self.biases],
                   self.squash_lo, self.squash_hi)


def relu(y):
    """max(y, 0), elementwise."""
    return np.maximum(y, 0.0)


def _sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def init_mlp(layer_sizes, rng: np.random.Generator,
             squash_lo: float = SQUASH_LO, squash_hi: float = SQUASH_HI) -> Mlp:
    """He-style initialization: zero biases, N(0, 2/fan_in) weights."""
    if len(layer_sizes) < 2:
        raise ValueError("need at least input and output sizes")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        std = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, std, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return Mlp(weights, biases, squash_lo, squash_hi)


def _forward_cached(net: Mlp, x: np.ndarray):
    """Forward pass keeping pre-activations for the backward pass."""
    acts = [x]
    zs = []
    a = x
    last = len(net.weights) - 1
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        z = a @ w.T + b
        zs.append(z)
        a = relu(z) if i < last else z
        acts.append(a)
    s = _sigmoid(zs[-1][:, 0])
    span = net.squash_hi - net.squash_lo
    pred = net.squash_lo + span * s
    # where the logistic has saturated exactly, its derivative is exactly
    # zero as well, so this nudge does not perturb gradients
    pred = np.clip(pred, net.squash_lo + span * _SQUASH_MARGIN,
                   net.squash_hi - span * _SQUASH_MARGIN)
    return pred, s, acts, zs


def forward_batch(net: Mlp, x: np.ndarray) -> np.ndarray:
    """Predictions for an (n, d) batch."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2 or x.shape[1] != net.weights[0].shape[1]:
        raise ValueError(
            f"expected (n, {net.weights[0].shape[1]}) input, got {x.shape}"
        )
    pred, _, _, _ = _forward_cached(net, x)
    return pred


def forward(net: Mlp, x) -> float:
    """Prediction for a single feature vector."""
    return float(forward_batch(net, np.asarray(x, dtype=float)[None, :])[0])


def mse_loss(pred, target) -> float:
    """Mean of squared differences."""
    pred = np.asarray(pred, dtype=float)
    target = np.asarray(target, dtype=float)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(np.mean((pred - target) ** 2))


def backward(net: Mlp, x: np.ndarray, y: np.ndarray):
    """Exact gradients of the batch MSE for every weight and bias.

    Returns ``(loss, grads_w, grads_b)``.  Aborts if the forward pass
    produced non-finite values.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    pred, s, acts, zs = _forward_cached(net, x)
    # the bounded squash hides runaway pre-activations, so inspect them
    if not np.all(np.isfinite(zs[-1])):
        raise ArithmeticError(
            f"non-finite forward values in backward pass "
            f"(output pre-activation range [{np.nanmin(zs[-1])}, {np.nanmax(zs[-1])}])"
        )
    n = x.shape[0]
    loss = float(np.mean((pred - y) ** 2))

    span = net.squash_hi - net.squash_lo
    dpred = 2.0 * (pred - y) / n
    delta = (dpred * span * s * (1.0 - s))[:, None]

    grads_w = [None] * len(net.weights)
    grads_b = [None] * len(net.biases)
    for i in range(len(net.weights) - 1, -1, -1):
        grads_w[i] = delta.T @ acts[i]
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ net.weights[i]) * (zs[i - 1] > 0.0)
    return loss, grads_w, grads_b


def train(net: Mlp, features: np.ndarray, labels: np.ndarray,
          cfg: TrainConfig) -> list:
    """Mini-batch gradient descent, in place.

    The data order is reshuffled every epoch with a seeded stream and the
    learning rate is multiplied by ``decay_rate`` after each epoch.
    Returns the per-epoch training loss history (length ``epochs``).
    Raises :class:`TrainingDivergedError` if the loss leaves the finite
    range.
    """
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=float)
    n = features.shape[0]
    if cfg.batch_size > n:
        raise ValueError(f"batch_size {cfg.batch_size} exceeds dataset size {n}")
    rng = np.random.default_rng(cfg.seed)
    lr = cfg.learning_rate
    history = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        sq_err_sum = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            try:
                loss, gw, gb = backward(net, features[idx], labels[idx])
            except ArithmeticError as exc:
                raise TrainingDivergedError(epoch) from exc
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            sq_err_sum += loss * idx.size
            for i in range(len(net.weights)):
                net.weights[i] -= lr * gw[i]
                net.biases[i] -= lr * gb[i]
        epoch_loss = sq_err_sum / n
        if not np.isfinite(epoch_loss):
            raise TrainingDivergedError(epoch)
        history.append(epoch_loss)
        lr *= cfg.decay_rate
    return history


def mac_count(net: Mlp) -> int:
    """Multiply-accumulate operations per single-sample forward pass."""
    return int(sum(w.shape[0] * w.shape[1] for w in net.weights))


def save_mlp(path, net: Mlp, feature_mean=None, feature_scale=None):
    """Write a flat, versioned binary record of the network.

    Layout: magic, a length-prefixed JSON header (layer sizes, squash
    bounds, normalization presence), then raw little-endian float64
    blocks: each layer's row-major weights and biases, followed by the
    normalization mean/scale when present.  Loading reproduces forward
    outputs bit-exactly.
    """
    has_norm = feature_mean is not None
    header = {
        "version": 1,
        "layer_sizes": [int(v) for v in net.layer_sizes],
        "squash": [net.squash_lo, net.squash_hi],
        "has_norm": bool(has_norm),
    }
    blob = json.dumps(header, sort_keys=True).encode()
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for w, b in zip(net.weights, net.biases):
            fh.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
        if has_norm:
            fh.write(np.ascontiguousarray(feature_mean, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(feature_scale, dtype="<f8").tobytes())


def load_mlp(path):
    """Read a record written by :func:`save_mlp`.

    Returns ``(net, feature_mean, feature_scale)``; the normalization
    arrays are ``None`` when the record carries none.
    """
    with open(path, "rb") as fh:
        if fh.read(len(_MAGIC)) != _MAGIC:
            raise ValueError(f"{path}: not a serialized network record")
        (hlen,) = struct.unpack("<I", fh.read(4))
        header = json.loads(fh.read(hlen).decode())
        if header.get("version") != 1:
            raise ValueError(f"unsupported record version {header.get('version')!r}")
        sizes = header["layer_sizes"]
        lo, hi = header["squash"]
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            w = np.frombuffer(fh.read(8 * fan_out * fan_in), dtype="<f8")
            weights.append(w.reshape(fan_out, fan_in).copy())
            biases.append(np.frombuffer(fh.read(8 * fan_out), dtype="<f8").copy())
        mean = scale = None
        if header["has_norm"]:
            d = sizes[0]
            mean = np.frombuffer(fh.read(8 * d), dtype="<f8").copy()
            scale = np.frombuffer(fh.read(8 * d), dtype="<f8").copy()
    return Mlp(weights, biases, lo, hi), mean, scale
