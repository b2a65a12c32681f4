"""A small two-layer softmax classifier trained with Adam.

Architecture: input -> dense(hidden, relu) -> inverted dropout -> dense(C,
softmax), Glorot-uniform weight init with zero biases, mean sparse categorical
cross-entropy, minibatch Adam.  Training state (weights plus Adam moments) is
a plain value object, so runs can be copied, replayed and compared bit for
bit.

Float32 is used for training; :func:`gradient_check` runs an independent
float64 path against central finite differences.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from alab import _kernels
from alab._kernels import pure
from alab.data.pool import ObjectPool
from alab.errors import ConfigurationError, ContractViolation
from alab.seeding import SeedLike, child_sequence

PREDICT_CHUNK = 16384  # rows per forward call, bounds hidden-layer memory

__all__ = [
    "EvalResult",
    "NetworkConfig",
    "NetworkState",
    "PredictiveDistribution",
    "evaluate",
    "forward",
    "glorot_limits",
    "gradient_check",
    "init_network",
    "predict",
    "train",
]


@dataclass(frozen=True)
class NetworkConfig:
    """Shape and optimizer settings for one classifier instance."""

    input_dim: int = 784
    hidden_neurons: int = 100
    num_classes: int = 10
    epochs: int = 1
    dropout_rate: float = 0.2
    learning_rate: float = 1e-3
    minibatch_size: int = 32
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_epsilon: float = 1e-8

    def __post_init__(self):
        if self.input_dim < 1:
            raise ConfigurationError("input_dim must be >= 1")
        if self.hidden_neurons < 1:
            raise ConfigurationError("hidden_neurons must be >= 1")
        if self.num_classes < 2:
            raise ConfigurationError("num_classes must be >= 2")
        if self.epochs < 1:
            raise ConfigurationError("epochs must be >= 1")
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ConfigurationError("dropout_rate must lie in [0, 1)")
        if self.learning_rate <= 0.0:
            raise ConfigurationError("learning_rate must be positive")
        if self.minibatch_size < 1:
            raise ConfigurationError("minibatch_size must be >= 1")


class NetworkState:
    """Weights, biases and Adam moment accumulators for one network."""

    __slots__ = (
        "config", "W1", "b1", "W2", "b2",
        "m_W1", "v_W1", "m_b1", "v_b1", "m_W2", "v_W2", "m_b2", "v_b2",
        "adam_step",
    )

    def __init__(self, config: NetworkConfig, W1, b1, W2, b2):
        self.config = config
        self.W1, self.b1, self.W2, self.b2 = W1, b1, W2, b2
        self.m_W1 = np.zeros_like(W1)
        self.v_W1 = np.zeros_like(W1)
        self.m_b1 = np.zeros_like(b1)
        self.v_b1 = np.zeros_like(b1)
        self.m_W2 = np.zeros_like(W2)
        self.v_W2 = np.zeros_like(W2)
        self.m_b2 = np.zeros_like(b2)
        self.v_b2 = np.zeros_like(b2)
        self.adam_step = 0

    def parameters(self) -> tuple[np.ndarray, ...]:
        return (self.W1, self.b1, self.W2, self.b2)

    def copy(self) -> "NetworkState":
        dup = NetworkState(
            self.config,
            self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(),
        )
        for name in ("m_W1", "v_W1", "m_b1", "v_b1", "m_W2", "v_W2", "m_b2", "v_b2"):
            setattr(dup, name, getattr(self, name).copy())
        dup.adam_step = self.adam_step
        return dup

    def check_finite(self):
        for arr in (self.W1, self.b1, self.W2, self.b2):
            if not np.isfinite(arr).all():
                raise ContractViolation("network parameters are no longer finite")


@dataclass
class PredictiveDistribution:
    """Per-object class probabilities aligned to stable object ids."""

    probs: np.ndarray
    object_ids: np.ndarray

    def __len__(self) -> int:
        return len(self.probs)

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]


class EvalResult(NamedTuple):
    accuracy: float
    mean_loss: float


def glorot_limits(config: NetworkConfig) -> tuple[float, float]:
    """Per-layer half-widths of the Glorot uniform interval sqrt(6/(fan_in+fan_out))."""
    r1 = float(np.sqrt(6.0 / (config.input_dim + config.hidden_neurons)))
    r2 = float(np.sqrt(6.0 / (config.hidden_neurons + config.num_classes)))
    return r1, r2


def init_network(config: NetworkConfig, seed: SeedLike) -> NetworkState:
    """Fresh network: Glorot-uniform weights, zero biases, zero Adam moments."""
    rng = np.random.default_rng(child_sequence(seed))
    r1, r2 = glorot_limits(config)
    W1 = rng.uniform(-r1, r1, size=(config.input_dim, config.hidden_neurons))
    W2 = rng.uniform(-r2, r2, size=(config.hidden_neurons, config.num_classes))
    return NetworkState(
        config,
        W1.astype(np.float32),
        np.zeros(config.hidden_neurons, dtype=np.float32),
        W2.astype(np.float32),
        np.zeros(config.num_classes, dtype=np.float32),
    )


def _check_features(state: NetworkState, features: np.ndarray):
    if features.ndim != 2 or features.shape[1] != state.config.input_dim:
        raise ContractViolation(
            f"feature matrix of shape {features.shape} does not match "
            f"input_dim {state.config.input_dim}"
        )


def _dropout_mask(rng: np.random.Generator, shape, keep_prob: float) -> np.ndarray:
    mask = (rng.random(shape) < keep_prob).astype(np.float32)
    mask /= np.float32(keep_prob)
    return mask


def forward(
    state: NetworkState,
    features,
    training: bool = False,
    seed: SeedLike | None = None,
    object_ids=None,
) -> PredictiveDistribution:
    """Class probabilities for ``features``.

    In training mode an inverted-dropout keep mask (keep probability
    ``1 - dropout_rate``, kept units scaled by its inverse) is drawn from
    ``seed`` and applied to the hidden layer; otherwise the pass is
    deterministic and mask-free.
    """
    x = np.ascontiguousarray(features, dtype=np.float32)
    _check_features(state, x)
    n = x.shape[0]
    keep = 1.0 - state.config.dropout_rate
    rng = None
    if training and state.config.dropout_rate > 0.0:
        if seed is None:
            raise ContractViolation("training-mode forward requires a seed")
        rng = np.random.default_rng(child_sequence(seed))

    chunks = []
    for start in range(0, n, PREDICT_CHUNK):
        xb = x[start : start + PREDICT_CHUNK]
        mask = None
        if rng is not None:
            mask = _dropout_mask(rng, (len(xb), state.config.hidden_neurons), keep)
        chunks.append(
            _kernels.forward_probs(state.W1, state.b1, state.W2, state.b2, xb, mask)
        )
    if not chunks:
        probs = np.zeros((0, state.config.num_classes), dtype=np.float32)
    elif len(chunks) == 1:
        probs = chunks[0]
    else:
        probs = np.concatenate(chunks, axis=0)

    if object_ids is None:
        object_ids = np.arange(n, dtype=np.int64)
    else:
        object_ids = np.asarray(object_ids, dtype=np.int64)
        if len(object_ids) != n:
            raise ContractViolation("object_ids must align with feature rows")
    return PredictiveDistribution(probs=probs, object_ids=object_ids)


def predict(state: NetworkState, pool: ObjectPool) -> PredictiveDistribution:
    """Deterministic (dropout-off) predictions for a whole pool."""
    return forward(state, pool.features, object_ids=pool.ids)


def _labeled_arrays(pool: ObjectPool) -> tuple[np.ndarray, np.ndarray]:
    if pool.labels is None:
        raise ContractViolation("operation requires a fully labeled pool")
    x = np.ascontiguousarray(pool.features, dtype=np.float32)
    y = np.ascontiguousarray(pool.labels, dtype=np.int64)
    return x, y


def train(state: NetworkState, pool: ObjectPool, epochs: int, seed: SeedLike) -> NetworkState:
    """Train in place for ``epochs`` seeded-shuffle passes of Adam minibatches.

    Adam moments are carried in the state across calls; re-initialize the
    network to reset them.  Returns the same state object.
    """
    if epochs < 1:
        raise ContractViolation("epochs must be >= 1")
    x, y = _labeled_arrays(pool)
    _check_features(state, x)
    cfg = state.config
    if len(y) and int(y.max()) >= cfg.num_classes:
        raise ContractViolation("label outside the configured number of classes")
    if len(x) == 0:
        raise ContractViolation("cannot train on an empty pool")

    shuffle_rng = np.random.default_rng(child_sequence(seed, "shuffle"))
    dropout_rng = np.random.default_rng(child_sequence(seed, "dropout"))
    keep = 1.0 - cfg.dropout_rate
    n = len(x)
    for _ in range(epochs):
        order = shuffle_rng.permutation(n)
        for start in range(0, n, cfg.minibatch_size):
            take = order[start : start + cfg.minibatch_size]
            xb = x[take]
            yb = y[take]
            mask = None
            if cfg.dropout_rate > 0.0:
                mask = _dropout_mask(dropout_rng, (len(take), cfg.hidden_neurons), keep)
            state.adam_step += 1
            _kernels.train_minibatch(
                state.W1, state.b1, state.W2, state.b2,
                state.m_W1, state.v_W1, state.m_b1, state.v_b1,
                state.m_W2, state.v_W2, state.m_b2, state.v_b2,
                xb, yb, mask, state.adam_step,
                cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon,
            )
    state.check_finite()
    return state


def evaluate(state: NetworkState, pool: ObjectPool) -> EvalResult:
    """Accuracy (argmax prediction, lowest class index on ties) and mean loss."""
    if len(pool) == 0:
        raise ContractViolation("cannot evaluate on an empty pool")
    x, y = _labeled_arrays(pool)
    dist = forward(state, x)
    predicted = dist.probs.argmax(axis=1)
    accuracy = float(np.mean(predicted == y))
    loss = pure.mean_cross_entropy(dist.probs.astype(np.float64), y)
    return EvalResult(accuracy=accuracy, mean_loss=loss)


def gradient_check(
    state: NetworkState,
    pool: ObjectPool,
    seed: SeedLike = 0,
    samples_per_tensor: int = 30,
    step: float = 1e-5,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Runs entirely in float64 with dropout disabled, on a sampled subset of
    entries of every parameter tensor.
    """
    if len(pool) > 10:
        raise ContractViolation("gradient check expects a small pool (<= 10 objects)")
    x64, y = _labeled_arrays(pool)
    x64 = x64.astype(np.float64)
    weights = [p.astype(np.float64) for p in state.parameters()]

    def loss_of(ws):
        probs = pure.forward_probs(ws[0], ws[1], ws[2], ws[3], x64)
        return pure.mean_cross_entropy(probs, y)

    _, grads = pure.loss_and_grads(*weights, x64, y)
    rng = np.random.default_rng(child_sequence(seed))
    worst = 0.0
    for tensor_index, (w, g) in enumerate(zip(weights, grads)):
        flat_w = w.reshape(-1)
        flat_g = g.reshape(-1)
        count = min(samples_per_tensor, flat_w.size)
        picks = rng.choice(flat_w.size, size=count, replace=False)
        for j in picks:
            original = flat_w[j]
            flat_w[j] = original + step
            hi = loss_of(weights)
            flat_w[j] = original - step
            lo = loss_of(weights)
            flat_w[j] = original
            numeric = (hi - lo) / (2.0 * step)
            analytic = flat_g[j]
            denom = max(abs(analytic) + abs(numeric), 1e-6)
            worst = max(worst, abs(analytic - numeric) / denom)
    return worst
