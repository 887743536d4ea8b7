"""Small feed-forward softmax classifier used by the benchmark harness.

Architecture: input -> 128 -> 64 -> 32 -> n_classes, ReLU activations,
inverted dropout (0.3) on hidden activations during training only,
cross-entropy loss, Adam updates over mini-batches. Everything is
seed-deterministic: weight init, batch order, and dropout masks all come
from one generator, so identical inputs and seed give identical models.

Expects feature matrices already normalized by the caller (the harness
z-scores per training fold).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, NonFiniteLoss


@dataclass(frozen=True)
class MlpConfig:
    hidden: tuple[int, ...] = (128, 64, 32)
    dropout: float = 0.3
    learning_rate: float = 1e-3
    epochs: int = 100
    batch_size: int = 32
    seed: int = 0
    max_restarts: int = 3


@dataclass
class MlpClassifier:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    classes: tuple[str, ...]
    config: MlpConfig


def _init_params(sizes: list[int], rng: np.random.Generator):
    """Uniform fan-in scaling: U(-1/sqrt(fan_in), 1/sqrt(fan_in))."""
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes, sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return weights, biases


def _forward(weights, biases, x, dropout_masks=None):
    """Returns (logits, per-layer post-activation cache)."""
    cache = [x]
    h = x
    n_hidden = len(weights) - 1
    for i in range(n_hidden):
        h = np.maximum(h @ weights[i] + biases[i], 0.0)
        if dropout_masks is not None:
            h = h * dropout_masks[i]
        cache.append(h)
    logits = h @ weights[-1] + biases[-1]
    return logits, cache


def _softmax(logits):
    z = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def loss_and_grads(weights, biases, x, y_codes, dropout_masks=None):
    """Mean cross-entropy and gradients w.r.t. every weight and bias.

    ``dropout_masks`` are pre-scaled keep masks (values 0 or 1/(1-p)) per
    hidden layer; pass None for a deterministic pass (used for prediction
    and for finite-difference verification).
    """
    logits, cache = _forward(weights, biases, x, dropout_masks)
    probs = _softmax(logits)
    n = x.shape[0]
    loss = float(-np.mean(np.log(probs[np.arange(n), y_codes] + 1e-300)))

    delta = probs
    delta[np.arange(n), y_codes] -= 1.0
    delta /= n

    grads_w = [None] * len(weights)
    grads_b = [None] * len(biases)
    for i in range(len(weights) - 1, -1, -1):
        grads_w[i] = cache[i].T @ delta
        grads_b[i] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ weights[i].T
            if dropout_masks is not None:
                delta = delta * dropout_masks[i - 1]
            delta = delta * (cache[i] > 0.0)
    return loss, grads_w, grads_b


def _train_once(x, y_codes, n_classes, config: MlpConfig, lr: float) -> tuple[list, list] | None:
    """One full training run; None signals a non-finite loss."""
    rng = np.random.default_rng(config.seed)
    sizes = [x.shape[1], *config.hidden, n_classes]
    weights, biases = _init_params(sizes, rng)

    # Adam state
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    beta1, beta2, eps = 0.9, 0.999, 1e-8
    step = 0

    n = x.shape[0]
    keep = 1.0 - config.dropout
    for _ in range(config.epochs):
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            batch = order[start:start + config.batch_size]
            xb, yb = x[batch], y_codes[batch]
            masks = None
            if config.dropout > 0.0:
                masks = [
                    (rng.random((xb.shape[0], h)) < keep).astype(np.float64) / keep
                    for h in config.hidden
                ]
            loss, gw, gb = loss_and_grads(weights, biases, xb, yb, masks)
            if not np.isfinite(loss):
                return None
            step += 1
            correction = np.sqrt(1.0 - beta2**step) / (1.0 - beta1**step)
            for i in range(len(weights)):
                m_w[i] = beta1 * m_w[i] + (1 - beta1) * gw[i]
                v_w[i] = beta2 * v_w[i] + (1 - beta2) * gw[i] ** 2
                weights[i] -= lr * correction * m_w[i] / (np.sqrt(v_w[i]) + eps)
                m_b[i] = beta1 * m_b[i] + (1 - beta1) * gb[i]
                v_b[i] = beta2 * v_b[i] + (1 - beta2) * gb[i] ** 2
                biases[i] -= lr * correction * m_b[i] / (np.sqrt(v_b[i]) + eps)
    return weights, biases


def mlp_train(features: np.ndarray, labels, config: MlpConfig = MlpConfig()) -> MlpClassifier:
    """Train on (n x d) features; divergence halves the learning rate and
    restarts, up to ``max_restarts`` times."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DimensionMismatch("features must be a non-empty (n, d) matrix")
    labels = np.asarray(labels)
    if labels.shape[0] != x.shape[0]:
        raise DimensionMismatch("labels and features disagree on n")
    classes = tuple(sorted(set(labels.tolist())))
    code = {c: i for i, c in enumerate(classes)}
    y_codes = np.array([code[l] for l in labels.tolist()], dtype=int)

    lr = config.learning_rate
    for _ in range(config.max_restarts + 1):
        result = _train_once(x, y_codes, len(classes), config, lr)
        if result is not None:
            weights, biases = result
            return MlpClassifier(weights=weights, biases=biases, classes=classes, config=config)
        lr /= 2.0
    raise NonFiniteLoss(f"training diverged even at learning rate {lr}")


def mlp_predict(clf: MlpClassifier, features: np.ndarray) -> np.ndarray:
    x = np.asarray(features, dtype=np.float64)
    if x.shape[1] != clf.weights[0].shape[0]:
        raise DimensionMismatch(
            f"classifier expects {clf.weights[0].shape[0]} features, got {x.shape[1]}"
        )
    logits, _ = _forward(clf.weights, clf.biases, x)
    return np.asarray(clf.classes, dtype=object)[np.argmax(logits, axis=1)]
