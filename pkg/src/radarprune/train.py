"""SGD training, loss, evaluation, and the finite-difference gradient check."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .nn import Conv2D, Dense, NetworkGraph, Softmax

_TINY = 1e-30  # floor inside log() so a confident wrong answer stays finite


class TrainingDiverged(RuntimeError):
    """Raised when the epoch loss becomes NaN or infinite."""


@dataclass
class TrainConfig:
    epochs: int = 10
    batch_size: int = 32
    learning_rate: float = 0.005
    momentum: float = 0.9
    clip_norm: float | None = 5.0  # global gradient-norm ceiling; None disables
    seed: int = 0
    shuffle: bool = True


def loss_and_grads(model: NetworkGraph, x: np.ndarray, y: np.ndarray):
    """Mean cross-entropy over the batch plus parameter gradients.

    The softmax Jacobian is fused with the cross-entropy derivative, so
    backprop starts from (probs - onehot) / B at the logits.
    Returns (mean_loss, per_example_losses float64, {layer: (dW, db)}).
    """
    if not isinstance(model.layers[-1], Softmax):
        raise ValueError("loss expects a softmax-terminated model")
    caches: list[dict] = []
    probs = model.forward_batch(x, caches)
    B = x.shape[0]
    picked = probs[np.arange(B), y].astype(np.float64)
    per_example = -np.log(np.maximum(picked, _TINY))
    grad = probs.astype(x.dtype, copy=True)
    grad[np.arange(B), y] -= 1.0
    grad /= B
    grads: dict = {}
    for layer, cache in zip(reversed(model.layers[:-1]), reversed(caches[:-1])):
        grad, wgrads = layer.backward(grad, cache)
        if wgrads is not None:
            grads[layer] = wgrads
    return float(per_example.mean()), per_example, grads


def _clip_grads(grads: dict, clip_norm: float) -> None:
    total = 0.0
    for dw, db in grads.values():
        total += float(np.sum(np.square(dw, dtype=np.float64)))
        total += float(np.sum(np.square(db, dtype=np.float64)))
    norm = math.sqrt(total)
    if norm > clip_norm:
        scale = clip_norm / norm
        for layer, (dw, db) in grads.items():
            grads[layer] = (dw * scale, db * scale)


def _sgd_step(grads: dict, velocity: dict, lr: float, momentum: float) -> None:
    for layer, (dw, db) in grads.items():
        vw, vb = velocity.get(layer, (0.0, 0.0))
        vw = momentum * vw - (lr * dw).astype(layer.weights.dtype)
        vb = momentum * vb - (lr * db).astype(layer.bias.dtype)
        velocity[layer] = (vw, vb)
        layer.weights += vw
        layer.bias += vb


def train(model: NetworkGraph, x: np.ndarray, y: np.ndarray, cfg: TrainConfig):
    """Minibatch SGD with classical momentum; mutates ``model``.

    Returns (model, loss_history) where loss_history[e] is the mean
    per-example loss of epoch e accumulated in float64 in example order,
    so reruns with the same seed/config reproduce it exactly.
    """
    model.validate()
    n = x.shape[0]
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    if not 0.0 <= cfg.momentum < 1.0:
        raise ValueError(f"momentum must be in [0, 1), got {cfg.momentum}")
    rng = np.random.default_rng(cfg.seed)
    history: list[float] = []
    velocity: dict = {}
    for _ in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        ep_losses = np.empty(n, dtype=np.float64)
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            _, per_example, grads = loss_and_grads(model, x[idx], y[idx])
            ep_losses[idx] = per_example
            if cfg.clip_norm is not None:
                _clip_grads(grads, cfg.clip_norm)
            _sgd_step(grads, velocity, cfg.learning_rate, cfg.momentum)
        mean_loss = float(ep_losses.mean())
        if not np.isfinite(mean_loss):
            raise TrainingDiverged(f"epoch loss is not finite: {mean_loss}")
        history.append(mean_loss)
    return model, history


def predict(model: NetworkGraph, x: np.ndarray, batch_size: int = 128) -> np.ndarray:
    """Argmax class predictions for a stack of inputs (N, C, H, W)."""
    preds = np.empty(x.shape[0], dtype=np.int64)
    for start in range(0, x.shape[0], batch_size):
        chunk = x[start : start + batch_size].astype(model.dtype, copy=False)
        preds[start : start + chunk.shape[0]] = model.forward_batch(chunk).argmax(axis=1)
    return preds


def evaluate(model: NetworkGraph, x: np.ndarray, y: np.ndarray, batch_size: int = 128) -> float:
    """Top-1 accuracy on the given examples."""
    if x.shape[0] == 0:
        raise ValueError("cannot evaluate on an empty split")
    return float((predict(model, x, batch_size) == np.asarray(y)).mean())


def gradient_check(
    model: NetworkGraph,
    x: np.ndarray,
    y: np.ndarray,
    epsilon: float = 1e-4,
    samples_per_tensor: int = 40,
    seed: int = 0,
) -> float:
    """Max relative error between backprop and central differences.

    Runs on a float64 copy of the model so the comparison is limited by
    the scheme's O(eps^2) truncation, not float32 rounding.  Relative
    error is |a - n| / max(|a|, |n|, 1e-8) over a seeded sample of
    weights in every parameter tensor.
    """
    if not 0 < epsilon <= 1e-2:
        raise ValueError(f"epsilon must be in (0, 1e-2], got {epsilon}")
    m64 = model.astype(np.float64)
    x64 = np.asarray(x, dtype=np.float64)
    _, _, grads = loss_and_grads(m64, x64, y)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for layer in m64.layers:
        if layer not in grads:
            continue
        for arr, ganalytic in zip((layer.weights, layer.bias), grads[layer]):
            flat = arr.reshape(-1)
            gflat = np.asarray(ganalytic).reshape(-1)
            count = min(samples_per_tensor, flat.size)
            picks = rng.choice(flat.size, size=count, replace=False)
            for k in picks:
                orig = flat[k]
                flat[k] = orig + epsilon
                lo_plus = loss_and_grads(m64, x64, y)[0]
                flat[k] = orig - epsilon
                lo_minus = loss_and_grads(m64, x64, y)[0]
                flat[k] = orig
                numeric = (lo_plus - lo_minus) / (2 * epsilon)
                err = abs(gflat[k] - numeric) / max(abs(gflat[k]), abs(numeric), 1e-8)
                worst = max(worst, err)
    return worst
