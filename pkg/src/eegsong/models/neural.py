"""Single-hidden-layer multilayer perceptron trained with minibatch SGD.

Gradients are computed analytically; mlp_loss_and_grads is the single source
of truth for both the training loop and numerical gradient checks.
"""

from __future__ import annotations

import numpy as np

from .common import one_hot, softmax

PARAM_NAMES = ("w1", "b1", "w2", "b2")


def init_mlp(
    rng: np.random.Generator, n_features: int, hidden: int, n_classes: int
) -> dict[str, np.ndarray]:
    return {
        "w1": rng.standard_normal((n_features, hidden)) * np.sqrt(2.0 / n_features),
        "b1": np.zeros(hidden),
        "w2": rng.standard_normal((hidden, n_classes)) * np.sqrt(2.0 / hidden),
        "b2": np.zeros(n_classes),
    }


def mlp_logits(params: dict[str, np.ndarray], X: np.ndarray) -> np.ndarray:
    hidden = np.maximum(X @ params["w1"] + params["b1"], 0.0)
    return hidden @ params["w2"] + params["b2"]


def mlp_loss_and_grads(
    params: dict[str, np.ndarray], X: np.ndarray, y_idx: np.ndarray, n_classes: int
) -> tuple[float, dict[str, np.ndarray]]:
    """Mean cross-entropy over the batch and its gradient for every parameter."""
    n = X.shape[0]
    pre = X @ params["w1"] + params["b1"]
    hidden = np.maximum(pre, 0.0)
    logits = hidden @ params["w2"] + params["b2"]
    proba = softmax(logits)
    picked = np.clip(proba[np.arange(n), y_idx], 1e-300, None)
    loss = float(-np.mean(np.log(picked)))

    d_logits = (proba - one_hot(y_idx, n_classes)) / n
    d_hidden = d_logits @ params["w2"].T
    d_pre = d_hidden * (pre > 0.0)
    grads = {
        "w1": X.T @ d_pre,
        "b1": d_pre.sum(axis=0),
        "w2": hidden.T @ d_logits,
        "b2": d_logits.sum(axis=0),
    }
    return loss, grads


def train_mlp(
    X: np.ndarray,
    y_idx: np.ndarray,
    n_classes: int,
    hidden: int,
    epochs: int,
    learning_rate: float,
    batch: int,
    seed: int,
) -> tuple[dict[str, np.ndarray], np.ndarray]:
    rng = np.random.default_rng(seed)
    params = init_mlp(rng, X.shape[1], hidden, n_classes)
    n = X.shape[0]
    epoch_losses = np.empty(epochs)
    for e in range(epochs):
        perm = rng.permutation(n)
        losses = []
        for start in range(0, n, batch):
            take = perm[start : start + batch]
            loss, grads = mlp_loss_and_grads(params, X[take], y_idx[take], n_classes)
            for name in PARAM_NAMES:
                params[name] -= learning_rate * grads[name]
            losses.append(loss)
        epoch_losses[e] = float(np.mean(losses))
    return params, epoch_losses
