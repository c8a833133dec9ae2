"""Shared softmax-regression trainer used by the audit probe and the shallow baselines.

Full-batch gradient descent with monotone step control: a step that would
increase the penalized loss is halved (up to a cap) before being applied, so the
recorded loss trace is non-increasing for any feature scaling, including raw
TF-IDF features at the default learning rate. Training is a deterministic
function of (data, config): initialization is drawn from a generator seeded with
``config.seed`` and every subsequent operation is order-stable.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import ProbeError

MAX_HALVINGS = 50


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for the gradient-descent trainer.

    Defaults follow the package-wide baseline settings (documented as
    non-canonical in the README): ridge 1e-2, learning rate 0.1, 1000 iterations.
    ``balanced`` switches on inverse-frequency example weights.
    """

    l2: float = 1e-2
    lr: float = 0.1
    iters: int = 1000
    seed: int = 13
    balanced: bool = False
    init_scale: float = 1e-2


def class_weights(y: np.ndarray, n_classes: int, balanced: bool) -> np.ndarray:
    """Per-example weights; inverse class frequency when balanced."""
    n = y.shape[0]
    if not balanced:
        return np.ones(n)
    counts = np.bincount(y, minlength=n_classes).astype(float)
    present = counts > 0
    w = np.zeros(n_classes)
    w[present] = n / (present.sum() * counts[present])
    return w[y]


def loss_and_grad(W, b, X, y, l2, sample_weight=None):
    """Penalized loss and analytic gradient; thin wrapper over the active kernel."""
    if sample_weight is None:
        sample_weight = np.ones(X.shape[0])
    return _kernels.softmax_xent(
        np.ascontiguousarray(W, dtype=np.float64),
        np.ascontiguousarray(b, dtype=np.float64),
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.int64),
        np.ascontiguousarray(sample_weight, dtype=np.float64),
        float(l2),
    )


def fit_softmax(X: np.ndarray, y: np.ndarray, n_classes: int, config: TrainConfig):
    """Train a multinomial logistic model by monotone full-batch gradient descent.

    Returns (W, b, losses) where ``losses`` has one entry per iteration plus the
    initial loss; the sequence is non-increasing by construction.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n, d = X.shape
    if n == 0:
        raise ProbeError("cannot train on an empty feature matrix")
    rng = np.random.default_rng(config.seed)
    W = rng.normal(0.0, config.init_scale, size=(n_classes, d))
    b = np.zeros(n_classes)
    sw = class_weights(y, n_classes, config.balanced)

    loss, gW, gb = loss_and_grad(W, b, X, y, config.l2, sw)
    if not np.isfinite(loss):
        raise ProbeError("non-finite loss at initialization")
    losses = [loss]
    for it in range(config.iters):
        step = config.lr
        accepted = False
        for _ in range(MAX_HALVINGS):
            W2 = W - step * gW
            b2 = b - step * gb
            loss2, gW2, gb2 = loss_and_grad(W2, b2, X, y, config.l2, sw)
            if not np.isfinite(loss2):
                raise ProbeError(f"non-finite loss at iteration {it}")
            if loss2 <= loss:
                accepted = True
                break
            step *= 0.5
        if not accepted:
            # Gradient is numerically flat; keep current parameters.
            losses.append(loss)
            break
        W, b, loss, gW, gb = W2, b2, loss2, gW2, gb2
        losses.append(loss)
    return W, b, np.asarray(losses)


def softmax_probs(W, b, X):
    logits = X @ W.T + b
    logits -= logits.max(axis=1, keepdims=True)
    expz = np.exp(logits)
    return expz / expz.sum(axis=1, keepdims=True)
