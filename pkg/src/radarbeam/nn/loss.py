"""Cross-entropy over beam scores.

Per sample the loss is -(1/N) * log softmax(logits)[label] where N is the
number of classes (the 1/N prefactor is kept; it uniformly rescales
gradients and interacts with the learning rate). The softmax is fused into
the loss for numerical stability; intermediate math runs in float64.
"""

from __future__ import annotations

import numpy as np

from ..errors import DataError


def cross_entropy_loss(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Returns (mean loss, d loss / d logits) for a batch.

    logits: (B, N); labels: (B,) integer class indices in [0, N).
    """
    if logits.ndim != 2:
        raise DataError(f"logits must be 2D (batch, classes), got shape {logits.shape}")
    labels = np.asarray(labels)
    b, n = logits.shape
    if labels.shape != (b,):
        raise DataError(f"labels shape {labels.shape} does not match batch size {b}")
    if labels.size and (labels.min() < 0 or labels.max() >= n):
        raise DataError(f"labels must lie in [0, {n})")

    z = logits.astype(np.float64)
    z_max = z.max(axis=1, keepdims=True)
    log_probs = z - z_max - np.log(np.exp(z - z_max).sum(axis=1, keepdims=True))
    rows = np.arange(b)
    loss = float(-(log_probs[rows, labels]).mean() / n)

    grad = np.exp(log_probs)
    grad[rows, labels] -= 1.0
    grad /= n * b
    return loss, grad.astype(logits.dtype, copy=False)
