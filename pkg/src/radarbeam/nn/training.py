"""Adam training loop with step learning-rate decay and best-on-validation
checkpointing. Deterministic for a fixed seed: initialization, shuffling,
and update order are all driven by seeded generators.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError
from .loss import cross_entropy_loss
from .network import CnnModel, predict_logits, topk_indices


@dataclass
class TrainConfig:
    lr: float = 0.001
    batch_size: int = 32
    epochs: int = 40
    lr_decay_gamma: float = 0.1
    lr_decay_every_epochs: int = 10
    n_seeds: int = 5
    seed: int = 0

    def __post_init__(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ConfigError("lr, batch_size, and epochs must be positive")
        if not 0 < self.lr_decay_gamma <= 1:
            raise ConfigError("lr_decay_gamma must be in (0, 1]")
        if self.lr_decay_every_epochs < 1 or self.n_seeds < 1:
            raise ConfigError("lr_decay_every_epochs and n_seeds must be >= 1")

    def lr_at_epoch(self, epoch: int) -> float:
        """Learning rate for a 1-based epoch index (decay applied after every
        lr_decay_every_epochs epochs)."""
        return self.lr * self.lr_decay_gamma ** ((epoch - 1) // self.lr_decay_every_epochs)


@dataclass
class TrainData:
    """Feature tensors (N, C, H, W) and integer labels for the train and
    validation splits."""

    x_train: np.ndarray
    y_train: np.ndarray
    x_val: np.ndarray
    y_val: np.ndarray

    def __post_init__(self):
        if len(self.x_train) == 0:
            raise DataError("empty training set")
        if len(self.x_val) == 0:
            raise DataError("empty validation set")
        if len(self.x_train) != len(self.y_train) or len(self.x_val) != len(self.y_val):
            raise DataError("feature/label length mismatch")


class Adam:
    def __init__(self, params, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.params = list(params)
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p.value) for p in self.params]
        self.v = [np.zeros_like(p.value) for p in self.params]

    def step(self, lr: float):
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, m, v in zip(self.params, self.m, self.v):
            g = p.grad
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p.value -= lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


def _val_metrics(model: CnnModel, x_val, y_val, batch_size: int) -> dict:
    logits = predict_logits(model, x_val, batch_size=batch_size)
    loss, _ = cross_entropy_loss(logits, y_val)
    top5 = topk_indices(logits, 5)
    hits = top5 == np.asarray(y_val)[:, None]
    return {
        "val_loss": loss,
        "val_top1": float(hits[:, :1].any(axis=1).mean()),
        "val_top3": float(hits[:, :3].any(axis=1).mean()),
        "val_top5": float(hits.any(axis=1).mean()),
    }


def train(model: CnnModel, data: TrainData, config: TrainConfig) -> list[dict]:
    """Train in place and restore the epoch with the best validation top-1.
    Returns per-epoch metric dicts (train loss, val loss, val top-1/3/5, lr).
    """
    rng = np.random.default_rng(config.seed)
    optimizer = Adam(model.params())
    n = len(data.x_train)
    best_top1 = -1.0
    best_state = None
    metrics: list[dict] = []
    for epoch in range(1, config.epochs + 1):
        lr = config.lr_at_epoch(epoch)
        order = rng.permutation(n)
        epoch_loss = 0.0
        t0 = time.perf_counter()
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            logits = model.forward(data.x_train[idx])
            loss, dlogits = cross_entropy_loss(logits, data.y_train[idx])
            model.zero_grad()
            model.backward(dlogits)
            optimizer.step(lr)
            epoch_loss += loss * len(idx)
        row = {"epoch": epoch, "lr": lr, "train_loss": epoch_loss / n,
               "epoch_seconds": time.perf_counter() - t0}
        row.update(_val_metrics(model, data.x_val, data.y_val, config.batch_size))
        metrics.append(row)
        if row["val_top1"] > best_top1:
            best_top1 = row["val_top1"]
            best_state = [p.value.copy() for p in model.params()]
    if best_state is not None:
        model.set_state(best_state)
    return metrics
