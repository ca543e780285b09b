"""Minibatch SGD with momentum and a step learning-rate schedule."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from voxradar.framefilter.network import (
    ClassifierModel,
    backward_batch,
    batch_loss_and_grad,
    forward_batch,
)


class SingleClassError(ValueError):
    """Training data does not contain both labels."""


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.01
    momentum: float = 0.9
    step_size: int = 7
    gamma: float = 0.1
    batch_size: int = 16
    epochs: int = 20
    seed: int = 0

    def __post_init__(self):
        if not (self.learning_rate > 0 and self.momentum >= 0 and self.gamma > 0):
            raise ValueError("learning_rate, gamma must be positive and momentum >= 0")
        if self.step_size < 1 or self.batch_size < 1 or self.epochs < 0:
            raise ValueError("step_size, batch_size must be >= 1 and epochs >= 0")

    def lr_at(self, epoch: int) -> float:
        return self.learning_rate * self.gamma ** (epoch // self.step_size)


def train(model: ClassifierModel, dataset: Sequence[tuple[np.ndarray, int]],
          cfg: TrainConfig = TrainConfig()) -> tuple[ClassifierModel, list[tuple[int, float, float]]]:
    """Train a copy of ``model``; returns it with per-epoch (epoch, running_loss, accuracy).

    Running loss and accuracy are averaged over the samples seen so far in the
    current epoch and restart from zero at each epoch.
    """
    if len(dataset) == 0:
        raise ValueError("empty training set")
    images = np.stack([np.asarray(img, dtype=float) for img, _ in dataset])
    labels = np.array([int(lbl) for _, lbl in dataset])
    if set(labels.tolist()) != {0, 1}:
        raise SingleClassError("training data must contain both Regular and Ambiguous samples")

    model = model.copy()
    history: list[tuple[int, float, float]] = []
    rng = np.random.default_rng(cfg.seed)
    velocity = {k: np.zeros_like(v) for k, v in model.params.items()}
    n = len(labels)
    for epoch in range(cfg.epochs):
        lr = cfg.lr_at(epoch)
        order = rng.permutation(n)
        loss_sum, correct, seen = 0.0, 0, 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            logits, cache = forward_batch(model, images[idx], keep_cache=True)
            loss, dlogits, _ = batch_loss_and_grad(logits, labels[idx])
            grads = backward_batch(model, dlogits, cache)
            for k, g in grads.items():
                velocity[k] = cfg.momentum * velocity[k] + g
                model.params[k] = model.params[k] - lr * velocity[k]
            loss_sum += loss * len(idx)
            correct += int(np.sum((logits[:, 1] > logits[:, 0]).astype(int) == labels[idx]))
            seen += len(idx)
        history.append((epoch, loss_sum / seen, correct / seen))
    model.check_finite()
    model.history = list(model.history) + history
    return model, history


def accuracy(model: ClassifierModel, images: np.ndarray, labels: Sequence[int]) -> float:
    logits = forward_batch(model, np.asarray(images))
    pred = (logits[:, 1] > logits[:, 0]).astype(int)
    return float(np.mean(pred == np.asarray(labels)))


def epochs_to_reach(history, loss_target: float) -> int | None:
    """Number of epochs until running loss first drops to ``loss_target`` (None if never)."""
    for epoch, loss, _ in history:
        if loss <= loss_target:
            return epoch + 1
    return None


def write_history_csv(path, history) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "running_loss", "accuracy"])
        for epoch, loss, acc in history:
            w.writerow([epoch, repr(float(loss)), repr(float(acc))])
