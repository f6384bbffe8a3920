"""Full training runs under a Config: the compute_loss tool.

Deterministic for (config, dataset, seed); validation loss comes from a
held-out 20% split chosen by a fixed index hash, never touched by gradient
steps. Divergence (non-finite or loss > 1e6) is reported as a sortable
sentinel, not an exception, so search loops can rank failures last.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from evoloop.configspace import Config
from .model import build_model, forward, gradients
from .optim import OptimizerState, optimizer_step

DIVERGENCE_LOSS = 1e6


@dataclass(frozen=True)
class Dataset:
    """A supervised regression dataset with a stable identity."""
    name: str
    X: np.ndarray
    y: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return len(self.y)


@dataclass
class TrainResult:
    final_validation_loss: float
    loss_curve: list[tuple[int, float]] = field(default_factory=list)
    cost_units: float = 0.0
    wall_steps: int = 0
    status: str = "ok"  # "ok" | "diverged"

    def to_json(self) -> dict:
        return {
            "final_validation_loss": self.final_validation_loss,
            "cost_units": self.cost_units,
            "wall_steps": self.wall_steps,
            "status": self.status,
        }


def _index_hash(i: int) -> float:
    # Fixed multiplicative hash; independent of dataset size and Python's
    # salted hash().
    return ((i * 2654435761 + 1013904223) % 2**32) / 2**32


def split_indices(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Deterministic 80/20 train/validation split by example index hash."""
    h = np.array([_index_hash(i) for i in range(n)])
    train = np.nonzero(h < 0.8)[0]
    val = np.nonzero(h >= 0.8)[0]
    return train, val


def mse(preds: np.ndarray, y: np.ndarray) -> float:
    r = preds - y
    return float(np.mean(r * r))


def estimate_cost_units(c: Config, n_examples: int) -> float:
    """Pre-training cost estimate: total example-passes over the train split."""
    n_train = int(np.count_nonzero(
        np.array([_index_hash(i) for i in range(n_examples)]) < 0.8
    ))
    steps_per_epoch = n_train // c.training.batch_size
    return float(c.training.epochs * steps_per_epoch * c.training.batch_size)


def compute_loss(c: Config, dataset: Dataset, seed: int) -> TrainResult:
    """Train a model per ``c`` on ``dataset`` and report held-out loss.

    cost_units = batch_size x steps (example passes through the trainer).
    """
    train_idx, val_idx = split_indices(len(dataset))
    X_train, y_train = dataset.X[train_idx], dataset.y[train_idx]
    X_val, y_val = dataset.X[val_idx], dataset.y[val_idx]

    # Both the config's own seed and the caller's seed feed initialization
    # and shuffling, so seed-replication studies can vary either.
    mixed_seed = (c.training.seed * 1000003 + seed) % 2**31
    params = build_model(c.architecture, dataset.input_dim, mixed_seed)
    state = OptimizerState(c.optimizer)
    rng = np.random.default_rng(mixed_seed + 1)

    batch_size = c.training.batch_size
    steps_per_epoch = len(X_train) // batch_size
    loss_curve: list[tuple[int, float]] = []
    step = 0
    diverged = False

    for _ in range(c.training.epochs):
        order = rng.permutation(len(X_train))
        for b in range(steps_per_epoch):
            idx = order[b * batch_size:(b + 1) * batch_size]
            try:
                grads, loss = gradients(params, X_train[idx], y_train[idx])
            except FloatingPointError:
                diverged = True
                break
            if loss > DIVERGENCE_LOSS:
                diverged = True
                break
            optimizer_step(state, params, grads)
            step += 1
            loss_curve.append((step, loss))
        if diverged:
            break

    cost_units = float(step * batch_size)
    if diverged:
        return TrainResult(
            final_validation_loss=float("inf"),
            loss_curve=loss_curve,
            cost_units=cost_units,
            wall_steps=step,
            status="diverged",
        )

    val_preds = forward(params, X_val)
    val_loss = mse(val_preds, y_val)
    if not np.isfinite(val_loss) or val_loss > DIVERGENCE_LOSS:
        return TrainResult(
            final_validation_loss=float("inf"),
            loss_curve=loss_curve,
            cost_units=cost_units,
            wall_steps=step,
            status="diverged",
        )
    return TrainResult(
        final_validation_loss=val_loss,
        loss_curve=loss_curve,
        cost_units=cost_units,
        wall_steps=step,
        status="ok",
    )


def train_model(c: Config, dataset: Dataset, seed: int,
                epochs: int | None = None) -> list[dict]:
    """Train and return the fitted parameters (used by drift evaluation and
    the live simulator, which need predictions rather than a loss)."""
    train_idx, _ = split_indices(len(dataset))
    X_train, y_train = dataset.X[train_idx], dataset.y[train_idx]
    mixed_seed = (c.training.seed * 1000003 + seed) % 2**31
    params = build_model(c.architecture, dataset.input_dim, mixed_seed)
    state = OptimizerState(c.optimizer)
    rng = np.random.default_rng(mixed_seed + 1)
    batch_size = c.training.batch_size
    steps_per_epoch = len(X_train) // batch_size
    for _ in range(epochs if epochs is not None else c.training.epochs):
        order = rng.permutation(len(X_train))
        for b in range(steps_per_epoch):
            idx = order[b * batch_size:(b + 1) * batch_size]
            try:
                grads, loss = gradients(params, X_train[idx], y_train[idx])
            except FloatingPointError:
                return params
            if loss > DIVERGENCE_LOSS:
                return params
            optimizer_step(state, params, grads)
    return params
