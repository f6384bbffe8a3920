"""Evaluating reward definitions over interaction logs.

Shared by the reward persona's scoring battery, the oracle grid search,
and the online simulator (which correlates the reward against the hidden
latent column).
"""

from __future__ import annotations

import numpy as np

from evoloop.configspace import RewardSpec
from .logs import LogTable


def _apply_transform(transform: str, values: np.ndarray) -> np.ndarray:
    x = np.where(np.isnan(values), 0.0, values)
    if transform == "identity":
        return x
    if transform == "log1p":
        return np.log1p(np.maximum(x, 0.0))
    if transform == "indicator":
        return (x > 0).astype(np.float64)
    raise ValueError(f"unknown transform: {transform}")


def reward_values(spec: RewardSpec, table: LogTable) -> np.ndarray:
    """Per-row reward: the weighted sum of transformed signal columns."""
    total = np.zeros(len(table))
    for term in spec.terms:
        col = table.columns[term.signal]
        total += term.weight * _apply_transform(term.transform, col)
    return total


def pearson(x: np.ndarray, y: np.ndarray) -> float:
    """Sample Pearson correlation (n-1 normalization), NaN rows excluded
    pairwise. Returns nan for constant inputs or n < 2."""
    mask = ~(np.isnan(x) | np.isnan(y))
    x, y = x[mask], y[mask]
    if len(x) < 2:
        return float("nan")
    xc = x - x.mean()
    yc = y - y.mean()
    sx = np.sqrt((xc * xc).sum() / (len(x) - 1))
    sy = np.sqrt((yc * yc).sum() / (len(y) - 1))
    if sx == 0.0 or sy == 0.0:
        return float("nan")
    return float((xc * yc).sum() / ((len(x) - 1) * sx * sy))


def latent_correlation(spec: RewardSpec, table: LogTable) -> float:
    """Oracle-only: correlation of the reward with latent satisfaction."""
    return pearson(reward_values(spec, table), table.latent_values())
