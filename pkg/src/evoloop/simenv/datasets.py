"""Synthetic supervised benchmarks.

Three named datasets back the search experiments:

- ``linreg-easy``: noise-free y = 2x + 1; any linear model fits exactly.
- ``illcond-100``: linear target over features whose sample covariance has
  condition number exactly 100 (generated by empirical whitening, then
  rescaling), so optimizers with per-coordinate adaptation separate from
  plain accumulation under a tight step budget.
- ``gated-noise``: multiplicative target over features 0-4 (signal times a
  sigmoid gate) plus correlated distractor features 5-19; a multiplicative
  gating block can represent the target exactly, a purely additive net
  cannot.
"""

from __future__ import annotations

import numpy as np

from evoloop.trainer import Dataset

DATASET_NAMES = ("linreg-easy", "illcond-100", "gated-noise")

ILLCOND_DIM = 8
ILLCOND_COND = 100.0
GATED_DIM = 20
GATED_LABEL_NOISE = 0.1


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _gen_linreg_easy(seed: int) -> Dataset:
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(1000, 1))
    y = 2.0 * x[:, 0] + 1.0
    return Dataset("linreg-easy", x, y)


def _gen_illcond(seed: int) -> Dataset:
    n, d = 5000, ILLCOND_DIM
    rng = np.random.default_rng(seed)
    z = rng.normal(size=(n, d))
    z -= z.mean(axis=0)
    cov = (z.T @ z) / (n - 1)
    evals, evecs = np.linalg.eigh(cov)
    # whiten exactly, then impose eigenvalues geometric from 1 to 100
    white = z @ evecs @ np.diag(evals**-0.5) @ evecs.T
    target_evals = np.geomspace(1.0, ILLCOND_COND, d)
    x = white * np.sqrt(target_evals)
    w = rng.normal(size=d)
    w /= np.linalg.norm(w)
    y = x @ w
    return Dataset("illcond-100", x, y)


def _gen_gated_noise(seed: int) -> Dataset:
    n, d = 5000, GATED_DIM
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, d))
    # distractors 5..19 are noisy copies of the signal features: marginally
    # informative-looking, conditionally useless
    rho = 0.6
    for j in range(5, d):
        x[:, j] = rho * x[:, j % 5] + np.sqrt(1 - rho**2) * x[:, j]
    w = np.array([1.0, -0.8, 0.6, 0.0, 0.0])
    v = np.array([0.0, 0.0, 0.0, 1.2, -1.0])
    signal = x[:, :5] @ w
    gate = _sigmoid(2.0 * (x[:, :5] @ v))
    y = signal * gate + rng.normal(scale=GATED_LABEL_NOISE, size=n)
    return Dataset("gated-noise", x, y)


_GENERATORS = {
    "linreg-easy": _gen_linreg_easy,
    "illcond-100": _gen_illcond,
    "gated-noise": _gen_gated_noise,
}


def gen_supervised_dataset(name: str, seed: int = 0) -> Dataset:
    """Deterministic per (name, seed)."""
    if name not in _GENERATORS:
        raise KeyError(f"unknown dataset: {name!r}")
    return _GENERATORS[name](seed)


class DatasetRegistry:
    """Named datasets available to tools; generation is lazy and cached."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._cache: dict[str, Dataset] = {}

    def get(self, name: str) -> Dataset:
        if name not in self._cache:
            self._cache[name] = gen_supervised_dataset(name, self.seed)
        return self._cache[name]

    def names(self):
        return DATASET_NAMES
