"""Finite mutation grids shared by the heuristic proposal policy and the
exhaustive oracle, so "best found" and "grid optimum" range over the same
space.
"""

from __future__ import annotations

import itertools

from evoloop.configspace import (
    ArchSpec,
    Block,
    Config,
    OptimizerSpec,
    RewardSpec,
    RewardTerm,
)

LEARNING_RATES = (0.001, 0.003, 0.01, 0.03, 0.1, 0.3)
MOMENTA = (0.0, 0.9)
DECAYS = (0.9, 0.99)
EPSILON = 1e-8

# log1p keeps heavy-tailed duration signals from dominating a linear mix
REWARD_SIGNAL_TRANSFORMS = {
    "click": "identity",
    "watch_time": "log1p",
    "dwell_time": "log1p",
    "channel_affinity": "identity",
    "quality_score": "identity",
}
REWARD_WEIGHT_LEVELS = (0.0, 0.5, 1.0)

EFFICIENCY_EPOCHS = (1, 2, 4, 8)
EFFICIENCY_BATCHES = (16, 32, 64, 128)


def optimizer_grid() -> list[OptimizerSpec]:
    specs = []
    for lr in LEARNING_RATES:
        for mu in MOMENTA:
            specs.append(OptimizerSpec("sgd", lr, momentum=mu))
        specs.append(OptimizerSpec("adagrad", lr, epsilon=EPSILON))
        for mu in MOMENTA:
            for rho in DECAYS:
                specs.append(OptimizerSpec("rmsprop", lr, momentum=mu,
                                           decay=rho, epsilon=EPSILON))
        specs.append(OptimizerSpec("adam", lr, epsilon=EPSILON))
    return specs


GATE_FREE_ARCHS = tuple(
    [ArchSpec((Block("dense", u, act),))
     for u in (4, 8, 16) for act in ("relu", "tanh", "linear")]
    + [ArchSpec((Block("dense", u, "relu"), Block("dense", u, "relu")))
       for u in (4, 8)]
)

GATED_ARCHS = tuple(
    [ArchSpec((Block("glu_gate", u),)) for u in (2, 4, 8)]
    + [ArchSpec((Block("glu_gate", 4), Block("layer_norm"))),
       ArchSpec((Block("glu_gate", 8), Block("dense", 8, "gelu")))]
)


def architecture_grid() -> list[ArchSpec]:
    return list(GATE_FREE_ARCHS) + list(GATED_ARCHS)


def reward_grid() -> list[RewardSpec]:
    signals = list(REWARD_SIGNAL_TRANSFORMS)
    grid = []
    for weights in itertools.product(REWARD_WEIGHT_LEVELS, repeat=len(signals)):
        if all(w == 0.0 for w in weights):
            continue
        terms = tuple(
            RewardTerm(s, w, REWARD_SIGNAL_TRANSFORMS[s])
            for s, w in zip(signals, weights) if w != 0.0
        )
        grid.append(RewardSpec(terms))
    return grid


def efficiency_grid(baseline: Config) -> list[Config]:
    out = []
    for epochs in EFFICIENCY_EPOCHS:
        for batch in EFFICIENCY_BATCHES:
            t = baseline.training
            out.append(Config(baseline.optimizer, baseline.architecture,
                              baseline.reward,
                              type(t)(batch_size=batch, epochs=epochs,
                                      seed=t.seed)))
    return out
