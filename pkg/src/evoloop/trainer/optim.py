"""First-order update rules: sgd (with momentum), adagrad, rmsprop, adam.

State is functional in spirit: ``step`` mutates its own slot arrays but the
model parameter dicts it updates belong to the caller. Adam uses the
standard bias-corrected first/second moments with beta1=0.9, beta2=0.999.
"""

from __future__ import annotations

import numpy as np

from evoloop.configspace import OptimizerSpec

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999


class OptimizerState:
    """Per-parameter slot variables for one model's training run."""

    def __init__(self, spec: OptimizerSpec):
        self.spec = spec
        self.t = 0
        self._slots: dict[tuple, dict[str, np.ndarray]] = {}

    def _slot(self, key, template: np.ndarray) -> dict[str, np.ndarray]:
        if key not in self._slots:
            self._slots[key] = {}
        slot = self._slots[key]
        for name in self._slot_names():
            if name not in slot:
                slot[name] = np.zeros_like(template)
        return slot

    def _slot_names(self):
        kind = self.spec.kind
        if kind == "sgd":
            return ("v",)
        if kind == "adagrad":
            return ("G",)
        if kind == "rmsprop":
            return ("G", "v")
        return ("m", "v")  # adam

    def step(self, named_params, named_grads) -> None:
        """Apply one update. ``named_params``/``named_grads`` are parallel
        iterables of (key, array); parameter arrays are updated in place."""
        spec = self.spec
        self.t += 1
        for (key, theta), (_, g) in zip(named_params, named_grads):
            slot = self._slot(key, theta)
            if spec.kind == "sgd":
                v = slot["v"]
                v *= spec.momentum
                v += g
                theta -= spec.learning_rate * v
            elif spec.kind == "adagrad":
                G = slot["G"]
                G += g * g
                theta -= spec.learning_rate * g / (np.sqrt(G) + spec.epsilon)
            elif spec.kind == "rmsprop":
                G, v = slot["G"], slot["v"]
                G *= spec.decay
                G += (1.0 - spec.decay) * g * g
                v *= spec.momentum
                v += g / (np.sqrt(G) + spec.epsilon)
                theta -= spec.learning_rate * v
            else:  # adam
                m, v = slot["m"], slot["v"]
                m *= ADAM_BETA1
                m += (1.0 - ADAM_BETA1) * g
                v *= ADAM_BETA2
                v += (1.0 - ADAM_BETA2) * g * g
                m_hat = m / (1.0 - ADAM_BETA1**self.t)
                v_hat = v / (1.0 - ADAM_BETA2**self.t)
                theta -= spec.learning_rate * m_hat / (np.sqrt(v_hat) + spec.epsilon)


def optimizer_step(state: OptimizerState, params: list[dict], grads: list[dict]) -> None:
    """One update over a full model parameter tree."""
    named_p = []
    named_g = []
    for i, layer in enumerate(params):
        for key in sorted(layer):
            if isinstance(layer[key], np.ndarray):
                named_p.append(((i, key), layer[key]))
                named_g.append(((i, key), grads[i][key]))
    state.step(named_p, named_g)
