"""Persona definitions: who the proposing agent is, what it optimizes,
which tool scores it, and how many proposals of each category it owes."""

from __future__ import annotations

from dataclasses import dataclass, field

PERSONA_KINDS = ("optimizer", "architecture", "reward")

# explore / exploit / innovate proposals per round of 10
DEFAULT_QUOTA = (3, 5, 2)


@dataclass(frozen=True)
class PersonaSpec:
    kind: str
    specialization: str
    task: str
    objective_metrics: tuple[str, ...] = ("Metric#1", "Metric#2")
    quota: tuple[int, int, int] = DEFAULT_QUOTA
    guardrails: tuple[tuple[str, str], ...] = (("Metric#3", "≤ +1%"),)
    steering: str = ""
    schema_excerpt: str = ""
    example_proposal: str = ""
    framing: bool = True  # expert-identity framing on/off (ablation knob)
    optimize_cost: bool = False  # include training cost in exploit policy

    @property
    def score_kind(self) -> str:
        return "correlation" if self.kind == "reward" else "proxy_loss"


_EXAMPLE_OPTIMIZER = (
    '[{"explanation": "[exploit] lower the learning rate slightly", '
    '"diff": [{"op": "set", "path": "optimizer.learning_rate", '
    '"value": 0.05}]}]'
)

_EXAMPLE_ARCH = (
    '[{"explanation": "[innovate] add a multiplicative gating block", '
    '"diff": [{"op": "set", "path": "architecture.blocks", '
    '"value": "glu_gate(8)"}]}]'
)

_EXAMPLE_REWARD = (
    '[{"explanation": "[explore] blend dwell time into the label", '
    '"diff": [{"op": "set", "path": "reward.weights.dwell_time", '
    '"value": 0.5}, {"op": "set", "path": "reward.transforms.dwell_time", '
    '"value": "log1p"}]}]'
)


def default_persona(kind: str, **overrides) -> PersonaSpec:
    if kind == "optimizer":
        spec = PersonaSpec(
            kind="optimizer",
            specialization="optimization algorithms and training dynamics",
            task="the optimizer class and its hyperparameters "
                 "(learning rate, momentum, decay, batch size, epochs)",
            example_proposal=_EXAMPLE_OPTIMIZER,
        )
    elif kind == "architecture":
        spec = PersonaSpec(
            kind="architecture",
            specialization="neural network topology design",
            task="the network architecture (blocks, widths, activations, "
                 "gating, normalization)",
            example_proposal=_EXAMPLE_ARCH,
        )
    elif kind == "reward":
        spec = PersonaSpec(
            kind="reward",
            specialization="reward engineering and user-signal analysis",
            task="the reward definition (which signals are combined, with "
                 "what weights and transforms)",
            example_proposal=_EXAMPLE_REWARD,
        )
    else:
        raise ValueError(f"unknown persona kind: {kind!r}")
    if overrides:
        from dataclasses import replace
        spec = replace(spec, **overrides)
    return spec
