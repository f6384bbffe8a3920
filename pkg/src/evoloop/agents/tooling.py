"""Persona tooling: the scoring instruments behind the inner loop.

Optimizer and architecture candidates are scored by training runs on the
persona's benchmark dataset (lower held-out loss is better). Reward
candidates are scored by a fixed battery of correlation queries over the
interaction logs, issued through the same query tool the agent would use,
and aggregated to a scalar (higher is better). The two score kinds are
never compared with each other.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from evoloop.configspace import Config, RewardSpec, to_flat
from evoloop.queryengine import QueryError, QueryTool
from evoloop.simenv import DatasetRegistry, LogTable, SimSpec, gen_interaction_logs
from evoloop.trainer import compute_loss

# Benchmark dataset per persona kind; reward scoring runs on logs instead.
PERSONA_BENCHMARKS = {
    "optimizer": "illcond-100",
    "architecture": "gated-noise",
    "reward": "logs",
}

# Correlation battery: (observable signal, weight). The survey score is a
# sparse but unbiased readout of satisfaction, so it anchors the battery.
REWARD_BATTERY = (("survey_score", 1.0),)

_TRANSFORM_SQL = {
    "identity": "{col}",
    "log1p": "LOG1P({col})",
    "indicator": "IF({col} > 0, 1, 0)",
}


@dataclass(frozen=True)
class Score:
    kind: str  # "proxy_loss" | "correlation"
    value: float
    cost_units: float = 0.0
    detail: dict = field(default_factory=dict)

    @property
    def failed(self) -> bool:
        return not math.isfinite(self.value)

    def sort_key(self) -> float:
        """Ascending sort ranks better scores first for either kind."""
        if self.kind == "correlation":
            return -self.value if math.isfinite(self.value) else math.inf
        return self.value

    def improves(self, baseline: "Score", margin: float) -> bool:
        if self.kind != baseline.kind:
            raise ValueError("scores of different kinds are incomparable")
        if self.failed:
            return False
        if self.kind == "correlation":
            return self.value > baseline.value + margin
        return self.value < baseline.value - margin

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "value": self.value if math.isfinite(self.value) else "inf",
            "cost_units": self.cost_units,
            "detail": self.detail,
        }


def reward_sql_expression(spec: RewardSpec) -> str:
    parts = []
    for term in spec.terms:
        col = _TRANSFORM_SQL[term.transform].format(col=term.signal)
        parts.append(f"{term.weight!r} * {col}")
    return " + ".join(parts) if parts else "0"


class PersonaTooling:
    """Scoring tools for one persona, with a deterministic score cache."""

    def __init__(self, persona_kind: str, seed: int = 0,
                 registry: DatasetRegistry | None = None,
                 logs: LogTable | None = None,
                 benchmark: str | None = None):
        if persona_kind not in PERSONA_BENCHMARKS:
            raise ValueError(f"unknown persona kind: {persona_kind!r}")
        self.persona_kind = persona_kind
        self.seed = seed
        self.benchmark = benchmark or PERSONA_BENCHMARKS[persona_kind]
        self.registry = registry or DatasetRegistry(seed)
        if persona_kind == "reward":
            self.logs = logs if logs is not None else gen_interaction_logs(
                SimSpec(seed=seed))
            self.query_tool = QueryTool()
            self.query_tool.register("logs", self.logs)
        else:
            self.logs = logs
            self.query_tool = None
        self._cache: dict[tuple, Score] = {}

    @property
    def score_kind(self) -> str:
        return "correlation" if self.persona_kind == "reward" else "proxy_loss"

    def score(self, config: Config, seed: int | None = None) -> Score:
        seed = self.seed if seed is None else seed
        key = (tuple(sorted(to_flat(config).items())), seed)
        if key not in self._cache:
            if self.persona_kind == "reward":
                self._cache[key] = self._score_reward(config)
            else:
                self._cache[key] = self._score_training(config, seed)
        return self._cache[key]

    def _score_training(self, config: Config, seed: int) -> Score:
        dataset = self.registry.get(self.benchmark)
        result = compute_loss(config, dataset, seed)
        return Score(
            kind="proxy_loss",
            value=result.final_validation_loss,
            cost_units=result.cost_units,
            detail={"status": result.status, "wall_steps": result.wall_steps},
        )

    def _score_reward(self, config: Config) -> Score:
        expr = reward_sql_expression(config.reward)
        correlations = {}
        total, weight_sum = 0.0, 0.0
        for signal, weight in REWARD_BATTERY:
            query = f"SELECT CORR({expr}, {signal}) FROM logs"
            result = self.query_tool.run_sql_query(query)
            corr = result.rows[0][0]
            if corr is None or not math.isfinite(corr):
                return Score("correlation", -math.inf,
                             detail={"error": f"undefined CORR vs {signal}"})
            correlations[signal] = corr
            total += weight * abs(corr)
            weight_sum += weight
        return Score(
            kind="correlation",
            value=total / weight_sum,
            cost_units=0.0,
            detail={"correlations": correlations},
        )

    def baseline_margin(self, baseline: Config, n_seeds: int = 3) -> float:
        """Seed-noise yardstick: population std of the baseline score over
        ``n_seeds`` training seeds. Reward scores are seed-free, so their
        margin is zero."""
        if self.persona_kind == "reward":
            return 0.0
        values = []
        for k in range(n_seeds):
            s = self.score(baseline, seed=self.seed + k)
            if not s.failed:
                values.append(s.value)
        if len(values) < 2:
            return 0.0
        mean = sum(values) / len(values)
        return math.sqrt(sum((v - mean) ** 2 for v in values) / len(values))

    def run_sql_query(self, text: str, table_name: str = "logs"):
        if self.query_tool is None:
            raise QueryError("query tool unavailable for this persona")
        return self.query_tool.run_sql_query(text, table_name)
