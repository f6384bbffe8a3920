from .tooling import (
    PERSONA_BENCHMARKS,
    PersonaTooling,
    REWARD_BATTERY,
    Score,
    reward_sql_expression,
)
from .outer import (
    ALLOWED_TRANSITIONS,
    ModelRegistry,
    Orchestrator,
    OrchestratorError,
    OuterConfig,
    PHASES,
    TERMINAL_PHASES,
    TransitionError,
    Trial,
    manifest_from_json,
    recover_orchestrator,
)
from .inner import (
    InnerLoopRun,
    RankedCandidates,
    ScoredCandidate,
    TrialManifest,
    best_efficiency_candidate,
    promote_top_k,
    run_inner_loop,
)

__all__ = [
    "ALLOWED_TRANSITIONS",
    "ModelRegistry",
    "Orchestrator",
    "OrchestratorError",
    "OuterConfig",
    "PHASES",
    "TERMINAL_PHASES",
    "TransitionError",
    "Trial",
    "manifest_from_json",
    "recover_orchestrator",
    "PERSONA_BENCHMARKS",
    "PersonaTooling",
    "REWARD_BATTERY",
    "Score",
    "reward_sql_expression",
    "InnerLoopRun",
    "RankedCandidates",
    "ScoredCandidate",
    "TrialManifest",
    "best_efficiency_candidate",
    "promote_top_k",
    "run_inner_loop",
]
