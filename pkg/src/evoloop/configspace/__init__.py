from .schema import (
    ACTIVATIONS,
    ArchSpec,
    Block,
    Config,
    ConfigError,
    OPTIMIZER_KINDS,
    OptimizerSpec,
    PARAM_CAP,
    RewardSpec,
    RewardTerm,
    SIGNALS,
    TRANSFORMS,
    TrainingSpec,
    ValidationReport,
    arch_param_count,
    parse_blocks,
    parse_config,
    serialize_config,
    to_flat,
    from_flat,
    validate_config,
)
from .diffs import Diff, DiffOp, apply_diff, diff_configs, diff_from_json, render_diff

__all__ = [
    "ACTIVATIONS",
    "ArchSpec",
    "Block",
    "Config",
    "ConfigError",
    "OPTIMIZER_KINDS",
    "OptimizerSpec",
    "PARAM_CAP",
    "RewardSpec",
    "RewardTerm",
    "SIGNALS",
    "TRANSFORMS",
    "TrainingSpec",
    "ValidationReport",
    "arch_param_count",
    "parse_blocks",
    "parse_config",
    "serialize_config",
    "to_flat",
    "from_flat",
    "validate_config",
    "Diff",
    "DiffOp",
    "apply_diff",
    "diff_configs",
    "diff_from_json",
    "render_diff",
]
