"""Configuration space for the optimization loop.

A Config bundles everything a candidate model run needs: optimizer choice
and hyperparameters, network architecture, reward definition, and training
settings. Every leaf is addressable by a dot-separated path, and the whole
thing round-trips through a canonical sorted ``path = value`` text form so
that deltas are auditable and prompt-embeddable.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Any

OPTIMIZER_KINDS = ("sgd", "adagrad", "rmsprop", "adam")
ACTIVATIONS = ("relu", "sigmoid", "tanh", "swish", "gelu", "linear")
TRANSFORMS = ("identity", "log1p", "indicator")

# Observable signal columns of the interaction-log schema. The latent
# satisfaction column is deliberately not listed: rewards may only combine
# observables.
SIGNALS = (
    "click",
    "watch_time",
    "dwell_time",
    "survey_score",
    "channel_affinity",
    "quality_score",
)

# Optimizer fields required per kind; anything not listed must be absent.
_OPTIMIZER_FIELDS = {
    "sgd": ("learning_rate", "momentum"),
    "adagrad": ("learning_rate", "epsilon"),
    "rmsprop": ("learning_rate", "momentum", "decay", "epsilon"),
    "adam": ("learning_rate", "epsilon"),
}

# Architecture parameter budget. Validation uses a nominal input width;
# build time re-checks against the real one.
PARAM_CAP = 10**6
NOMINAL_INPUT_DIM = 32


class ConfigError(ValueError):
    """Schema violation, bad path, or unparseable config text."""


@dataclass(frozen=True)
class OptimizerSpec:
    kind: str
    learning_rate: float
    momentum: float | None = None
    decay: float | None = None
    epsilon: float | None = None


@dataclass(frozen=True)
class Block:
    kind: str  # dense | glu_gate | layer_norm
    units: int | None = None
    activation: str | None = None

    def render(self) -> str:
        if self.kind == "dense":
            return f"dense({self.units},{self.activation})"
        if self.kind == "glu_gate":
            return f"glu_gate({self.units})"
        return "layer_norm"


@dataclass(frozen=True)
class ArchSpec:
    blocks: tuple[Block, ...]

    def render(self) -> str:
        return "|".join(b.render() for b in self.blocks)


@dataclass(frozen=True)
class RewardTerm:
    signal: str
    weight: float
    transform: str = "identity"


@dataclass(frozen=True)
class RewardSpec:
    terms: tuple[RewardTerm, ...]

    def __post_init__(self):
        # Canonical term order (log-schema order) so value equality and
        # serialization are insensitive to construction order.
        ordered = tuple(sorted(self.terms, key=lambda t: SIGNALS.index(t.signal)))
        object.__setattr__(self, "terms", ordered)


@dataclass(frozen=True)
class TrainingSpec:
    batch_size: int
    epochs: int
    seed: int


@dataclass(frozen=True)
class Config:
    optimizer: OptimizerSpec
    architecture: ArchSpec
    reward: RewardSpec
    training: TrainingSpec


@dataclass
class ValidationReport:
    ok: bool
    violations: list[tuple[str, str]] = field(default_factory=list)  # (path, rule)


_BLOCK_RE = re.compile(
    r"^(?:dense\((\d+),(\w+)\)|glu_gate\((\d+)\)|layer_norm)$"
)


def parse_blocks(text: str) -> tuple[Block, ...]:
    """Parse the compact ``dense(16,relu)|glu_gate(8)|layer_norm`` form."""
    parts = [p.strip() for p in text.split("|") if p.strip()]
    if not parts:
        raise ConfigError("architecture.blocks must list at least one block")
    blocks = []
    for part in parts:
        m = _BLOCK_RE.match(part)
        if not m:
            raise ConfigError(f"unparseable architecture block: {part!r}")
        if part.startswith("dense"):
            units, act = int(m.group(1)), m.group(2)
            if act not in ACTIVATIONS:
                raise ConfigError(f"unknown activation: {act!r}")
            blocks.append(Block("dense", units, act))
        elif part.startswith("glu_gate"):
            blocks.append(Block("glu_gate", int(m.group(3))))
        else:
            blocks.append(Block("layer_norm"))
    return tuple(blocks)


def arch_param_count(arch: ArchSpec, input_dim: int) -> int:
    """Total trainable parameter count including the implicit width-1 head."""
    width = input_dim
    total = 0
    for b in arch.blocks:
        if b.kind == "dense":
            total += width * b.units + b.units
            width = b.units
        elif b.kind == "glu_gate":
            total += 2 * (width * b.units + b.units)
            width = b.units
        else:  # layer_norm: gain + shift
            total += 2 * width
    total += width + 1  # linear head
    return total


def _schema_paths() -> set[str]:
    paths = {
        "optimizer.kind",
        "optimizer.learning_rate",
        "optimizer.momentum",
        "optimizer.decay",
        "optimizer.epsilon",
        "architecture.blocks",
        "training.batch_size",
        "training.epochs",
        "training.seed",
    }
    for s in SIGNALS:
        paths.add(f"reward.weights.{s}")
        paths.add(f"reward.transforms.{s}")
    return paths


SCHEMA_PATHS = _schema_paths()

# Paths that always exist in a valid config; `remove` on these has no
# schema default to fall back to.
REQUIRED_PATHS = {
    "optimizer.kind",
    "optimizer.learning_rate",
    "architecture.blocks",
    "training.batch_size",
    "training.epochs",
    "training.seed",
}

_FLOAT_PATHS = {
    "optimizer.learning_rate",
    "optimizer.momentum",
    "optimizer.decay",
    "optimizer.epsilon",
} | {f"reward.weights.{s}" for s in SIGNALS}

_INT_PATHS = {"training.batch_size", "training.epochs", "training.seed"}


def coerce_value(path: str, value: Any) -> Any:
    """Coerce a raw literal to the path's schema type, or raise ConfigError."""
    if path not in SCHEMA_PATHS:
        raise ConfigError(f"unknown path: {path}")
    if path in _FLOAT_PATHS:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path} must be a number, got {value!r}")
        return float(value)
    if path in _INT_PATHS:
        if isinstance(value, bool) or not isinstance(value, int):
            if isinstance(value, float) and value.is_integer():
                return int(value)
            raise ConfigError(f"{path} must be an integer, got {value!r}")
        return int(value)
    if not isinstance(value, str):
        raise ConfigError(f"{path} must be a string, got {value!r}")
    return value


def to_flat(c: Config) -> dict[str, Any]:
    """Flatten a Config to its path map; defaults (zero weights, identity
    transforms, absent optimizer fields) are omitted."""
    flat: dict[str, Any] = {
        "optimizer.kind": c.optimizer.kind,
        "optimizer.learning_rate": c.optimizer.learning_rate,
        "architecture.blocks": c.architecture.render(),
        "training.batch_size": c.training.batch_size,
        "training.epochs": c.training.epochs,
        "training.seed": c.training.seed,
    }
    for name in ("momentum", "decay", "epsilon"):
        v = getattr(c.optimizer, name)
        if v is not None:
            flat[f"optimizer.{name}"] = v
    for term in c.reward.terms:
        if term.weight != 0.0:
            flat[f"reward.weights.{term.signal}"] = term.weight
            if term.transform != "identity":
                flat[f"reward.transforms.{term.signal}"] = term.transform
    return flat


def from_flat(flat: dict[str, Any]) -> Config:
    """Build a Config from a path map, enforcing the full schema."""
    for path in flat:
        if path not in SCHEMA_PATHS:
            raise ConfigError(f"unknown path: {path}")

    if "optimizer.kind" not in flat:
        raise ConfigError("missing required section: optimizer")
    kind = flat["optimizer.kind"]
    if kind not in OPTIMIZER_KINDS:
        raise ConfigError(f"unknown optimizer kind: {kind!r}")
    wanted = _OPTIMIZER_FIELDS[kind]
    opt_kwargs: dict[str, Any] = {"kind": kind}
    for name in ("learning_rate", "momentum", "decay", "epsilon"):
        path = f"optimizer.{name}"
        if name in wanted:
            if path not in flat:
                raise ConfigError(f"{kind} requires {path}")
            opt_kwargs[name] = coerce_value(path, flat[path])
        elif path in flat:
            raise ConfigError(f"{path} is not a {kind} field")
    optimizer = OptimizerSpec(**opt_kwargs)
    if optimizer.learning_rate <= 0:
        raise ConfigError("learning_rate must be positive")
    if optimizer.momentum is not None and not (0.0 <= optimizer.momentum < 1.0):
        raise ConfigError("momentum must be in [0, 1)")
    if optimizer.decay is not None and not (0.0 < optimizer.decay <= 1.0):
        raise ConfigError("decay must be in (0, 1]")
    if optimizer.epsilon is not None and optimizer.epsilon <= 0:
        raise ConfigError("epsilon must be positive")

    if "architecture.blocks" not in flat:
        raise ConfigError("missing required section: architecture")
    arch = ArchSpec(parse_blocks(str(flat["architecture.blocks"])))
    n_params = arch_param_count(arch, NOMINAL_INPUT_DIM)
    if n_params > PARAM_CAP:
        raise ConfigError(
            f"parameter budget exceeded: {n_params} > {PARAM_CAP}"
        )

    terms = []
    for s in SIGNALS:
        wpath = f"reward.weights.{s}"
        tpath = f"reward.transforms.{s}"
        if wpath in flat:
            w = coerce_value(wpath, flat[wpath])
            transform = flat.get(tpath, "identity")
            if transform not in TRANSFORMS:
                raise ConfigError(f"unknown transform: {transform!r}")
            if w != 0.0:
                terms.append(RewardTerm(s, w, transform))
        elif tpath in flat:
            raise ConfigError(f"{tpath} set without a weight for {s}")
    if not terms:
        raise ConfigError("reward must have at least one nonzero weight")
    reward = RewardSpec(tuple(terms))

    for path in ("training.batch_size", "training.epochs", "training.seed"):
        if path not in flat:
            raise ConfigError(f"missing required field: {path}")
    batch_size = coerce_value("training.batch_size", flat["training.batch_size"])
    epochs = coerce_value("training.epochs", flat["training.epochs"])
    seed = coerce_value("training.seed", flat["training.seed"])
    if batch_size <= 0:
        raise ConfigError("batch_size must be positive")
    if epochs <= 0:
        raise ConfigError("epochs must be positive")
    training = TrainingSpec(batch_size, epochs, seed)

    return Config(optimizer, arch, reward, training)


def _render_value(path: str, value: Any) -> str:
    if path in _FLOAT_PATHS:
        return repr(float(value))
    return str(value)


def serialize_config(c: Config) -> str:
    """Canonical text: ``path = value`` lines, sorted lexicographically by
    path, floats in shortest round-trip form."""
    flat = to_flat(c)
    lines = [f"{p} = {_render_value(p, flat[p])}" for p in sorted(flat)]
    return "\n".join(lines) + "\n"


def _parse_literal(path: str, raw: str) -> Any:
    raw = raw.strip()
    if path in _INT_PATHS:
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"{path} must be an integer, got {raw!r}") from None
    if path in _FLOAT_PATHS:
        try:
            return float(raw)
        except ValueError:
            raise ConfigError(f"{path} must be a number, got {raw!r}") from None
    return raw


def parse_config(text: str) -> Config:
    """Parse canonical config text. Errors name the offending line and path."""
    flat: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'path = value'")
        path, _, raw = line.partition("=")
        path = path.strip()
        if path not in SCHEMA_PATHS:
            raise ConfigError(f"line {lineno}: unknown path: {path}")
        if path in flat:
            raise ConfigError(f"line {lineno}: duplicate path: {path}")
        flat[path] = _parse_literal(path, raw)
    return from_flat(flat)


def validate_config(c: Config) -> ValidationReport:
    """Re-run the full schema check on an existing Config value."""
    violations: list[tuple[str, str]] = []
    try:
        from_flat(to_flat(c))
    except ConfigError as exc:
        msg = str(exc)
        if "parameter budget" in msg:
            violations.append(("architecture.blocks", "parameter budget"))
        else:
            violations.append(("", msg))
    return ValidationReport(ok=not violations, violations=violations)
