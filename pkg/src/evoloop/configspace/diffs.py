"""Delta algebra over Configs.

Proposals are expressed as structured diffs against a baseline rather than
as full configs: deterministic application, precise lint errors, no fuzzy
text matching. A diff either applies cleanly and yields a schema-valid
Config, or fails atomically.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .schema import (
    Config,
    ConfigError,
    REQUIRED_PATHS,
    SCHEMA_PATHS,
    coerce_value,
    from_flat,
    to_flat,
)


@dataclass(frozen=True)
class DiffOp:
    op: str  # "set" | "remove"
    path: str
    value: Any = None  # set only


@dataclass(frozen=True)
class Diff:
    ops: tuple[DiffOp, ...]

    def __len__(self) -> int:
        return len(self.ops)

    def to_json(self) -> list[dict[str, Any]]:
        out = []
        for op in self.ops:
            d: dict[str, Any] = {"op": op.op, "path": op.path}
            if op.op == "set":
                d["value"] = op.value
            out.append(d)
        return out

    def to_json_text(self) -> str:
        return json.dumps(self.to_json())


def diff_from_json(data: Any) -> Diff:
    """Parse the wire form: a JSON array of {op, path[, value]} objects.
    Extra fields are rejected."""
    if not isinstance(data, list):
        raise ConfigError("diff must be a JSON array")
    ops = []
    for i, item in enumerate(data):
        if not isinstance(item, dict):
            raise ConfigError(f"diff op {i} must be an object")
        kind = item.get("op")
        if kind == "set":
            allowed = {"op", "path", "value"}
            if "value" not in item:
                raise ConfigError(f"diff op {i}: set requires a value")
        elif kind == "remove":
            allowed = {"op", "path"}
        else:
            raise ConfigError(f"diff op {i}: unknown op {kind!r}")
        extra = set(item) - allowed
        if extra:
            raise ConfigError(f"diff op {i}: unexpected fields {sorted(extra)}")
        path = item.get("path")
        if not isinstance(path, str):
            raise ConfigError(f"diff op {i}: missing path")
        ops.append(DiffOp(kind, path, item.get("value")))
    return Diff(tuple(ops))


def apply_diff(c: Config, d: Diff) -> Config:
    """Apply ops in order to a copy of ``c``. Any error (unknown path, type
    mismatch, schema violation of the result) leaves the input untouched."""
    flat = dict(to_flat(c))
    for op in d.ops:
        if op.path not in SCHEMA_PATHS:
            raise ConfigError(f"unknown path: {op.path}")
        if op.op == "set":
            flat[op.path] = coerce_value(op.path, op.value)
        elif op.op == "remove":
            if op.path in REQUIRED_PATHS:
                raise ConfigError(f"cannot remove required path: {op.path}")
            flat.pop(op.path, None)
        else:
            raise ConfigError(f"unknown op: {op.op!r}")
    return from_flat(flat)


def diff_configs(a: Config, b: Config) -> Diff:
    """Minimal diff such that apply_diff(a, diff_configs(a, b)) == b.
    Ops are emitted in lexicographic path order for determinism."""
    fa, fb = to_flat(a), to_flat(b)
    ops = []
    for path in sorted(set(fa) | set(fb)):
        if path not in fb:
            ops.append(DiffOp("remove", path))
        elif path not in fa or fa[path] != fb[path]:
            ops.append(DiffOp("set", path, fb[path]))
    return Diff(tuple(ops))


def render_diff(d: Diff) -> str:
    """Human-auditable one-op-per-line rendering for journal entries."""
    if not d.ops:
        return "(no change)"
    lines = []
    for op in d.ops:
        if op.op == "set":
            lines.append(f"set {op.path} = {op.value}")
        else:
            lines.append(f"remove {op.path}")
    return "\n".join(lines)
