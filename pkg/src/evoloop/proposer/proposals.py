"""Proposal parsing and linting.

Raw provider output is prose-tolerant: the first JSON array found in the
text is taken as the proposal list, and malformed elements are rejected
individually so one bad proposal never sinks a batch. The linter applies
each diff to the baseline in a sandbox, coercing a small class of fixable
mistakes (numeric strings, known path aliases) before giving a verdict.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, replace

from evoloop.configspace import (
    Config,
    ConfigError,
    Diff,
    DiffOp,
    apply_diff,
    diff_from_json,
    validate_config,
)

CATEGORIES = ("explore", "exploit", "innovate")

PATH_ALIASES = {
    "optimizer.lr": "optimizer.learning_rate",
    "optimizer.eps": "optimizer.epsilon",
    "training.batch": "training.batch_size",
    "training.num_epochs": "training.epochs",
}

_TAG_RE = re.compile(r"\[(explore|exploit|innovate)\]", re.IGNORECASE)


@dataclass(frozen=True)
class Proposal:
    explanation: str
    diff: Diff
    category: str
    provenance: str = "llm"  # llm | scripted | heuristic | human


@dataclass
class LintResult:
    verdict: str  # clean | fixed | rejected
    proposal: Proposal | None = None
    reason: str = ""


def _find_first_json_array(text: str):
    decoder = json.JSONDecoder()
    for i, ch in enumerate(text):
        if ch != "[":
            continue
        try:
            obj, _ = decoder.raw_decode(text[i:])
        except json.JSONDecodeError:
            continue
        if isinstance(obj, list):
            return obj
    return None


def _default_categories(quota: tuple[int, int, int], total: int) -> list[str]:
    x, y, z = quota
    order = ["explore"] * x + ["exploit"] * y + ["innovate"] * z
    while len(order) < total:
        order.append("exploit")
    return order[:total]


def parse_proposals(raw: str, quota: tuple[int, int, int] = (3, 5, 2),
                    provenance: str = "llm"):
    """Returns (proposals, rejections); rejections are (index, reason)."""
    array = _find_first_json_array(raw)
    if array is None:
        raise ConfigError("no JSON array found in provider output")
    proposals: list[Proposal] = []
    rejections: list[tuple[int, str]] = []
    defaults = _default_categories(quota, len(array))
    for i, item in enumerate(array):
        if not isinstance(item, dict):
            rejections.append((i, "proposal must be an object"))
            continue
        if "explanation" not in item:
            rejections.append((i, "missing field: explanation"))
            continue
        if "diff" not in item:
            rejections.append((i, "missing field: diff"))
            continue
        try:
            diff = diff_from_json(item["diff"])
        except ConfigError as exc:
            rejections.append((i, f"bad diff: {exc}"))
            continue
        if len(diff) == 0:
            rejections.append((i, "empty diff"))
            continue
        explanation = str(item["explanation"])
        tag = _TAG_RE.search(explanation)
        if tag:
            category = tag.group(1).lower()
        elif item.get("category") in CATEGORIES:
            category = item["category"]
        else:
            category = defaults[i]
        proposals.append(Proposal(explanation, diff, category, provenance))
    return proposals, rejections


def _coerce_op(op: DiffOp) -> tuple[DiffOp, bool]:
    fixed = False
    path = PATH_ALIASES.get(op.path, op.path)
    if path != op.path:
        fixed = True
    value = op.value
    if op.op == "set" and isinstance(value, str):
        try:
            value = int(value)
            fixed = True
        except ValueError:
            try:
                value = float(value)
                fixed = True
            except ValueError:
                value = op.value
    if fixed:
        return DiffOp(op.op, path, value), True
    return op, False


def lint_proposal(p: Proposal, baseline: Config) -> LintResult:
    """Sandbox-apply the diff and schema-check the result; limited
    auto-fixes, otherwise a rejection naming the cause."""
    any_fixed = False

    def attempt(diff: Diff):
        candidate = apply_diff(baseline, diff)
        report = validate_config(candidate)
        if not report.ok:
            raise ConfigError("; ".join(rule for _, rule in report.violations))

    try:
        attempt(p.diff)
        return LintResult("clean", p)
    except ConfigError as first_error:
        coerced_ops = []
        for op in p.diff.ops:
            new_op, was_fixed = _coerce_op(op)
            any_fixed = any_fixed or was_fixed
            coerced_ops.append(new_op)
        if not any_fixed:
            return LintResult("rejected", None, str(first_error))
        fixed_diff = Diff(tuple(coerced_ops))
        try:
            attempt(fixed_diff)
        except ConfigError as exc:
            return LintResult("rejected", None, str(exc))
        return LintResult("fixed", replace(p, diff=fixed_diff))
