"""The experiment journal: append-only history of trial outcomes and the
context renderings that feed back into proposal prompts.

Records are immutable and ordered by append time; the backing store is a
JSON Lines file so restarts lose nothing. Rendering supports the context
strategies the search ablation compares: the full history sorted by score,
the full history by timestamp, only the top k, or nothing at all.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field
from pathlib import Path

NO_HISTORY_MARKER = "no prior experiments"
DEFAULT_CHAR_BUDGET = 40_000


@dataclass(frozen=True)
class ContextStrategy:
    kind: str  # "full_sorted" | "full_by_timestamp" | "top_k" | "none"
    k: int = 0

    @classmethod
    def parse(cls, text: str) -> "ContextStrategy":
        if text in ("full_sorted", "full_by_timestamp", "none"):
            return cls(text)
        if text.startswith("top_"):
            return cls("top_k", int(text.split("_")[1]))
        raise ValueError(f"unknown context strategy: {text!r}")

    def __str__(self) -> str:
        return f"top_{self.k}" if self.kind == "top_k" else self.kind


@dataclass(frozen=True)
class JournalRecord:
    trial_id: str
    diff_text: str            # canonical delta rendering
    persona_kind: str         # optimizer | architecture | reward
    score_kind: str           # proxy_loss | correlation
    score_value: float
    status: str               # COMPLETED | ABORTED | FAILED
    cost_units: float = 0.0
    timestamp: float = 0.0    # orchestrator tick or wall time
    online_metrics: dict | None = None
    offline_improved: bool = False

    def to_json(self) -> dict:
        d = asdict(self)
        if d["score_value"] == float("inf"):
            d["score_value"] = "inf"
        return d

    @classmethod
    def from_json(cls, d: dict) -> "JournalRecord":
        d = dict(d)
        if d.get("score_value") == "inf":
            d["score_value"] = float("inf")
        return cls(**d)


class Journal:
    """Single-writer append-only journal; optionally file-backed."""

    def __init__(self, path: str | Path | None = None):
        self.path = Path(path) if path else None
        self._records: list[JournalRecord] = []
        if self.path and self.path.exists():
            with open(self.path) as fh:
                for line in fh:
                    if line.strip():
                        self._records.append(JournalRecord.from_json(json.loads(line)))

    def append(self, record: JournalRecord) -> None:
        if self.path:
            with open(self.path, "a") as fh:
                fh.write(json.dumps(record.to_json()) + "\n")
                fh.flush()
                os.fsync(fh.fileno())
        self._records.append(record)

    def read_all(self) -> list[JournalRecord]:
        return list(self._records)

    def __len__(self) -> int:
        return len(self._records)

    def render_context(self, strategy: ContextStrategy, persona_kind: str,
                       char_budget: int = DEFAULT_CHAR_BUDGET) -> str:
        return render_context(self._records, strategy, persona_kind, char_budget)


def _score_sort_key(r: JournalRecord) -> float:
    # ascending-by-loss / descending-by-correlation, diverged last
    if r.score_kind == "correlation":
        return -r.score_value
    return r.score_value


def format_record(r: JournalRecord) -> str:
    lines = [f"--- trial {r.trial_id} [{r.status}] ---"]
    lines.append("change:")
    for diff_line in r.diff_text.splitlines():
        lines.append(f"  {diff_line}")
    lines.append(f"offline {r.score_kind}: {r.score_value}")
    if r.online_metrics is not None:
        m = r.online_metrics
        lines.append(
            "online: metric1={metric1:+.5f} metric2={metric2:+.5f} "
            "metric3={metric3:+.5f} (halfwidth {confidence_halfwidth:.5f})".format(**{
                k: m.get(k, 0.0) for k in
                ("metric1", "metric2", "metric3", "confidence_halfwidth")})
        )
        if r.offline_improved and m.get("metric1", 0.0) < 0:
            lines.append("flag: MISALIGNED (offline gain, online regression)")
    lines.append(f"cost_units: {r.cost_units}")
    return "\n".join(lines)


def render_context(records: list[JournalRecord], strategy: ContextStrategy,
                   persona_kind: str,
                   char_budget: int = DEFAULT_CHAR_BUDGET) -> str:
    """Deterministic text block for prompt embedding. Truncation drops
    whole records from the tail and appends a notice."""
    if strategy.kind == "none":
        return NO_HISTORY_MARKER

    matching = [r for r in records if r.persona_kind == persona_kind]
    if not matching:
        return NO_HISTORY_MARKER

    if strategy.kind == "full_by_timestamp":
        ordered = sorted(matching, key=lambda r: r.timestamp)
    else:
        ordered = sorted(matching, key=_score_sort_key)
        if strategy.kind == "top_k":
            ordered = ordered[:strategy.k]

    blocks: list[str] = []
    used = 0
    kept = 0
    for r in ordered:
        text = format_record(r)
        if used + len(text) + 1 > char_budget:
            break  # drop this and everything after: a stable prefix
        blocks.append(text)
        used += len(text) + 1
        kept += 1
    dropped = len(ordered) - kept
    if dropped:
        blocks.append(f"[{dropped} record(s) truncated]")
    return "\n".join(blocks)
