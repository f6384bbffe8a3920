"""The inner loop: rounds of propose, lint, score, rank, promote.

Each round builds a prompt from the persona, the baseline config, and the
working context (prior journal records plus this run's own scored rounds,
rendered under the run's context strategy), asks the provider for
proposals, lints them, and scores the survivors with the persona's tool.
Every parsed proposal ends the run with a terminal disposition: scored,
lint-rejected, or tool-failed. Ranking is within a single score kind only.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from evoloop.configspace import Config, ConfigError, apply_diff, render_diff
from evoloop.journal import ContextStrategy, JournalRecord, render_context
from evoloop.proposer import (
    PersonaSpec,
    Proposal,
    ProviderError,
    build_prompt,
    lint_proposal,
    parse_proposals,
    request_proposals,
)
from .tooling import PersonaTooling, Score

DISPOSITIONS = ("scored", "lint-rejected", "tool-failed")


@dataclass(frozen=True)
class TrialManifest:
    """What gets handed to the outer loop for a live trial."""
    diff: list  # JSON form of the config delta
    source: str  # "agent" | "human"
    persona_kind: str
    offline_score: dict
    explanation: str = ""

    def to_json(self) -> dict:
        return {
            "diff": self.diff,
            "source": self.source,
            "persona_kind": self.persona_kind,
            "offline_score": self.offline_score,
            "explanation": self.explanation,
        }


@dataclass
class ScoredCandidate:
    proposal: Proposal
    round_index: int
    disposition: str  # scored | lint-rejected | tool-failed
    config: Config | None = None
    score: Score | None = None
    reason: str = ""

    def to_json(self) -> dict:
        return {
            "round": self.round_index,
            "disposition": self.disposition,
            "category": self.proposal.category,
            "explanation": self.proposal.explanation,
            "diff": self.proposal.diff.to_json(),
            "score": self.score.to_json() if self.score else None,
            "reason": self.reason,
        }


@dataclass
class InnerLoopRun:
    persona: PersonaSpec
    baseline: Config
    rounds: int = 7
    proposals_per_round: int = 10
    promotion_k: int = 1
    context_strategy: ContextStrategy = field(
        default_factory=lambda: ContextStrategy("full_sorted"))
    seed: int = 0
    artifact_dir: str | Path | None = None


@dataclass
class RankedCandidates:
    persona_kind: str
    score_kind: str
    baseline_score: Score
    baseline_margin: float
    candidates: list[ScoredCandidate]  # scored only, best first
    audit: list[ScoredCandidate]       # every parsed proposal
    aborted_rounds: list[int] = field(default_factory=list)

    @property
    def best(self) -> ScoredCandidate | None:
        return self.candidates[0] if self.candidates else None


def _rank(scored: list[ScoredCandidate]) -> list[ScoredCandidate]:
    return sorted(scored, key=lambda c: c.score.sort_key())


class _ArtifactWriter:
    def __init__(self, directory: str | Path | None):
        self.dir = Path(directory) if directory else None
        if self.dir:
            self.dir.mkdir(parents=True, exist_ok=True)

    def append(self, name: str, obj) -> None:
        if not self.dir:
            return
        with open(self.dir / name, "a") as fh:
            fh.write(json.dumps(obj) + "\n")

    def write(self, name: str, obj) -> None:
        if not self.dir:
            return
        with open(self.dir / name, "w") as fh:
            json.dump(obj, fh, indent=2)


def run_inner_loop(run: InnerLoopRun, provider,
                   tooling: PersonaTooling | None = None,
                   journal_records: list[JournalRecord] | None = None,
                   max_workers: int = 4) -> RankedCandidates:
    """Execute the full propose-lint-score loop and rank the outcomes.

    A provider error aborts the round it struck, not the run; tool errors
    mark the single candidate failed.
    """
    persona = run.persona
    tooling = tooling or PersonaTooling(persona.kind, seed=run.seed)
    artifacts = _ArtifactWriter(run.artifact_dir)

    baseline_score = tooling.score(run.baseline)
    baseline_margin = tooling.baseline_margin(run.baseline)

    prior = list(journal_records or [])
    working: list[JournalRecord] = []
    audit: list[ScoredCandidate] = []
    scored: list[ScoredCandidate] = []
    aborted_rounds: list[int] = []
    idea_counter = 0

    for round_index in range(run.rounds):
        context = render_context(prior + working, run.context_strategy,
                                 persona.kind)
        prompt = build_prompt(persona, run.baseline, context)
        artifacts.append("prompts.jsonl",
                         {"round": round_index, "prompt": prompt})
        round_seed = run.seed * 1009 + round_index
        try:
            raw = request_proposals(provider, prompt,
                                    run.proposals_per_round, round_seed)
        except ProviderError as exc:
            aborted_rounds.append(round_index)
            artifacts.append("responses.jsonl",
                             {"round": round_index, "error": str(exc)})
            continue
        artifacts.append("responses.jsonl",
                         {"round": round_index, "text": raw})
        try:
            proposals, rejections = parse_proposals(raw, persona.quota)
        except ConfigError as exc:
            aborted_rounds.append(round_index)
            artifacts.append("proposals.jsonl",
                             {"round": round_index, "error": str(exc)})
            continue
        for index, reason in rejections:
            artifacts.append("proposals.jsonl",
                             {"round": round_index, "index": index,
                              "rejected": reason})

        # lint sequentially (cheap), score survivors on the worker pool
        to_score: list[ScoredCandidate] = []
        for p in proposals:
            result = lint_proposal(p, run.baseline)
            if result.verdict == "rejected":
                c = ScoredCandidate(p, round_index, "lint-rejected",
                                    reason=result.reason)
                audit.append(c)
                artifacts.append("proposals.jsonl", c.to_json())
                continue
            p = result.proposal
            config = apply_diff(run.baseline, p.diff)
            to_score.append(ScoredCandidate(p, round_index, "scored",
                                            config=config))

        def score_one(c: ScoredCandidate) -> ScoredCandidate:
            try:
                c.score = tooling.score(c.config, seed=run.seed)
            except Exception as exc:  # noqa: BLE001 - tool fault isolation
                c.disposition = "tool-failed"
                c.reason = str(exc)
                kind = tooling.score_kind
                c.score = Score(kind, math.inf if kind == "proxy_loss"
                                else -math.inf, detail={"error": str(exc)})
            return c

        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            round_scored = list(pool.map(score_one, to_score))

        for c in round_scored:
            audit.append(c)
            scored.append(c)
            artifacts.append("scores.jsonl", c.to_json())
            if c.disposition != "scored":
                continue
            improved = (not c.score.failed
                        and c.score.improves(baseline_score, 0.0))
            idea_counter += 1
            working.append(JournalRecord(
                trial_id=f"idea-{idea_counter:04d}",
                diff_text=render_diff(c.proposal.diff),
                persona_kind=persona.kind,
                score_kind=c.score.kind,
                score_value=c.score.value,
                status="COMPLETED",
                cost_units=c.score.cost_units,
                timestamp=float(round_index),
                offline_improved=improved,
            ))

    kinds = {c.score.kind for c in scored if c.score is not None}
    assert kinds <= {tooling.score_kind}, "score-kind firewall breached"

    ranked = RankedCandidates(
        persona_kind=persona.kind,
        score_kind=tooling.score_kind,
        baseline_score=baseline_score,
        baseline_margin=baseline_margin,
        candidates=_rank([c for c in scored if c.disposition != "tool-failed"])
        + [c for c in scored if c.disposition == "tool-failed"],
        audit=audit,
        aborted_rounds=aborted_rounds,
    )
    artifacts.write("ranking.json", {
        "persona_kind": ranked.persona_kind,
        "score_kind": ranked.score_kind,
        "baseline_score": baseline_score.to_json(),
        "baseline_margin": baseline_margin,
        "aborted_rounds": aborted_rounds,
        "candidates": [c.to_json() for c in ranked.candidates],
    })
    return ranked


def promote_top_k(ranked: RankedCandidates, k: int) -> list[TrialManifest]:
    """Top-k candidates that beat the baseline by more than the seed-noise
    margin. May promote zero."""
    manifests = []
    for c in ranked.candidates:
        if len(manifests) >= k:
            break
        if c.disposition != "scored" or c.score.failed:
            continue
        if not c.score.improves(ranked.baseline_score, ranked.baseline_margin):
            continue
        manifests.append(TrialManifest(
            diff=c.proposal.diff.to_json(),
            source="agent",
            persona_kind=ranked.persona_kind,
            offline_score=c.score.to_json(),
            explanation=c.proposal.explanation,
        ))
    return manifests


def best_efficiency_candidate(ranked: RankedCandidates,
                              baseline_cost: float,
                              cost_ratio: float = 0.25
                              ) -> ScoredCandidate | None:
    """Cheapest-loss candidate whose cost is at most ``cost_ratio`` of the
    baseline and whose loss stays within the seed-noise margin of baseline."""
    bound = ranked.baseline_score.value + ranked.baseline_margin
    eligible = [c for c in ranked.candidates
                if c.disposition == "scored" and not c.score.failed
                and c.score.cost_units <= cost_ratio * baseline_cost
                and c.score.value <= bound]
    if not eligible:
        return None
    return min(eligible, key=lambda c: c.score.value)
