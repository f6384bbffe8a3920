"""Inner loop: scoring tools, ranking, audit trail, promotion."""

import json
import math

import numpy as np
import pytest

from evoloop.agents import (
    InnerLoopRun,
    PersonaTooling,
    RankedCandidates,
    Score,
    ScoredCandidate,
    best_efficiency_candidate,
    promote_top_k,
    reward_sql_expression,
    run_inner_loop,
)
from evoloop.configspace import (
    ArchSpec,
    Block,
    Config,
    Diff,
    DiffOp,
    OptimizerSpec,
    RewardSpec,
    RewardTerm,
    TrainingSpec,
)
from evoloop.proposer import (
    HeuristicProvider,
    Proposal,
    ScriptedProvider,
    default_persona,
)
from evoloop.simenv import SimSpec, gen_interaction_logs, pearson, reward_values


def baseline() -> Config:
    return Config(
        optimizer=OptimizerSpec(kind="adagrad", learning_rate=0.1,
                                epsilon=1e-8),
        architecture=ArchSpec((Block("dense", 8, "relu"),)),
        reward=RewardSpec((RewardTerm("click", 1.0),)),
        training=TrainingSpec(batch_size=32, epochs=2, seed=0),
    )


def small_logs():
    return gen_interaction_logs(SimSpec(n_rows=2000, seed=1))


def scripted(tmp_path, responses):
    path = tmp_path / "replay.jsonl"
    with open(path, "w") as fh:
        for text in responses:
            fh.write(json.dumps({"text": text}) + "\n")
    return ScriptedProvider(path)


def proposal_json(explanation, ops):
    return {"explanation": explanation, "diff": ops}


class TestScoring:

    def test_identity_scores_are_cached_and_deterministic(self):
        tooling = PersonaTooling("optimizer", seed=0, benchmark="linreg-easy")
        a = tooling.score(baseline())
        b = tooling.score(baseline())
        assert a is b
        assert a.kind == "proxy_loss"
        assert math.isfinite(a.value)

    def test_reward_score_matches_oracle_pearson(self):
        logs = small_logs()
        tooling = PersonaTooling("reward", seed=0, logs=logs)
        spec = RewardSpec((RewardTerm("click", 1.0),))
        cfg = Config(baseline().optimizer, baseline().architecture, spec,
                     baseline().training)
        score = tooling.score(cfg)
        survey = logs.columns["survey_score"]
        expected = abs(pearson(reward_values(spec, logs), survey))
        assert score.kind == "correlation"
        assert score.value == pytest.approx(expected, abs=1e-9)

    def test_reward_expression_renders_transforms(self):
        spec = RewardSpec((RewardTerm("click", 1.0),
                           RewardTerm("watch_time", 0.5, "log1p")))
        expr = reward_sql_expression(spec)
        assert "1.0 * click" in expr
        assert "0.5 * LOG1P(watch_time)" in expr

    def test_gated_architecture_beats_linear_on_gated_noise(self):
        tooling = PersonaTooling("architecture", seed=0)
        base = baseline()
        linear = Config(base.optimizer,
                        ArchSpec((Block("dense", 8, "linear"),)),
                        base.reward, base.training)
        gated = Config(base.optimizer, ArchSpec((Block("glu_gate", 4),)),
                       base.reward,
                       TrainingSpec(batch_size=32, epochs=4, seed=0))
        assert tooling.score(gated).value < tooling.score(linear).value

    def test_baseline_margin_is_seed_noise(self):
        tooling = PersonaTooling("optimizer", seed=0, benchmark="linreg-easy")
        margin = tooling.baseline_margin(baseline())
        values = [tooling.score(baseline(), seed=k).value for k in range(3)]
        expected = float(np.std(values))
        assert margin == pytest.approx(expected, rel=1e-12)

    def test_reward_margin_is_zero(self):
        tooling = PersonaTooling("reward", seed=0, logs=small_logs())
        assert tooling.baseline_margin(baseline()) == 0.0


class TestScoreOrdering:

    def test_losses_rank_ascending_with_diverged_last(self):
        scores = [Score("proxy_loss", 0.7), Score("proxy_loss", 0.5),
                  Score("proxy_loss", math.inf)]
        ordered = sorted(scores, key=Score.sort_key)
        assert [s.value for s in ordered][:2] == [0.5, 0.7]
        assert not math.isfinite(ordered[-1].value)

    def test_correlations_rank_descending(self):
        scores = [Score("correlation", 0.2), Score("correlation", 0.8)]
        ordered = sorted(scores, key=Score.sort_key)
        assert [s.value for s in ordered] == [0.8, 0.2]

    def test_cross_kind_comparison_rejected(self):
        with pytest.raises(ValueError):
            Score("proxy_loss", 0.5).improves(Score("correlation", 0.5), 0.0)


class TestRunInnerLoop:

    def run_with(self, tmp_path, responses, rounds=1, artifact_dir=None):
        provider = scripted(tmp_path, responses)
        tooling = PersonaTooling("optimizer", seed=0, benchmark="linreg-easy")
        run = InnerLoopRun(persona=default_persona("optimizer"),
                           baseline=baseline(), rounds=rounds,
                           proposals_per_round=3, seed=0,
                           artifact_dir=artifact_dir)
        return run_inner_loop(run, provider, tooling=tooling)

    def batch(self):
        return json.dumps([
            proposal_json("[explore] try sgd", [
                {"op": "set", "path": "optimizer.kind", "value": "sgd"},
                {"op": "set", "path": "optimizer.momentum", "value": 0.9},
                {"op": "remove", "path": "optimizer.epsilon"}]),
            proposal_json("[exploit] lr as string", [
                {"op": "set", "path": "optimizer.learning_rate",
                 "value": "0.05"}]),
            proposal_json("[innovate] bad path", [
                {"op": "set", "path": "optimizer.warmup", "value": 5}]),
        ])

    def test_audit_covers_every_parsed_proposal(self, tmp_path):
        ranked = self.run_with(tmp_path, [self.batch()])
        assert len(ranked.audit) == 3
        dispositions = sorted(c.disposition for c in ranked.audit)
        assert dispositions == ["lint-rejected", "scored", "scored"]

    def test_provider_exhaustion_aborts_round_not_run(self, tmp_path):
        ranked = self.run_with(tmp_path, [self.batch()], rounds=3)
        assert ranked.aborted_rounds == [1, 2]
        assert len(ranked.candidates) == 2

    def test_bit_reproducible_with_scripted_provider(self, tmp_path):
        a = self.run_with(tmp_path, [self.batch()])
        b = self.run_with(tmp_path, [self.batch()])
        assert [c.score.value for c in a.candidates] == \
               [c.score.value for c in b.candidates]

    def test_candidates_sorted_best_first(self, tmp_path):
        ranked = self.run_with(tmp_path, [self.batch()])
        values = [c.score.value for c in ranked.candidates]
        assert values == sorted(values)

    def test_artifact_directory_contents(self, tmp_path):
        art = tmp_path / "run"
        self.run_with(tmp_path, [self.batch()], artifact_dir=art)
        for name in ("prompts.jsonl", "responses.jsonl", "scores.jsonl",
                     "ranking.json"):
            assert (art / name).exists()
        ranking = json.loads((art / "ranking.json").read_text())
        assert ranking["score_kind"] == "proxy_loss"

    def test_score_kind_firewall_on_reward_run(self, tmp_path):
        provider = scripted(tmp_path, [json.dumps([
            proposal_json("[explore] add dwell", [
                {"op": "set", "path": "reward.weights.dwell_time",
                 "value": 0.5}])])])
        tooling = PersonaTooling("reward", seed=0, logs=small_logs())
        run = InnerLoopRun(persona=default_persona("reward"),
                           baseline=baseline(), rounds=1,
                           proposals_per_round=1, seed=0)
        ranked = run_inner_loop(run, provider, tooling=tooling)
        assert ranked.score_kind == "correlation"
        assert all(c.score.kind == "correlation" for c in ranked.candidates)

    def test_later_rounds_see_earlier_results(self, tmp_path):
        provider = HeuristicProvider()
        tooling = PersonaTooling("optimizer", seed=0, benchmark="linreg-easy")
        run = InnerLoopRun(persona=default_persona("optimizer"),
                           baseline=baseline(), rounds=2,
                           proposals_per_round=4, seed=0,
                           artifact_dir=tmp_path / "h")
        run_inner_loop(run, provider, tooling=tooling)
        prompts = [json.loads(line)["prompt"]
                   for line in open(tmp_path / "h" / "prompts.jsonl")]
        assert "no prior experiments" in prompts[0]
        assert "--- trial idea-0001" in prompts[1]


def make_ranked(values, kind="proxy_loss", baseline_value=0.5, margin=0.0):
    candidates = []
    for i, v in enumerate(values):
        p = Proposal(f"c{i}", Diff((DiffOp(
            "set", "optimizer.learning_rate", 0.01 * (i + 1)),)), "explore")
        candidates.append(ScoredCandidate(p, 0, "scored",
                                          score=Score(kind, v,
                                                      cost_units=100.0)))
    candidates.sort(key=lambda c: c.score.sort_key())
    return RankedCandidates(
        persona_kind="optimizer" if kind == "proxy_loss" else "reward",
        score_kind=kind,
        baseline_score=Score(kind, baseline_value, cost_units=400.0),
        baseline_margin=margin,
        candidates=candidates,
        audit=list(candidates),
    )


class TestPromotion:

    def test_all_worse_promotes_nothing(self):
        ranked = make_ranked([0.6, 0.9], baseline_value=0.5)
        assert promote_top_k(ranked, 2) == []

    def test_best_two_of_three_improving(self):
        ranked = make_ranked([0.1, 0.3, 0.2], baseline_value=0.5)
        manifests = promote_top_k(ranked, 2)
        assert len(manifests) == 2
        assert manifests[0].offline_score["value"] == 0.1
        assert manifests[1].offline_score["value"] == 0.2

    def test_within_margin_not_promoted(self):
        ranked = make_ranked([0.48], baseline_value=0.5, margin=0.05)
        assert promote_top_k(ranked, 1) == []
        ranked = make_ranked([0.40], baseline_value=0.5, margin=0.05)
        assert len(promote_top_k(ranked, 1)) == 1

    def test_manifest_carries_diff_and_provenance(self):
        ranked = make_ranked([0.1], baseline_value=0.5)
        m = promote_top_k(ranked, 1)[0]
        assert m.source == "agent"
        assert m.diff[0]["path"] == "optimizer.learning_rate"
        assert m.persona_kind == "optimizer"


class TestEfficiencySelection:

    def test_picks_cheapest_within_loss_margin(self):
        ranked = make_ranked([0.50, 0.52], baseline_value=0.5, margin=0.03)
        ranked.candidates[0].score = Score("proxy_loss", 0.50,
                                           cost_units=90.0)
        ranked.candidates[1].score = Score("proxy_loss", 0.52,
                                           cost_units=80.0)
        chosen = best_efficiency_candidate(ranked, baseline_cost=400.0)
        assert chosen is not None
        assert chosen.score.value == 0.50

    def test_none_when_cost_bound_unmet(self):
        ranked = make_ranked([0.4], baseline_value=0.5)
        ranked.candidates[0].score = Score("proxy_loss", 0.4,
                                           cost_units=300.0)
        assert best_efficiency_candidate(ranked, baseline_cost=400.0) is None
