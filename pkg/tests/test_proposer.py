"""Proposal pipeline: prompt assembly, provider behavior, parsing, lint."""

import json

import pytest

from evoloop.configspace import (
    ArchSpec,
    Block,
    Config,
    ConfigError,
    OptimizerSpec,
    RewardSpec,
    RewardTerm,
    TrainingSpec,
    apply_diff,
    diff_configs,
    render_diff,
    serialize_config,
    to_flat,
)
from evoloop.journal import ContextStrategy, JournalRecord, render_context
from evoloop.proposer import (
    HeuristicProvider,
    HttpLLMProvider,
    ProviderConfig,
    ProviderError,
    ScriptedProvider,
    build_prompt,
    default_persona,
    lint_proposal,
    make_provider,
    parse_proposals,
    request_proposals,
)
from evoloop.proposer.proposals import Proposal
from evoloop.configspace import Diff, DiffOp


def baseline() -> Config:
    return Config(
        optimizer=OptimizerSpec(kind="adagrad", learning_rate=0.1,
                                epsilon=1e-8),
        architecture=ArchSpec((Block("dense", 8, "relu"),)),
        reward=RewardSpec((RewardTerm("click", 1.0),)),
        training=TrainingSpec(batch_size=32, epochs=4, seed=0),
    )


def record_for(base: Config, candidate: Config, trial_id: str,
               score: float, kind: str = "proxy_loss",
               persona: str = "optimizer") -> JournalRecord:
    return JournalRecord(
        trial_id=trial_id,
        diff_text=render_diff(diff_configs(base, candidate)),
        persona_kind=persona,
        score_kind=kind,
        score_value=score,
        status="COMPLETED",
        cost_units=100.0,
        timestamp=float(trial_id.strip("t")),
    )


class TestPromptAssembly:

    def test_sections_in_order(self):
        p = build_prompt(default_persona("optimizer"), baseline(), "")
        order = ["# PERSONA", "# TASK", "# GUARDRAILS", "# CONTEXT",
                 "# OUTPUT FORMAT", "# EXAMPLE PROPOSAL"]
        positions = [p.index(h) for h in order]
        assert positions == sorted(positions)

    def test_guardrail_line(self):
        p = build_prompt(default_persona("optimizer"), baseline(), "")
        assert "- Keep Metric#3 ≤ +1%" in p

    def test_empty_history_marker(self):
        p = build_prompt(default_persona("reward"), baseline(), "")
        assert "no prior experiments" in p

    def test_baseline_embedded_canonically(self):
        p = build_prompt(default_persona("architecture"), baseline(), "")
        assert serialize_config(baseline()).rstrip() in p

    def test_steering_section_omitted_when_empty(self):
        quiet = build_prompt(default_persona("optimizer"), baseline(), "")
        assert "# SPECIAL INSTRUCTIONS" not in quiet
        loud = build_prompt(
            default_persona("optimizer", steering="prefer small steps"),
            baseline(), "")
        assert "# SPECIAL INSTRUCTIONS" in loud
        assert "prefer small steps" in loud

    def test_quota_stated(self):
        p = build_prompt(default_persona("optimizer", quota=(2, 2, 1)),
                         baseline(), "")
        assert "make 2, 2, and 1 proposals" in p

    def test_framing_toggle(self):
        framed = build_prompt(default_persona("optimizer"), baseline(), "")
        plain = build_prompt(default_persona("optimizer", framing=False),
                             baseline(), "")
        assert "brilliant" in framed and "brilliant" not in plain


class TestParseProposals:

    def test_plain_array(self):
        raw = ('[{"explanation": "[explore] try sgd", "diff": '
               '[{"op": "set", "path": "optimizer.kind", "value": "sgd"}]}]')
        proposals, rejections = parse_proposals(raw)
        assert len(proposals) == 1 and not rejections
        assert proposals[0].category == "explore"

    def test_extracts_from_fenced_prose(self):
        raw = ("Sure! Let me think step by step about [exploit] moves.\n"
               "```json\n"
               '[{"explanation": "[exploit] smaller lr", "diff": '
               '[{"op": "set", "path": "optimizer.learning_rate", '
               '"value": 0.05}]}]\n'
               "```\nHope this helps.")
        proposals, rejections = parse_proposals(raw)
        assert len(proposals) == 1 and not rejections
        assert proposals[0].category == "exploit"

    def test_element_level_rejection(self):
        raw = json.dumps([
            {"explanation": "[explore] ok", "diff": [
                {"op": "set", "path": "optimizer.kind", "value": "adam"}]},
            {"explanation": "missing diff"},
            {"explanation": "empty", "diff": []},
            {"explanation": "bad op", "diff": [
                {"op": "replace", "path": "optimizer.kind", "value": "sgd"}]},
        ])
        proposals, rejections = parse_proposals(raw)
        assert len(proposals) == 1
        assert sorted(i for i, _ in rejections) == [1, 2, 3]

    def test_no_array_raises(self):
        with pytest.raises(ConfigError):
            parse_proposals("I have no proposals today.")

    def test_default_category_follows_quota_order(self):
        items = [{"explanation": f"untagged {i}", "diff": [
            {"op": "set", "path": "training.seed", "value": i}]}
            for i in range(5)]
        proposals, _ = parse_proposals(json.dumps(items), quota=(2, 2, 1))
        assert [p.category for p in proposals] == [
            "explore", "explore", "exploit", "exploit", "innovate"]


class TestLint:

    def test_clean(self):
        p = Proposal("[exploit] lr", Diff((DiffOp(
            "set", "optimizer.learning_rate", 0.05),)), "exploit")
        result = lint_proposal(p, baseline())
        assert result.verdict == "clean"

    def test_numeric_string_fixed(self):
        p = Proposal("[exploit] lr", Diff((DiffOp(
            "set", "optimizer.learning_rate", "0.05"),)), "exploit")
        result = lint_proposal(p, baseline())
        assert result.verdict == "fixed"
        fixed = apply_diff(baseline(), result.proposal.diff)
        assert fixed.optimizer.learning_rate == 0.05

    def test_path_alias_fixed(self):
        p = Proposal("[exploit] lr", Diff((DiffOp(
            "set", "optimizer.lr", 0.05),)), "exploit")
        result = lint_proposal(p, baseline())
        assert result.verdict == "fixed"
        assert result.proposal.diff.ops[0].path == "optimizer.learning_rate"

    def test_unknown_path_rejected(self):
        p = Proposal("[explore] nope", Diff((DiffOp(
            "set", "optimizer.warmup_steps", 100),)), "explore")
        result = lint_proposal(p, baseline())
        assert result.verdict == "rejected"
        assert "warmup_steps" in result.reason

    def test_schema_violation_rejected(self):
        p = Proposal("[innovate] huge", Diff((DiffOp(
            "set", "architecture.blocks",
            "dense(2000,relu)|dense(2000,relu)"),)), "innovate")
        result = lint_proposal(p, baseline())
        assert result.verdict == "rejected"

    def test_rejected_keeps_baseline_valid(self):
        base = baseline()
        p = Proposal("[explore] bad", Diff((DiffOp(
            "set", "optimizer.kind", "lion"),)), "explore")
        lint_proposal(p, base)
        assert base == baseline()


class TestScriptedProvider:

    def test_replay_order_and_exhaustion(self, tmp_path):
        path = tmp_path / "replay.jsonl"
        with open(path, "w") as fh:
            fh.write(json.dumps({"text": "first"}) + "\n")
            fh.write(json.dumps({"text": "second"}) + "\n")
        provider = ScriptedProvider(path)
        assert request_proposals(provider, "p", 10, 0) == "first"
        assert request_proposals(provider, "p", 10, 0) == "second"
        with pytest.raises(ProviderError):
            request_proposals(provider, "p", 10, 0)


class TestHttpProvider:

    def test_posts_prompt_and_returns_text(self, monkeypatch):
        calls = []

        class FakeResponse:
            def raise_for_status(self):
                pass

            def json(self):
                return {"text": "[]"}

        def fake_post(url, json=None, headers=None, timeout=None):
            calls.append((url, json, headers))
            return FakeResponse()

        import httpx
        monkeypatch.setattr(httpx, "post", fake_post)
        monkeypatch.setenv("EVOLOOP_PROVIDER_TOKEN", "secret-token")
        provider = HttpLLMProvider("http://model.local/v1/complete")
        out = provider.complete("the prompt", 10, 0)
        assert out == "[]"
        url, payload, headers = calls[0]
        assert payload == {"prompt": "the prompt", "max_tokens": 4096}
        assert headers["Authorization"] == "Bearer secret-token"

    def test_retries_then_fails(self, monkeypatch):
        attempts = []

        def fake_post(*args, **kwargs):
            attempts.append(1)
            raise OSError("connection refused")

        import httpx
        monkeypatch.setattr(httpx, "post", fake_post)
        monkeypatch.setattr("time.sleep", lambda s: None)
        provider = HttpLLMProvider("http://model.local/v1/complete",
                                   max_retries=2)
        with pytest.raises(ProviderError):
            provider.complete("p", 10, 0)
        assert len(attempts) == 3

    def test_response_log_never_contains_token(self, monkeypatch, tmp_path):
        class FakeResponse:
            def raise_for_status(self):
                pass

            def json(self):
                return {"text": "[]"}

        import httpx
        monkeypatch.setattr(httpx, "post",
                            lambda *a, **k: FakeResponse())
        monkeypatch.setenv("EVOLOOP_PROVIDER_TOKEN", "secret-token")
        log = tmp_path / "responses.jsonl"
        provider = HttpLLMProvider("http://model.local/v1/complete",
                                   log_path=str(log))
        provider.complete("p", 10, 0)
        logged = log.read_text()
        assert "secret-token" not in logged
        assert json.loads(logged)["text"] == "[]"


def heuristic_round(records, persona_kind="optimizer", n=10, seed=7,
                    quota=None, optimize_cost=False):
    overrides = {}
    if quota:
        overrides["quota"] = quota
    if optimize_cost:
        overrides["optimize_cost"] = True
    persona = default_persona(persona_kind, **overrides)
    context = render_context(records, ContextStrategy("full_sorted"),
                             persona_kind)
    prompt = build_prompt(persona, baseline(), context)
    raw = HeuristicProvider().complete(prompt, n, seed)
    proposals, rejections = parse_proposals(raw, persona.quota)
    assert not rejections
    return proposals


class TestHeuristicProvider:

    def test_quota_counts(self):
        proposals = heuristic_round([], n=5, quota=(2, 2, 1))
        counts = {c: sum(p.category == c for p in proposals)
                  for c in ("explore", "exploit", "innovate")}
        assert counts == {"explore": 2, "exploit": 2, "innovate": 1}

    def test_deterministic(self):
        a = heuristic_round([], seed=3)
        b = heuristic_round([], seed=3)
        assert [p.diff.to_json() for p in a] == [p.diff.to_json() for p in b]

    def test_explore_changes_optimizer_kind(self):
        proposals = heuristic_round([], seed=11)
        explores = [p for p in proposals if p.category == "explore"]
        assert explores
        for p in explores:
            cfg = apply_diff(baseline(), p.diff)
            assert to_flat(cfg) != to_flat(baseline())

    def test_exploit_perturbs_best_config_within_20_percent(self):
        base = baseline()
        good = Config(OptimizerSpec("rmsprop", 0.01, momentum=0.9,
                                    decay=0.99, epsilon=1e-8),
                      base.architecture, base.reward, base.training)
        bad = Config(OptimizerSpec("sgd", 0.3, momentum=0.0),
                     base.architecture, base.reward, base.training)
        records = [record_for(base, good, "t1", 0.01),
                   record_for(base, bad, "t2", 0.90)]
        proposals = heuristic_round(records, seed=5)
        exploits = [p for p in proposals if p.category == "exploit"]
        assert exploits
        for p in exploits:
            cfg = apply_diff(base, p.diff)
            assert cfg.optimizer.kind == "rmsprop"
            best_flat = {"learning_rate": 0.01, "momentum": 0.9,
                         "decay": 0.99}
            changed = 0
            for name, ref in best_flat.items():
                got = getattr(cfg.optimizer, name)
                if got != ref:
                    changed += 1
                    assert 0.8 * ref <= got <= 1.2 * ref
            assert changed == 1

    def test_context_conditions_output(self):
        base = baseline()
        good = Config(OptimizerSpec("adam", 0.003, epsilon=1e-8),
                      base.architecture, base.reward, base.training)
        with_history = heuristic_round([record_for(base, good, "t1", 0.02)],
                                       seed=9)
        without = heuristic_round([], seed=9)
        assert ([p.diff.to_json() for p in with_history]
                != [p.diff.to_json() for p in without])

    def test_proposals_avoid_repeating_history(self):
        base = baseline()
        tried = Config(OptimizerSpec("adam", 0.01, epsilon=1e-8),
                       base.architecture, base.reward, base.training)
        records = [record_for(base, tried, "t1", 0.05)]
        proposals = heuristic_round(records, seed=2)
        for p in proposals:
            if p.category == "exploit":
                continue
            cfg = apply_diff(base, p.diff)
            assert to_flat(cfg) != to_flat(tried)

    def test_reward_persona_emits_reward_paths(self):
        proposals = heuristic_round([], persona_kind="reward", seed=4)
        for p in proposals:
            for op in p.diff.ops:
                assert op.path.startswith("reward.")

    def test_architecture_persona_emits_architecture_paths(self):
        proposals = heuristic_round([], persona_kind="architecture", seed=4)
        for p in proposals:
            for op in p.diff.ops:
                assert op.path == "architecture.blocks"

    def test_cost_mode_reduces_epochs_on_exploit(self):
        proposals = heuristic_round([], seed=6, optimize_cost=True)
        exploits = [p for p in proposals if p.category == "exploit"]
        assert exploits
        for p in exploits:
            cfg = apply_diff(baseline(), p.diff)
            assert cfg.training.epochs < baseline().training.epochs

    def test_all_proposals_lint_clean(self):
        for kind in ("optimizer", "architecture", "reward"):
            for p in heuristic_round([], persona_kind=kind, seed=1):
                assert lint_proposal(p, baseline()).verdict == "clean"


class TestMakeProvider:

    def test_kinds(self, tmp_path):
        assert isinstance(make_provider(ProviderConfig("heuristic")),
                          HeuristicProvider)
        path = tmp_path / "r.jsonl"
        path.write_text(json.dumps({"text": "[]"}) + "\n")
        assert isinstance(
            make_provider(ProviderConfig("scripted", replay_path=str(path))),
            ScriptedProvider)
        assert isinstance(
            make_provider(ProviderConfig("http", endpoint="http://x/y")),
            HttpLLMProvider)

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            make_provider(ProviderConfig("carrier-pigeon"))
