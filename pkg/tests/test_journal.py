"""Journal durability and context-rendering contracts."""

import math

from evoloop.journal import (
    ContextStrategy,
    Journal,
    JournalRecord,
    NO_HISTORY_MARKER,
    format_record,
    render_context,
)


def rec(i, score, kind="proxy_loss", persona="optimizer", status="COMPLETED",
        online=None, improved=False):
    return JournalRecord(
        trial_id=f"t{i}",
        diff_text=f"set optimizer.learning_rate = 0.{i}",
        persona_kind=persona,
        score_kind=kind,
        score_value=score,
        status=status,
        cost_units=10.0 * i,
        timestamp=float(i),
        online_metrics=online,
        offline_improved=improved,
    )


class TestAppendAndDurability:

    def test_in_memory_order(self):
        j = Journal()
        for i in range(5):
            j.append(rec(i, 0.1 * i))
        assert [r.trial_id for r in j.read_all()] == [f"t{i}" for i in range(5)]

    def test_reopen_preserves_records(self, tmp_path):
        path = tmp_path / "journal.jsonl"
        j = Journal(path)
        for i in range(4):
            j.append(rec(i, 0.1 * i))
        reopened = Journal(path)
        assert reopened.read_all() == j.read_all()

    def test_append_after_reopen(self, tmp_path):
        path = tmp_path / "journal.jsonl"
        Journal(path).append(rec(0, 0.5))
        j2 = Journal(path)
        j2.append(rec(1, 0.4))
        assert len(Journal(path)) == 2

    def test_infinite_score_round_trips(self, tmp_path):
        path = tmp_path / "journal.jsonl"
        Journal(path).append(rec(0, math.inf, status="FAILED"))
        got = Journal(path).read_all()[0]
        assert got.score_value == math.inf


class TestFormatRecord:

    def test_contains_core_fields(self):
        text = format_record(rec(3, 0.25))
        assert "--- trial t3 [COMPLETED] ---" in text
        assert "  set optimizer.learning_rate = 0.3" in text
        assert "offline proxy_loss: 0.25" in text
        assert "cost_units: 30.0" in text

    def test_online_metrics_line(self):
        online = {"metric1": 0.004, "metric2": 0.002, "metric3": 0.0,
                  "confidence_halfwidth": 0.001}
        text = format_record(rec(1, 0.2, online=online))
        assert "online: metric1=+0.00400" in text

    def test_misaligned_flag(self):
        online = {"metric1": -0.004, "metric2": -0.002, "metric3": 0.0,
                  "confidence_halfwidth": 0.001}
        flagged = format_record(rec(1, 0.2, online=online, improved=True))
        assert "MISALIGNED" in flagged
        unflagged = format_record(rec(1, 0.2, online=online, improved=False))
        assert "MISALIGNED" not in unflagged


class TestRenderContext:

    def records(self):
        return [rec(0, 0.5), rec(1, 0.1), rec(2, 0.3)]

    def test_none_strategy(self):
        out = render_context(self.records(), ContextStrategy("none"),
                             "optimizer")
        assert out == NO_HISTORY_MARKER

    def test_empty_history(self):
        out = render_context([], ContextStrategy("full_sorted"), "optimizer")
        assert out == NO_HISTORY_MARKER

    def test_full_sorted_ascending_loss(self):
        out = render_context(self.records(), ContextStrategy("full_sorted"),
                             "optimizer")
        assert out.index("trial t1") < out.index("trial t2") < out.index("trial t0")

    def test_full_sorted_descending_correlation(self):
        records = [rec(0, 0.2, kind="correlation", persona="reward"),
                   rec(1, 0.8, kind="correlation", persona="reward")]
        out = render_context(records, ContextStrategy("full_sorted"), "reward")
        assert out.index("trial t1") < out.index("trial t0")

    def test_full_by_timestamp(self):
        out = render_context(self.records(),
                             ContextStrategy("full_by_timestamp"), "optimizer")
        assert out.index("trial t0") < out.index("trial t1") < out.index("trial t2")

    def test_top_k(self):
        out = render_context(self.records(), ContextStrategy("top_k", 2),
                             "optimizer")
        assert "trial t1" in out and "trial t2" in out
        assert "trial t0" not in out

    def test_persona_filter(self):
        records = self.records() + [rec(9, 0.9, persona="reward",
                                        kind="correlation")]
        out = render_context(records, ContextStrategy("full_sorted"),
                             "optimizer")
        assert "trial t9" not in out

    def test_rendered_records_are_exactly_the_selected_set(self):
        out = render_context(self.records(), ContextStrategy("full_sorted"),
                             "optimizer")
        headers = [ln for ln in out.splitlines() if ln.startswith("--- trial")]
        assert sorted(headers) == sorted(
            f"--- trial t{i} [COMPLETED] ---" for i in range(3))

    def test_budget_truncation_is_prefix_stable(self):
        records = self.records()
        full = render_context(records, ContextStrategy("full_sorted"),
                              "optimizer", char_budget=100_000)
        one_block = len(format_record(rec(1, 0.1))) + 1
        cut = render_context(records, ContextStrategy("full_sorted"),
                             "optimizer", char_budget=one_block + 10)
        body = cut.rsplit("\n[", 1)[0]
        assert full.startswith(body)
        assert "[2 record(s) truncated]" in cut

    def test_strategy_parse_round_trip(self):
        for text in ("full_sorted", "full_by_timestamp", "none", "top_5"):
            assert str(ContextStrategy.parse(text)) == text
