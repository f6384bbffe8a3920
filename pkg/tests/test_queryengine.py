import math

import numpy as np
import pytest

from evoloop.queryengine import (
    Call,
    Query,
    QueryError,
    QueryTool,
    execute_query,
    parse_query,
    pretty_print,
)
from evoloop.simenv import LogTable, SimSpec, gen_interaction_logs


def make_table(columns: dict) -> LogTable:
    arrays = {k: np.asarray(v, dtype=np.float64) for k, v in columns.items()}
    n = len(next(iter(arrays.values())))
    return LogTable(arrays, latent=np.zeros(n))


# --- independent full-scan oracle -----------------------------------------

def oracle_mean(values):
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) / len(vals) if vals else None


def oracle_sum(values):
    vals = [v for v in values if not math.isnan(v)]
    return sum(vals) if vals else None


def oracle_count(values):
    return float(len([v for v in values if not math.isnan(v)]))


def oracle_stddev(values):
    vals = [v for v in values if not math.isnan(v)]
    if len(vals) < 2:
        return None
    m = sum(vals) / len(vals)
    return math.sqrt(sum((v - m) ** 2 for v in vals) / (len(vals) - 1))


def oracle_corr(xs, ys):
    pairs = [(x, y) for x, y in zip(xs, ys)
             if not (math.isnan(x) or math.isnan(y))]
    if len(pairs) < 2:
        return None
    n = len(pairs)
    mx = sum(p[0] for p in pairs) / n
    my = sum(p[1] for p in pairs) / n
    sx = math.sqrt(sum((p[0] - mx) ** 2 for p in pairs) / (n - 1))
    sy = math.sqrt(sum((p[1] - my) ** 2 for p in pairs) / (n - 1))
    if sx == 0 or sy == 0:
        return None
    return sum((p[0] - mx) * (p[1] - my) for p in pairs) / ((n - 1) * sx * sy)


class TestParser:
    def test_corr_aggregate(self):
        q = parse_query("SELECT CORR(watch_time, dwell_time) FROM logs")
        assert isinstance(q.select[0], Call)
        assert q.select[0].name == "CORR"

    def test_hidden_column_is_unknown(self):
        table = gen_interaction_logs(SimSpec(n_rows=10, seed=0))
        with pytest.raises(QueryError, match="column does not exist"):
            parse_query("SELECT latent_satisfaction FROM logs",
                        table.column_names)

    def test_unknown_group_by_column(self):
        table = gen_interaction_logs(SimSpec(n_rows=10, seed=0))
        with pytest.raises(QueryError, match="column does not exist"):
            parse_query(
                "SELECT AVG(watch_time) FROM logs WHERE click = 1 "
                "GROUP BY quality_bucket", table.column_names)

    def test_syntax_error_has_position(self):
        with pytest.raises(QueryError, match="position"):
            parse_query("SELECT FROM logs")

    @pytest.mark.parametrize("text", [
        "SELECT COUNT(*) FROM logs",
        "SELECT AVG(watch_time), SUM(click) FROM logs WHERE click = 1",
        "SELECT click, AVG(watch_time) FROM logs GROUP BY click",
        "SELECT CORR(LOG1P(watch_time), dwell_time) FROM logs",
        "SELECT AVG(IF(click = 1, watch_time, 0)) FROM logs",
        "SELECT STDDEV(watch_time) FROM logs WHERE NOT click = 1 AND dwell_time > 2",
        "SELECT AVG(watch_time + dwell_time * 2 - 1 / quality_score) FROM logs",
        "SELECT COUNT(survey_score) FROM logs WHERE survey_score >= 3 OR click = 0",
    ])
    def test_pretty_print_round_trip(self, text):
        q = parse_query(text)
        assert parse_query(pretty_print(q)) == q

    def test_hidden_column_fuzzed_positions(self):
        table = gen_interaction_logs(SimSpec(n_rows=10, seed=0))
        attempts = [
            "SELECT AVG(latent_satisfaction) FROM logs",
            "SELECT COUNT(*) FROM logs WHERE latent_satisfaction > 0",
            "SELECT click FROM logs GROUP BY latent_satisfaction",
            "SELECT CORR(click, latent_satisfaction) FROM logs",
            "SELECT IF(latent_satisfaction > 0, 1, 0) FROM logs",
            "SELECT LOG1P(latent_satisfaction) FROM logs",
            "SELECT AVG(click + latent_satisfaction) FROM logs",
            "SELECT COUNT(*) FROM logs WHERE NOT latent_satisfaction = 0",
        ]
        for text in attempts:
            with pytest.raises(QueryError, match="column does not exist"):
                parse_query(text, table.column_names)


class TestExecutor:
    def test_corr_self_is_one(self):
        table = make_table({"x": [1, 2, 3, 4, 5]})
        result = execute_query(parse_query("SELECT CORR(x, x) FROM t"), table)
        assert result.rows[0][0] == pytest.approx(1.0, abs=1e-12)

    def test_corr_hand_computed(self):
        table = make_table({"x": [1, 2, 3, 4, 5], "y": [2, 4, 6, 8, 10]})
        result = execute_query(parse_query("SELECT CORR(x, y) FROM t"), table)
        assert result.rows[0][0] == pytest.approx(1.0, abs=1e-12)

    def test_avg_matches_brute_force(self):
        table = gen_interaction_logs(SimSpec(n_rows=10_000, seed=9))
        result = execute_query(parse_query("SELECT AVG(click) FROM logs"), table)
        brute = sum(table.columns["click"].tolist()) / 10_000
        assert abs(result.rows[0][0] - brute) < 1e-12

    def test_nulls_excluded_from_survey_aggregates(self):
        table = make_table({"survey_score": [3.0, float("nan"), 5.0]})
        result = execute_query(
            parse_query("SELECT AVG(survey_score), COUNT(survey_score) FROM t"),
            table)
        assert result.rows[0] == (4.0, 2.0)

    def test_division_by_zero_is_null(self):
        table = make_table({"x": [1.0, 2.0], "y": [0.0, 1.0]})
        result = execute_query(parse_query("SELECT x / y FROM t"), table)
        assert result.rows[0][0] is None
        assert result.rows[1][0] == 2.0

    def test_group_by_keys_ascending(self):
        table = make_table({"g": [2, 1, 2, 1, 3], "x": [10, 20, 30, 40, 50]})
        result = execute_query(
            parse_query("SELECT g, AVG(x) FROM t GROUP BY g"), table)
        assert [r[0] for r in result.rows] == [1.0, 2.0, 3.0]
        assert result.rows[0][1] == 30.0  # (20+40)/2

    def test_where_filters(self):
        table = make_table({"c": [1, 0, 1, 0], "x": [1, 2, 3, 4]})
        result = execute_query(
            parse_query("SELECT SUM(x) FROM t WHERE c = 1"), table)
        assert result.rows[0][0] == 4.0

    def test_row_cap_truncation(self):
        table = make_table({"x": list(range(2000))})
        result = execute_query(parse_query("SELECT x FROM t"), table)
        assert len(result.rows) == 1000
        assert result.truncated

    def test_engine_vs_oracle_randomized(self):
        rng = np.random.default_rng(31)
        for _ in range(100):
            n = int(rng.integers(5, 1000))
            x = rng.normal(size=n)
            y = rng.normal(size=n)
            # sprinkle nulls
            x[rng.random(n) < 0.1] = np.nan
            table = make_table({"x": x, "y": y})
            result = execute_query(parse_query(
                "SELECT COUNT(x), SUM(x), AVG(x), STDDEV(x), CORR(x, y) FROM t"
            ), table)
            row = result.rows[0]
            expected = (oracle_count(x), oracle_sum(x), oracle_mean(x),
                        oracle_stddev(x), oracle_corr(x, y))
            for got, want in zip(row, expected):
                if want is None:
                    assert got is None
                else:
                    assert got == pytest.approx(want, rel=1e-9, abs=1e-12)


class TestTool:
    def make_tool(self, n=1000):
        tool = QueryTool()
        tool.register("logs", gen_interaction_logs(SimSpec(n_rows=n, seed=2)))
        return tool

    def test_formatted_result(self):
        tool = self.make_tool()
        out = tool.respond("SELECT CORR(watch_time, dwell_time) FROM logs")
        assert "CORR(watch_time, dwell_time)" in out

    def test_budget_exceeded(self):
        tool = QueryTool()
        tool.register("logs", gen_interaction_logs(SimSpec(n_rows=2_000_000,
                                                           seed=0)))
        with pytest.raises(QueryError, match="query budget exceeded"):
            tool.run_sql_query(
                "SELECT AVG(click + watch_time + dwell_time + channel_affinity"
                " + quality_score + survey_score) FROM logs")

    def test_batch_order_preserved(self):
        tool = self.make_tool()
        queries = [f"SELECT AVG(click + {i}) FROM logs" for i in range(8)]
        results = tool.run_batch(queries)
        assert len(results) == 8
        base = results[0][1].rows[0][0]
        for i, (status, result) in enumerate(results):
            assert status == "ok"
            assert result.rows[0][0] == pytest.approx(base + i)

    def test_unregistered_table(self):
        tool = self.make_tool()
        with pytest.raises(QueryError, match="table not registered"):
            tool.run_sql_query("SELECT COUNT(*) FROM nope", "nope")
