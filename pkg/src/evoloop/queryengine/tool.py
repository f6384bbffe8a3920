"""Tool-facing wrapper: named tables, resource limits, text responses."""

from __future__ import annotations

from evoloop.simenv import LogTable
from .executor import ResultTable, execute_query
from .parser import QueryError, parse_query


class QueryTool:
    """The analysis tool handed to the reward persona: plain query text in,
    formatted table plus JSON out."""

    def __init__(self):
        self._tables: dict[str, LogTable] = {}

    def register(self, name: str, table: LogTable) -> None:
        self._tables[name] = table

    def table(self, name: str) -> LogTable:
        return self._tables[name]

    def run_sql_query(self, text: str, table_name: str = "logs") -> ResultTable:
        if table_name not in self._tables:
            raise QueryError(f"table not registered: {table_name}")
        table = self._tables[table_name]
        q = parse_query(text, table.column_names)
        if q.table != table_name:
            raise QueryError(f"table not registered: {q.table}")
        return execute_query(q, table)

    def run_batch(self, queries: list[str], table_name: str = "logs"):
        """Independent results, order-preserved; errors reported per query."""
        out = []
        for text in queries:
            try:
                out.append(("ok", self.run_sql_query(text, table_name)))
            except QueryError as exc:
                out.append(("error", str(exc)))
        return out

    def respond(self, text: str, table_name: str = "logs") -> str:
        """Response body embedded into agent tool transcripts."""
        try:
            result = self.run_sql_query(text, table_name)
        except QueryError as exc:
            return f"ERROR: {exc}"
        return result.format() + "\n" + str(result.to_json())
