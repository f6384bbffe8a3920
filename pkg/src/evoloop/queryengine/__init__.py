from .parser import (
    AGGREGATES,
    BinOp,
    Call,
    Column,
    Literal,
    Query,
    QueryError,
    UnaryOp,
    contains_aggregate,
    parse_query,
    pretty_print,
    resolve_names,
    walk,
)
from .executor import CELL_BUDGET, ROW_CAP, ResultTable, execute_query
from .tool import QueryTool

__all__ = [
    "AGGREGATES",
    "BinOp",
    "Call",
    "Column",
    "Literal",
    "Query",
    "QueryError",
    "UnaryOp",
    "contains_aggregate",
    "parse_query",
    "pretty_print",
    "resolve_names",
    "walk",
    "CELL_BUDGET",
    "ROW_CAP",
    "ResultTable",
    "execute_query",
    "QueryTool",
]
