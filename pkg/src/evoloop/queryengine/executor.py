"""Vectorized evaluation of parsed queries over a LogTable.

Semantics:
- null is NaN internally, rendered as None in results;
- aggregates skip null inputs (CORR excludes pairwise);
- STDDEV and CORR use sample (n-1) normalization;
- division by zero yields null; null propagates through scalar ops;
- WHERE treats null as false;
- GROUP BY output is ordered by group keys ascending.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from evoloop.simenv import LogTable
from .parser import (
    AGGREGATES,
    BinOp,
    Call,
    Column,
    Expr,
    Literal,
    Query,
    QueryError,
    UnaryOp,
    contains_aggregate,
    pretty_print,
    resolve_names,
    walk,
)

ROW_CAP = 1000
CELL_BUDGET = 10_000_000


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[tuple]
    truncated: bool = False

    def to_json(self) -> dict:
        return {"columns": self.columns, "rows": [list(r) for r in self.rows],
                "truncated": self.truncated}

    def format(self) -> str:
        widths = [max(len(c), *(len(_fmt(r[i])) for r in self.rows))
                  if self.rows else len(c)
                  for i, c in enumerate(self.columns)]
        header = " | ".join(c.ljust(w) for c, w in zip(self.columns, widths))
        sep = "-+-".join("-" * w for w in widths)
        lines = [header, sep]
        for r in self.rows:
            lines.append(" | ".join(_fmt(v).ljust(w) for v, w in zip(r, widths)))
        if self.truncated:
            lines.append(f"(truncated at {ROW_CAP} rows)")
        return "\n".join(lines)


def _fmt(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, float) and float(v).is_integer():
        return str(int(v))
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def _eval(node: Expr, cols: dict[str, np.ndarray], n: int) -> np.ndarray:
    if isinstance(node, Literal):
        return np.full(n, node.value)
    if isinstance(node, Column):
        return cols[node.name]
    if isinstance(node, UnaryOp):
        x = _eval(node.operand, cols, n)
        if node.op == "-":
            return -x
        # NOT: null stays null
        out = np.where(x == 0.0, 1.0, 0.0)
        return np.where(np.isnan(x), np.nan, out)
    if isinstance(node, BinOp):
        a = _eval(node.left, cols, n)
        b = _eval(node.right, cols, n)
        nan = np.isnan(a) | np.isnan(b)
        if node.op == "+":
            out = a + b
        elif node.op == "-":
            out = a - b
        elif node.op == "*":
            out = a * b
        elif node.op == "/":
            with np.errstate(divide="ignore", invalid="ignore"):
                out = np.where(b == 0.0, np.nan, a / np.where(b == 0.0, 1.0, b))
        elif node.op == "=":
            out = (a == b).astype(np.float64)
        elif node.op == "!=":
            out = (a != b).astype(np.float64)
        elif node.op == "<":
            out = (a < b).astype(np.float64)
        elif node.op == "<=":
            out = (a <= b).astype(np.float64)
        elif node.op == ">":
            out = (a > b).astype(np.float64)
        elif node.op == ">=":
            out = (a >= b).astype(np.float64)
        elif node.op == "AND":
            out = ((a != 0.0) & (b != 0.0)).astype(np.float64)
        elif node.op == "OR":
            out = ((a != 0.0) | (b != 0.0)).astype(np.float64)
        else:
            raise QueryError(f"unknown operator {node.op!r}")
        return np.where(nan, np.nan, out)
    if isinstance(node, Call):
        if node.name == "LOG1P":
            x = _eval(node.args[0], cols, n)
            with np.errstate(invalid="ignore", divide="ignore"):
                out = np.log1p(x)
            return np.where(x <= -1.0, np.nan, out)
        if node.name == "IF":
            c = _eval(node.args[0], cols, n)
            a = _eval(node.args[1], cols, n)
            b = _eval(node.args[2], cols, n)
            return np.where(np.isnan(c), np.nan, np.where(c != 0.0, a, b))
        raise QueryError(f"aggregate {node.name} not allowed here")
    raise TypeError(f"not an expression: {node!r}")


def _aggregate(call: Call, cols: dict[str, np.ndarray], n: int) -> float | None:
    if call.star:
        return float(n)
    if call.name == "CORR":
        x = _eval(call.args[0], cols, n)
        y = _eval(call.args[1], cols, n)
        mask = ~(np.isnan(x) | np.isnan(y))
        x, y = x[mask], y[mask]
        if len(x) < 2:
            return None
        xc, yc = x - x.mean(), y - y.mean()
        sx = np.sqrt((xc * xc).sum() / (len(x) - 1))
        sy = np.sqrt((yc * yc).sum() / (len(y) - 1))
        if sx == 0.0 or sy == 0.0:
            return None
        return float((xc * yc).sum() / ((len(x) - 1) * sx * sy))
    x = _eval(call.args[0], cols, n)
    x = x[~np.isnan(x)]
    if call.name == "COUNT":
        return float(len(x))
    if len(x) == 0:
        return None
    if call.name == "SUM":
        return float(x.sum())
    if call.name == "AVG":
        return float(x.mean())
    if call.name == "STDDEV":
        if len(x) < 2:
            return None
        return float(np.sqrt(((x - x.mean()) ** 2).sum() / (len(x) - 1)))
    raise QueryError(f"unknown aggregate {call.name}")


def _eval_select_item(expr: Expr, cols: dict[str, np.ndarray], n: int):
    """Evaluate one select item in aggregate context: aggregates collapse,
    anything else must be a bare group-key column handled by the caller."""
    if isinstance(expr, Call) and expr.name in AGGREGATES:
        return _aggregate(expr, cols, n)
    # scalar expression over aggregates is out of grammar scope; bare
    # columns are handled in the grouped path
    raise QueryError(
        f"non-aggregate select item {pretty_print(expr)!r} requires GROUP BY")


def _referenced_columns(q: Query) -> set[str]:
    names = set(q.group_by)
    exprs = list(q.select) + ([q.where] if q.where is not None else [])
    for expr in exprs:
        for node in walk(expr):
            if isinstance(node, Column):
                names.add(node.name)
    return names


def execute_query(q: Query, table: LogTable) -> ResultTable:
    resolve_names(q, table.column_names)

    n_cols = max(len(_referenced_columns(q)), 1)
    if len(table) * n_cols > CELL_BUDGET:
        raise QueryError("query budget exceeded")

    cols = table.columns
    n = len(table)

    if q.where is not None:
        mask_vals = _eval(q.where, cols, n)
        mask = (~np.isnan(mask_vals)) & (mask_vals != 0.0)
        cols = {k: v[mask] for k, v in cols.items()}
        n = int(mask.sum())

    names = [pretty_print(e) for e in q.select]
    has_agg = any(contains_aggregate(e) for e in q.select)

    if q.group_by:
        for e in q.select:
            if not contains_aggregate(e) and not (
                    isinstance(e, Column) and e.name in q.group_by):
                raise QueryError(
                    f"select item {pretty_print(e)!r} is neither an "
                    "aggregate nor a GROUP BY column")
        keys = np.stack([cols[g] for g in q.group_by], axis=1)
        # ascending by group key tuple
        order = np.lexsort(tuple(keys[:, i] for i in reversed(range(keys.shape[1]))))
        sorted_keys = keys[order]
        boundaries = [0]
        for i in range(1, len(sorted_keys)):
            if not np.array_equal(sorted_keys[i], sorted_keys[i - 1],
                                  equal_nan=True):
                boundaries.append(i)
        boundaries.append(len(sorted_keys))
        rows = []
        truncated = False
        for bi in range(len(boundaries) - 1):
            if len(rows) >= ROW_CAP:
                truncated = True
                break
            idx = order[boundaries[bi]:boundaries[bi + 1]]
            gcols = {k: v[idx] for k, v in cols.items()}
            key_row = sorted_keys[boundaries[bi]]
            row = []
            for e in q.select:
                if isinstance(e, Column) and e.name in q.group_by:
                    v = key_row[q.group_by.index(e.name)]
                    row.append(None if np.isnan(v) else float(v))
                else:
                    row.append(_eval_select_item(e, gcols, len(idx)))
            rows.append(tuple(row))
        return ResultTable(names, rows, truncated)

    if has_agg:
        for e in q.select:
            if not contains_aggregate(e):
                raise QueryError(
                    f"select item {pretty_print(e)!r} is neither an "
                    "aggregate nor a GROUP BY column")
        row = tuple(_eval_select_item(e, cols, n) for e in q.select)
        return ResultTable(names, [row])

    # plain projection
    arrays = [_eval(e, cols, n) for e in q.select]
    truncated = n > ROW_CAP
    limit = min(n, ROW_CAP)
    rows = []
    for i in range(limit):
        rows.append(tuple(
            None if np.isnan(a[i]) else float(a[i]) for a in arrays))
    return ResultTable(names, rows, truncated)
