"""Parser for the analysis query language.

Grammar (EBNF, also documented in the README):

    query      = "SELECT" select_list "FROM" ident [ "WHERE" expr ]
                 [ "GROUP" "BY" ident { "," ident } ]
    select_list= expr { "," expr }
    expr       = and_expr { "OR" and_expr }
    and_expr   = not_expr { "AND" not_expr }
    not_expr   = "NOT" not_expr | comparison
    comparison = additive [ ( "=" | "!=" | "<" | "<=" | ">" | ">=" ) additive ]
    additive   = term { ( "+" | "-" ) term }
    term       = unary { ( "*" | "/" ) unary }
    unary      = "-" unary | primary
    primary    = number | ident | call | "(" expr ")"
    call       = ident "(" ( "*" | expr { "," expr } ) ")"

Aggregates: COUNT, AVG, SUM, STDDEV, CORR. Scalar functions: LOG1P, IF.
Name resolution rejects unknown columns; the hidden latent column is
reported as nonexistent, indistinguishable from a typo.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Union

AGGREGATES = ("COUNT", "AVG", "SUM", "STDDEV", "CORR")
FUNCTIONS = ("LOG1P", "IF")

_AGG_ARITY = {"COUNT": 1, "AVG": 1, "SUM": 1, "STDDEV": 1, "CORR": 2}
_FUNC_ARITY = {"LOG1P": 1, "IF": 3}


class QueryError(ValueError):
    """Syntax or name-resolution failure; message includes position."""


@dataclass(frozen=True)
class Column:
    name: str


@dataclass(frozen=True)
class Literal:
    value: float


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class UnaryOp:
    op: str  # "-" | "NOT"
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    name: str  # aggregate or scalar function, upper-cased
    args: tuple["Expr", ...]
    star: bool = False  # COUNT(*)


Expr = Union[Column, Literal, BinOp, UnaryOp, Call]


@dataclass(frozen=True)
class Query:
    select: tuple[Expr, ...]
    table: str
    where: Expr | None = None
    group_by: tuple[str, ...] = ()


_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|!=|<>|[(),*+\-/<>=]))"
)

_KEYWORDS = {"SELECT", "FROM", "WHERE", "GROUP", "BY", "AND", "OR", "NOT"}


@dataclass
class _Token:
    kind: str  # num | ident | op | kw
    text: str
    pos: int


def _tokenize(text: str) -> list[_Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN_RE.match(text, pos)
        if not m or m.start() != pos:
            raise QueryError(f"syntax error at position {pos}: {text[pos:pos+10]!r}")
        if m.lastgroup == "num":
            tokens.append(_Token("num", m.group("num"), pos))
        elif m.lastgroup == "ident":
            word = m.group("ident")
            kind = "kw" if word.upper() in _KEYWORDS else "ident"
            tokens.append(_Token(kind, word, pos))
        else:
            op = m.group("op")
            tokens.append(_Token("op", "!=" if op == "<>" else op, pos))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def _peek(self) -> _Token | None:
        return self.tokens[self.i] if self.i < len(self.tokens) else None

    def _next(self) -> _Token:
        tok = self._peek()
        if tok is None:
            raise QueryError(f"syntax error at position {len(self.text)}: "
                             "unexpected end of query")
        self.i += 1
        return tok

    def _expect_kw(self, word: str) -> None:
        tok = self._next()
        if tok.kind != "kw" or tok.text.upper() != word:
            raise QueryError(
                f"syntax error at position {tok.pos}: expected {word}, "
                f"got {tok.text!r}")

    def _expect_op(self, op: str) -> None:
        tok = self._next()
        if tok.kind != "op" or tok.text != op:
            raise QueryError(
                f"syntax error at position {tok.pos}: expected {op!r}, "
                f"got {tok.text!r}")

    def _at_kw(self, word: str) -> bool:
        tok = self._peek()
        return tok is not None and tok.kind == "kw" and tok.text.upper() == word

    def parse(self) -> Query:
        self._expect_kw("SELECT")
        select = [self._expr()]
        while self._at_op(","):
            self._next()
            select.append(self._expr())
        self._expect_kw("FROM")
        table_tok = self._next()
        if table_tok.kind != "ident":
            raise QueryError(f"syntax error at position {table_tok.pos}: "
                             "expected table name")
        where = None
        if self._at_kw("WHERE"):
            self._next()
            where = self._expr()
        group_by: list[str] = []
        if self._at_kw("GROUP"):
            self._next()
            self._expect_kw("BY")
            group_by.append(self._ident())
            while self._at_op(","):
                self._next()
                group_by.append(self._ident())
        trailing = self._peek()
        if trailing is not None:
            raise QueryError(f"syntax error at position {trailing.pos}: "
                             f"unexpected {trailing.text!r}")
        return Query(tuple(select), table_tok.text, where, tuple(group_by))

    def _ident(self) -> str:
        tok = self._next()
        if tok.kind != "ident":
            raise QueryError(f"syntax error at position {tok.pos}: "
                             f"expected column name, got {tok.text!r}")
        return tok.text

    def _at_op(self, op: str) -> bool:
        tok = self._peek()
        return tok is not None and tok.kind == "op" and tok.text == op

    def _expr(self) -> Expr:
        node = self._and_expr()
        while self._at_kw("OR"):
            self._next()
            node = BinOp("OR", node, self._and_expr())
        return node

    def _and_expr(self) -> Expr:
        node = self._not_expr()
        while self._at_kw("AND"):
            self._next()
            node = BinOp("AND", node, self._not_expr())
        return node

    def _not_expr(self) -> Expr:
        if self._at_kw("NOT"):
            self._next()
            return UnaryOp("NOT", self._not_expr())
        return self._comparison()

    def _comparison(self) -> Expr:
        node = self._additive()
        for op in ("<=", ">=", "!=", "=", "<", ">"):
            if self._at_op(op):
                self._next()
                return BinOp(op, node, self._additive())
        return node

    def _additive(self) -> Expr:
        node = self._term()
        while self._at_op("+") or self._at_op("-"):
            op = self._next().text
            node = BinOp(op, node, self._term())
        return node

    def _term(self) -> Expr:
        node = self._unary()
        while self._at_op("*") or self._at_op("/"):
            op = self._next().text
            node = BinOp(op, node, self._unary())
        return node

    def _unary(self) -> Expr:
        if self._at_op("-"):
            self._next()
            return UnaryOp("-", self._unary())
        return self._primary()

    def _primary(self) -> Expr:
        tok = self._next()
        if tok.kind == "num":
            return Literal(float(tok.text))
        if tok.kind == "op" and tok.text == "(":
            node = self._expr()
            self._expect_op(")")
            return node
        if tok.kind == "ident":
            if self._at_op("("):
                self._next()
                name = tok.text.upper()
                if name not in AGGREGATES and name not in FUNCTIONS:
                    raise QueryError(f"syntax error at position {tok.pos}: "
                                     f"unknown function {tok.text!r}")
                if name == "COUNT" and self._at_op("*"):
                    self._next()
                    self._expect_op(")")
                    return Call("COUNT", (), star=True)
                args = [self._expr()]
                while self._at_op(","):
                    self._next()
                    args.append(self._expr())
                self._expect_op(")")
                arity = _AGG_ARITY.get(name) or _FUNC_ARITY[name]
                if len(args) != arity:
                    raise QueryError(f"syntax error at position {tok.pos}: "
                                     f"{name} takes {arity} argument(s)")
                return Call(name, tuple(args))
            return Column(tok.text)
        raise QueryError(f"syntax error at position {tok.pos}: "
                         f"unexpected {tok.text!r}")


def walk(node: Expr):
    yield node
    if isinstance(node, BinOp):
        yield from walk(node.left)
        yield from walk(node.right)
    elif isinstance(node, UnaryOp):
        yield from walk(node.operand)
    elif isinstance(node, Call):
        for arg in node.args:
            yield from walk(arg)


def contains_aggregate(node: Expr) -> bool:
    return any(isinstance(n, Call) and n.name in AGGREGATES for n in walk(node))


def resolve_names(q: Query, schema: tuple[str, ...]) -> None:
    """Reject unknown columns. The hidden latent column is not in the
    schema, so referencing it reports 'column does not exist' exactly like
    any typo, by design."""
    known = set(schema)
    exprs = list(q.select)
    if q.where is not None:
        exprs.append(q.where)
    for expr in exprs:
        for node in walk(expr):
            if isinstance(node, Column) and node.name not in known:
                raise QueryError(f"column does not exist: {node.name}")
    for name in q.group_by:
        if name not in known:
            raise QueryError(f"column does not exist: {name}")


def parse_query(text: str, schema: tuple[str, ...] | None = None) -> Query:
    """Parse and, when a schema is supplied, resolve column names."""
    q = _Parser(text).parse()
    if schema is not None:
        resolve_names(q, tuple(schema))
    return q


def pretty_print(node) -> str:
    if isinstance(node, Query):
        parts = ["SELECT ", ", ".join(pretty_print(e) for e in node.select),
                 " FROM ", node.table]
        if node.where is not None:
            parts += [" WHERE ", pretty_print(node.where)]
        if node.group_by:
            parts += [" GROUP BY ", ", ".join(node.group_by)]
        return "".join(parts)
    if isinstance(node, Column):
        return node.name
    if isinstance(node, Literal):
        v = node.value
        return repr(int(v)) if float(v).is_integer() else repr(v)
    if isinstance(node, UnaryOp):
        if node.op == "NOT":
            return f"(NOT {pretty_print(node.operand)})"
        return f"(-{pretty_print(node.operand)})"
    if isinstance(node, BinOp):
        return f"({pretty_print(node.left)} {node.op} {pretty_print(node.right)})"
    if isinstance(node, Call):
        if node.star:
            return "COUNT(*)"
        return f"{node.name}({', '.join(pretty_print(a) for a in node.args)})"
    raise TypeError(f"not an AST node: {node!r}")
