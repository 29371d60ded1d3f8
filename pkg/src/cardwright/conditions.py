"""Boolean applicability predicates over context flags.

Grammar (case-insensitive keywords, NOT binds tighter than AND, AND tighter than OR)::

    expr   := term ("OR" term)*
    term   := factor ("AND" factor)*
    factor := "NOT" factor | "(" expr ")" | "true" | "false" | flag_name
"""

from __future__ import annotations

import re
from collections.abc import Collection, Mapping
from dataclasses import dataclass
from itertools import product
from typing import Iterator, Union


class ConditionSyntaxError(ValueError):
    """Raised for malformed expressions or references to undeclared flags."""


@dataclass(frozen=True)
class Const:
    value: bool

    def evaluate(self, assignment: Mapping[str, bool]) -> bool:
        return self.value

    def flags(self) -> frozenset[str]:
        return frozenset()

    def __str__(self) -> str:
        return "true" if self.value else "false"


@dataclass(frozen=True)
class Flag:
    name: str

    def evaluate(self, assignment: Mapping[str, bool]) -> bool:
        return bool(assignment[self.name])

    def flags(self) -> frozenset[str]:
        return frozenset({self.name})

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Not:
    operand: Condition

    def evaluate(self, assignment: Mapping[str, bool]) -> bool:
        return not self.operand.evaluate(assignment)

    def flags(self) -> frozenset[str]:
        return self.operand.flags()

    def __str__(self) -> str:
        inner = str(self.operand)
        if isinstance(self.operand, (And, Or)):
            inner = f"({inner})"
        return f"NOT {inner}"


@dataclass(frozen=True)
class And:
    operands: tuple[Condition, ...]

    def evaluate(self, assignment: Mapping[str, bool]) -> bool:
        return all(op.evaluate(assignment) for op in self.operands)

    def flags(self) -> frozenset[str]:
        return frozenset().union(*(op.flags() for op in self.operands))

    def __str__(self) -> str:
        parts = []
        for op in self.operands:
            text = str(op)
            parts.append(f"({text})" if isinstance(op, Or) else text)
        return " AND ".join(parts)


@dataclass(frozen=True)
class Or:
    operands: tuple[Condition, ...]

    def evaluate(self, assignment: Mapping[str, bool]) -> bool:
        return any(op.evaluate(assignment) for op in self.operands)

    def flags(self) -> frozenset[str]:
        return frozenset().union(*(op.flags() for op in self.operands))

    def __str__(self) -> str:
        return " OR ".join(str(op) for op in self.operands)


Condition = Union[Const, Flag, Not, And, Or]

TRUE = Const(True)

_TOKEN = re.compile(r"\s*(?:(\()|(\))|([A-Za-z_][A-Za-z0-9_]*))")
_KEYWORDS = {"and", "or", "not", "true", "false"}


def _tokenize(text: str) -> list[str]:
    tokens: list[str] = []
    pos = 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ConditionSyntaxError(f"unexpected character {text[pos:].strip()[:1]!r} at offset {pos}")
        tokens.append(m.group(m.lastindex))
        pos = m.end()
    return tokens


class _Parser:
    def __init__(self, tokens: list[str], known: Collection[str] | None) -> None:
        self.tokens = tokens
        self.pos = 0
        self.known = known

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise ConditionSyntaxError("unexpected end of expression")
        self.pos += 1
        return tok

    def expr(self) -> Condition:
        ops = [self.term()]
        while (tok := self.peek()) is not None and tok.lower() == "or":
            self.take()
            ops.append(self.term())
        return _flatten(Or, ops)

    def term(self) -> Condition:
        ops = [self.factor()]
        while (tok := self.peek()) is not None and tok.lower() == "and":
            self.take()
            ops.append(self.factor())
        return _flatten(And, ops)

    def factor(self) -> Condition:
        tok = self.take()
        low = tok.lower()
        if low == "not":
            return Not(self.factor())
        if tok == "(":
            inner = self.expr()
            if self.take() != ")":
                raise ConditionSyntaxError("expected ')'")
            return inner
        if low == "true":
            return Const(True)
        if low == "false":
            return Const(False)
        if tok == ")" or low in _KEYWORDS:
            raise ConditionSyntaxError(f"unexpected token {tok!r}")
        if self.known is not None and tok not in self.known:
            raise ConditionSyntaxError(f"unknown flag {tok!r}")
        return Flag(tok)


def _flatten(kind: type, ops: list[Condition]) -> Condition:
    if len(ops) == 1:
        return ops[0]
    flat: list[Condition] = []
    for op in ops:
        flat.extend(op.operands if isinstance(op, kind) else (op,))
    return kind(tuple(flat))


def parse_condition(text: str, known: Collection[str] | None = None) -> Condition:
    """Parse ``text``; when ``known`` is given, every flag atom must be in it."""
    tokens = _tokenize(text)
    if not tokens:
        raise ConditionSyntaxError("empty expression")
    parser = _Parser(tokens, known)
    result = parser.expr()
    if parser.peek() is not None:
        raise ConditionSyntaxError(f"trailing token {parser.peek()!r}")
    return result


def is_trivial(condition: Condition) -> bool:
    """True when the predicate references no flags (it is constant)."""
    return not condition.flags()


def truth_table(names: Collection[str]) -> Iterator[dict[str, bool]]:
    """Every total assignment over ``names`` in lexicographic order."""
    ordered = sorted(names)
    for values in product((False, True), repeat=len(ordered)):
        yield dict(zip(ordered, values))
