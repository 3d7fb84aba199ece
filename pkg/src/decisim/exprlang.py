"""Objective-expression mini-language: parse, print, evaluate.

Grammar (whitespace-insensitive, left-associative, the usual precedence):

    expr   := term (("+" | "-") term)*
    term   := factor (("*" | "/") factor)*
    factor := "-" factor | atom
    atom   := NUMBER | IDENT | FUNC "(" expr ("," expr)* ")" | "(" expr ")"
    NUMBER := digits ["." digits] [("e" | "E") ["+" | "-"] digits]
    IDENT  := [a-z][a-z0-9_]*

``months`` and ``years`` are builtin identifiers supplied by the evaluation
scope (``years`` is always ``months / 12``).  ``max``, ``min`` and ``abs``
are the only functions: max/min take exactly two arguments, abs takes one.
Builtin and function names are reserved words.

Division by the literal 0 is rejected at parse time; division by an
expression that happens to evaluate to zero is a runtime error, because the
value depends on the sampled scenario.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

import numpy as np

BUILTINS = ("months", "years")
FUNCTIONS = {"max": 2, "min": 2, "abs": 1}

IDENT_RE = re.compile(r"[a-z][a-z0-9_]*", re.ASCII)
NUMBER_RE = re.compile(r"[0-9]+(?:\.[0-9]+)?(?:[eE][+-]?[0-9]+)?", re.ASCII)


# ---------------------------------------------------------------------------
# errors

class ExprError(Exception):
    """Base class for expression-language errors."""


class ExprSyntaxError(ExprError):
    def __init__(self, position: int, expected: tuple[str, ...] = (), message: str = ""):
        self.position = position
        self.expected = expected
        if not message:
            message = f"syntax error at offset {position}"
            if expected:
                message += ", expected " + " or ".join(expected)
        super().__init__(message)


class UnknownFunctionError(ExprError):
    def __init__(self, name: str, position: int):
        self.name = name
        self.position = position
        super().__init__(f"unknown function {name!r} at offset {position}")


class UnboundIdentifierError(ExprError):
    def __init__(self, name: str):
        self.name = name
        super().__init__(f"unbound identifier {name!r}")


class DivisionByZeroError(ExprError):
    def __init__(self, position: int = -1):
        self.position = position
        super().__init__(f"division by zero (operator at offset {position})")


class NonFiniteResultError(ExprError):
    def __init__(self):
        super().__init__("expression produced a non-finite value")


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Number:
    value: float


@dataclass(frozen=True)
class Ident:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"
    pos: int = field(default=-1, compare=False, repr=False)


@dataclass(frozen=True)
class Neg:
    operand: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]


Expr = Union[Number, Ident, BinOp, Neg, Call]


@dataclass(frozen=True)
class EvalScope:
    """Identifier values plus the builtin time horizon."""

    values: Mapping[str, float]
    months: float

    @property
    def years(self) -> float:
        return self.months / 12.0


# ---------------------------------------------------------------------------
# lexer

_OPS = "+-*/(),"


def _tokens(source: str) -> Iterator[tuple[str, str, int]]:
    """Yield (kind, text, position); kind in {num, ident, op, eof}."""
    i, n = 0, len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r\n":
            i += 1
            continue
        if ch in _OPS:
            yield ("op", ch, i)
            i += 1
            continue
        if "0" <= ch <= "9":
            m = NUMBER_RE.match(source, i)
            assert m is not None
            yield ("num", m.group(0), i)
            i = m.end()
            continue
        m = IDENT_RE.match(source, i)
        if m:
            yield ("ident", m.group(0), i)
            i = m.end()
            continue
        raise ExprSyntaxError(i, message=f"unexpected character {ch!r} at offset {i}")
    yield ("eof", "", n)


class _Parser:
    def __init__(self, source: str):
        self.toks = list(_tokens(source))
        self.i = 0

    def peek(self) -> tuple[str, str, int]:
        return self.toks[self.i]

    def advance(self) -> tuple[str, str, int]:
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def expect_op(self, text: str) -> tuple[str, str, int]:
        kind, val, pos = self.peek()
        if kind == "op" and val == text:
            return self.advance()
        raise ExprSyntaxError(pos, expected=(text,))

    def parse(self) -> Expr:
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "eof":
            raise ExprSyntaxError(pos, expected=("operator", "end of input"))
        return node

    def expr(self) -> Expr:
        node = self.term()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "+-":
                self.advance()
                node = BinOp(val, node, self.term(), pos=pos)
            else:
                return node

    def term(self) -> Expr:
        node = self.factor()
        while True:
            kind, val, pos = self.peek()
            if kind == "op" and val in "*/":
                self.advance()
                right = self.factor()
                if val == "/" and isinstance(right, Number) and right.value == 0.0:
                    raise ExprSyntaxError(pos, message=f"division by constant zero at offset {pos}")
                node = BinOp(val, node, right, pos=pos)
            else:
                return node

    def factor(self) -> Expr:
        kind, val, pos = self.peek()
        if kind == "op" and val == "-":
            self.advance()
            return Neg(self.factor())
        return self.atom()

    def atom(self) -> Expr:
        kind, val, pos = self.advance()
        if kind == "num":
            value = float(val)
            if not math.isfinite(value):
                raise ExprSyntaxError(pos, message=f"number literal at offset {pos} overflows")
            return Number(value)
        if kind == "ident":
            nxt_kind, nxt_val, nxt_pos = self.peek()
            is_call = nxt_kind == "op" and nxt_val == "("
            if val in FUNCTIONS:
                if not is_call:
                    raise ExprSyntaxError(nxt_pos, expected=("(",))
                return self.call(val, pos)
            if is_call:
                raise UnknownFunctionError(val, pos)
            return Ident(val)
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(pos, expected=("number", "identifier", "("))

    def call(self, func: str, pos: int) -> Expr:
        self.expect_op("(")
        args = [self.expr()]
        while True:
            kind, val, p = self.peek()
            if kind == "op" and val == ",":
                self.advance()
                args.append(self.expr())
            else:
                break
        _, _, close_pos = self.expect_op(")")
        arity = FUNCTIONS[func]
        if len(args) != arity:
            raise ExprSyntaxError(
                close_pos,
                message=f"{func} takes exactly {arity} argument(s), got {len(args)}",
            )
        return Call(func, tuple(args))


def parse(source: str) -> Expr:
    """Parse a source string into an expression tree.

    Raises ExprSyntaxError or UnknownFunctionError; never anything else,
    whatever the input bytes.
    """
    return _Parser(source).parse()


# ---------------------------------------------------------------------------
# inspection and printing

def identifiers(expr: Expr) -> list[str]:
    """Non-builtin identifiers in first-occurrence order, deduplicated."""
    seen: list[str] = []

    def walk(node: Expr) -> None:
        if isinstance(node, Ident):
            if node.name not in BUILTINS and node.name not in seen:
                seen.append(node.name)
        elif isinstance(node, BinOp):
            walk(node.left)
            walk(node.right)
        elif isinstance(node, Neg):
            walk(node.operand)
        elif isinstance(node, Call):
            for arg in node.args:
                walk(arg)

    walk(expr)
    return seen


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2}
_NEG_PREC = 3
_ATOM_PREC = 9


def _prec(node: Expr) -> int:
    if isinstance(node, BinOp):
        return _PREC[node.op]
    if isinstance(node, Neg):
        return _NEG_PREC
    return _ATOM_PREC


def to_source(expr: Expr) -> str:
    """Render a tree back to source; parse(to_source(t)) == t structurally."""
    if isinstance(expr, Number):
        return repr(expr.value)
    if isinstance(expr, Ident):
        return expr.name
    if isinstance(expr, Neg):
        inner = to_source(expr.operand)
        if _prec(expr.operand) < _NEG_PREC:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(expr, Call):
        return f"{expr.func}({', '.join(to_source(a) for a in expr.args)})"
    if isinstance(expr, BinOp):
        p = _PREC[expr.op]
        left = to_source(expr.left)
        if _prec(expr.left) < p:
            left = f"({left})"
        right = to_source(expr.right)
        # Operators are left-associative, so a right child at equal precedence
        # needs parens to keep the tree shape (a + (b + c) vs a + b + c).
        if _prec(expr.right) <= p:
            right = f"({right})"
        return f"{left} {expr.op} {right}"
    raise TypeError(f"not an expression node: {expr!r}")


# ---------------------------------------------------------------------------
# evaluation

def eval_expr(expr: Expr, scope: EvalScope) -> float:
    """Evaluate to a float; IEEE arithmetic, deterministic."""
    if isinstance(expr, Number):
        return expr.value
    if isinstance(expr, Ident):
        if expr.name == "months":
            return scope.months
        if expr.name == "years":
            return scope.years
        try:
            return float(scope.values[expr.name])
        except KeyError:
            raise UnboundIdentifierError(expr.name) from None
    if isinstance(expr, Neg):
        return -eval_expr(expr.operand, scope)
    if isinstance(expr, Call):
        args = [eval_expr(a, scope) for a in expr.args]
        if expr.func == "max":
            return max(args)
        if expr.func == "min":
            return min(args)
        return abs(args[0])
    if isinstance(expr, BinOp):
        left = eval_expr(expr.left, scope)
        right = eval_expr(expr.right, scope)
        if expr.op == "+":
            value = left + right
        elif expr.op == "-":
            value = left - right
        elif expr.op == "*":
            value = left * right
        else:
            if right == 0.0:
                raise DivisionByZeroError(expr.pos)
            value = left / right
        if not math.isfinite(value):
            raise NonFiniteResultError()
        return value
    raise TypeError(f"not an expression node: {expr!r}")


def eval_vector(expr: Expr, values: Mapping[str, "np.ndarray | float"], months: float):
    """Evaluate over numpy arrays (or scalars) in one pass per node.

    Semantically identical to eval_expr applied elementwise: raises
    DivisionByZeroError if any denominator element is zero and
    NonFiniteResultError if any intermediate overflows.
    """
    if isinstance(expr, Number):
        return expr.value
    if isinstance(expr, Ident):
        if expr.name == "months":
            return months
        if expr.name == "years":
            return months / 12.0
        try:
            return values[expr.name]
        except KeyError:
            raise UnboundIdentifierError(expr.name) from None
    if isinstance(expr, Neg):
        return -eval_vector(expr.operand, values, months)
    if isinstance(expr, Call):
        args = [eval_vector(a, values, months) for a in expr.args]
        if expr.func == "max":
            return np.maximum(args[0], args[1])
        if expr.func == "min":
            return np.minimum(args[0], args[1])
        return np.abs(args[0])
    if isinstance(expr, BinOp):
        left = eval_vector(expr.left, values, months)
        right = eval_vector(expr.right, values, months)
        if expr.op == "+":
            value = left + right
        elif expr.op == "-":
            value = left - right
        elif expr.op == "*":
            value = left * right
        else:
            if np.any(np.asarray(right) == 0.0):
                raise DivisionByZeroError(expr.pos)
            value = left / right
        if not np.all(np.isfinite(value)):
            raise NonFiniteResultError()
        return value
    raise TypeError(f"not an expression node: {expr!r}")
