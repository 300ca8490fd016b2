"""
Small arithmetic expression language used to write plant nonlinearities
and input/disturbance signals.

Grammar (lowest to highest precedence)::

    expr   := term (('+' | '-') term)*
    term   := unary (('*' | '/') unary)*
    unary  := '-' unary | power
    power  := atom ('^' unary)?          # right-associative
    atom   := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

So ``-x^2`` is ``-(x^2)`` and ``2^-1`` is ``2^(-1)``.

Expressions are parsed to an immutable AST, then compiled once to a flat
postfix program (:class:`Program`) which is what the integrators call.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Mapping, Sequence, Union

FUNCTIONS = ("sin", "cos", "tan", "exp", "log", "abs", "sqrt", "sign", "tanh")

# exponents up to this size are done by repeated multiplication
_MAX_INT_POWER = 64


class ExprError(Exception):
    """Base class for everything raised by this module."""


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int, source: str = ""):
        self.message = message
        self.position = position
        self.source = source
        super().__init__(f"{message} at byte {position}")


class UnknownVariableError(ExprSyntaxError):
    pass


class UnknownFunctionError(ExprSyntaxError):
    pass


class ArityError(ExprSyntaxError):
    pass


class DomainError(ExprError, ArithmeticError):
    """Raised when an operation has no real value, e.g. ``log(-1)``."""

    def __init__(self, message: str, subexpr: str):
        self.subexpr = subexpr
        super().__init__(f"{message} in `{subexpr}`")


# ---------------------------------------------------------------------------
# AST
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * / ^
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Call]


def variables(e: Expr) -> frozenset:
    """Names of all variables occurring in ``e``."""
    if isinstance(e, Var):
        return frozenset((e.name,))
    if isinstance(e, Num):
        return frozenset()
    if isinstance(e, (Neg, Call)):
        return variables(e.arg)
    return variables(e.left) | variables(e.right)


def format_expr(e: Expr) -> str:
    """Fully parenthesised text form; re-parses to an identical tree."""
    if isinstance(e, Num):
        return repr(float(e.value))
    if isinstance(e, Var):
        return e.name
    if isinstance(e, Neg):
        return f"(-{format_expr(e.arg)})"
    if isinstance(e, Call):
        return f"{e.func}({format_expr(e.arg)})"
    return f"({format_expr(e.left)} {e.op} {format_expr(e.right)})"


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>[-+*/^(),])
    """,
    re.VERBOSE,
)


def _tokenize(source: str):
    # positions are byte offsets into the UTF-8 encoding of source
    tokens = []
    pos = 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise ExprSyntaxError(
                f"unexpected character {source[pos]!r}",
                len(source[:pos].encode("utf-8")),
                source,
            )
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), len(source[:pos].encode("utf-8"))))
        pos = m.end()
    tokens.append(("end", "", len(source.encode("utf-8"))))
    return tokens


class _Parser:
    def __init__(self, source: str, allowed_vars):
        self.source = source
        self.allowed = None if allowed_vars is None else frozenset(allowed_vars)
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def error(self, message, tok, cls=ExprSyntaxError):
        return cls(message, tok[2], self.source)

    def expect(self, text):
        tok = self.take()
        if tok[1] != text or tok[0] != "op":
            found = "end of input" if tok[0] == "end" else repr(tok[1])
            raise self.error(f"expected {text!r}, found {found}", tok)
        return tok

    def parse(self) -> Expr:
        if self.peek()[0] == "end":
            raise self.error("empty expression", self.peek())
        e = self.expr()
        tok = self.peek()
        if tok[0] != "end":
            raise self.error(f"unexpected {tok[1]!r}", tok)
        return e

    def expr(self):
        left = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.term())
        return left

    def term(self):
        left = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            left = BinOp(op, left, self.unary())
        return left

    def unary(self):
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "-":
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        tok = self.peek()
        if tok[0] == "op" and tok[1] == "^":
            self.take()
            return BinOp("^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            nxt = self.peek()
            if nxt[0] == "op" and nxt[1] == "(":
                if text not in FUNCTIONS:
                    raise self.error(f"unknown function `{text}`", tok, UnknownFunctionError)
                self.take()
                if self.peek()[1] == ")":
                    raise self.error(f"`{text}` takes 1 argument, got 0", self.peek(), ArityError)
                arg = self.expr()
                nxt = self.peek()
                if nxt[0] == "op" and nxt[1] == ",":
                    raise self.error(f"`{text}` takes exactly 1 argument", nxt, ArityError)
                self.expect(")")
                return Call(text, arg)
            if text in FUNCTIONS:
                raise self.error(f"function `{text}` used without argument", tok, ArityError)
            if self.allowed is not None and text not in self.allowed:
                raise self.error(f"unknown variable `{text}`", tok, UnknownVariableError)
            return Var(text)
        if kind == "op" and text == "(":
            e = self.expr()
            self.expect(")")
            return e
        found = "end of input" if kind == "end" else repr(text)
        raise self.error(f"unexpected {found}", tok)


def parse_expr(source: str, allowed_vars=None) -> Expr:
    """Parse ``source`` into an AST.

    ``allowed_vars`` restricts which identifiers may appear; ``None``
    accepts any name. Errors carry the byte offset of the offending token.
    """
    return _Parser(source, allowed_vars).parse()


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


def real_power(base: float, expo: float) -> float:
    """``base ** expo`` with exact integer powers and a real-valued domain."""
    if expo == int(expo) and abs(expo) <= _MAX_INT_POWER:
        k = int(abs(expo))
        result = 1.0
        acc = base
        while k:
            if k & 1:
                result *= acc
            acc *= acc
            k >>= 1
        if expo < 0:
            if result == 0.0:
                raise ZeroDivisionError
            return 1.0 / result
        return result
    if base > 0.0:
        return math.exp(expo * math.log(base))
    if base == 0.0:
        if expo > 0.0:
            return 0.0
        raise ZeroDivisionError
    raise ValueError("negative base with non-integer exponent")


def _sign(v):
    return (v > 0.0) - (v < 0.0) + 0.0


def _checked_log(v):
    if v <= 0.0:
        raise ValueError("log of non-positive number")
    return math.log(v)


def _checked_sqrt(v):
    if v < 0.0:
        raise ValueError("sqrt of negative number")
    return math.sqrt(v)


_FUNC_IMPL = {
    "sin": math.sin,
    "cos": math.cos,
    "tan": math.tan,
    "exp": math.exp,
    "log": _checked_log,
    "abs": abs,
    "sqrt": _checked_sqrt,
    "sign": _sign,
    "tanh": math.tanh,
}

# opcodes of the postfix program
PUSH, LOAD, NEG, ADD, SUB, MUL, DIV, POW, CALL = range(9)
_BINOPS = {"+": ADD, "-": SUB, "*": MUL, "/": DIV, "^": POW}


class Program:
    """Flat postfix form of an expression.

    Variables are resolved to slots at compile time; calling the program
    takes a sequence of values ordered like ``slots``.
    """

    __slots__ = ("code", "slots", "expr", "_nodes")

    def __init__(self, expr: Expr, slots: Sequence[str]):
        self.expr = expr
        self.slots = tuple(slots)
        index = {name: k for k, name in enumerate(self.slots)}
        code = []
        nodes = []

        def emit(e):
            if isinstance(e, Num):
                code.append((PUSH, float(e.value)))
            elif isinstance(e, Var):
                if e.name not in index:
                    raise UnknownVariableError(f"unknown variable `{e.name}`", 0)
                code.append((LOAD, index[e.name]))
            elif isinstance(e, Neg):
                emit(e.arg)
                code.append((NEG, None))
            elif isinstance(e, Call):
                emit(e.arg)
                code.append((CALL, _FUNC_IMPL[e.func]))
            else:
                emit(e.left)
                emit(e.right)
                code.append((_BINOPS[e.op], None))
            nodes.append(e)

        # nodes[k] is the subexpression completed by instruction k
        emit(expr)
        self.code = tuple(code)
        self._nodes = tuple(nodes)

    def __call__(self, values: Sequence[float]) -> float:
        stack = []
        push = stack.append
        pop = stack.pop
        pc = 0
        try:
            for pc, (op, arg) in enumerate(self.code):
                if op == LOAD:
                    push(values[arg])
                elif op == PUSH:
                    push(arg)
                elif op == MUL:
                    b = pop()
                    stack[-1] *= b
                elif op == ADD:
                    b = pop()
                    stack[-1] += b
                elif op == SUB:
                    b = pop()
                    stack[-1] -= b
                elif op == CALL:
                    stack[-1] = arg(stack[-1])
                elif op == NEG:
                    stack[-1] = -stack[-1]
                elif op == DIV:
                    b = pop()
                    stack[-1] /= b
                else:
                    b = pop()
                    stack[-1] = real_power(stack[-1], b)
        except (ZeroDivisionError, ValueError, OverflowError) as exc:
            raise DomainError(_describe(exc), format_expr(self._nodes[pc])) from None
        result = stack[0]
        if not math.isfinite(result):
            raise DomainError("non-finite result", format_expr(self.expr))
        return result

    def evaluate(self, env: Mapping[str, float]) -> float:
        try:
            values = [float(env[name]) for name in self.slots]
        except KeyError as exc:
            raise ExprError(f"no value bound for variable {exc.args[0]!r}") from None
        return self(values)


def _describe(exc):
    if isinstance(exc, ZeroDivisionError):
        return "division by zero"
    if isinstance(exc, OverflowError):
        return "overflow"
    return str(exc) or "math domain error"


def compile_expr(e: Expr, slots: Sequence[str] | None = None) -> Program:
    if slots is None:
        slots = sorted(variables(e))
    return Program(e, slots)


def eval_expr(e: Expr | str, env: Mapping[str, float]) -> float:
    """Evaluate ``e`` (an AST or source text) with variables taken from ``env``."""
    if isinstance(e, str):
        e = parse_expr(e)
    return compile_expr(e).evaluate(env)
