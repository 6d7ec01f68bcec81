"""Small expression language for coefficients and data.

Grammar (lowest to highest precedence)::

    expr    := term (('+' | '-') term)*
    term    := unary (('*' | '/') unary)*
    unary   := ('-' | '+') unary | power
    power   := atom ('^' exponent)?        # right-associative
    exponent:= ('-' | '+') exponent | atom ('^' exponent)?   # must fold to an integer
    atom    := NUMBER | 'x' | 'y' | 'pi' | FUNC '(' expr ')' | '(' expr ')'

``FUNC`` is one of sin, cos, exp.  Constant subtrees are folded while parsing.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from .poly import Poly2

FUNCTIONS = {"sin": np.sin, "cos": np.cos, "exp": np.exp}
PI = 3.141592653589793


class ExprSyntaxError(ValueError):
    def __init__(self, message: str, offset: int, expected: Tuple[str, ...] = ()):
        self.offset = offset
        self.expected = tuple(expected)
        detail = f" (expected one of: {', '.join(self.expected)})" if self.expected else ""
        super().__init__(f"{message} at offset {offset}{detail}")


class ExprEvalError(ArithmeticError):
    pass


class NonPolynomialError(ValueError):
    pass


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # 'x' or 'y'


@dataclass(frozen=True)
class Neg:
    arg: "Expr"


@dataclass(frozen=True)
class BinOp:
    op: str  # one of + - * /
    left: "Expr"
    right: "Expr"


@dataclass(frozen=True)
class Pow:
    base: "Expr"
    exponent: int


@dataclass(frozen=True)
class Call:
    func: str
    arg: "Expr"


Expr = Union[Num, Var, Neg, BinOp, Pow, Call]


def Add(a, b):
    return BinOp("+", a, b)


def Sub(a, b):
    return BinOp("-", a, b)


def Mul(a, b):
    return BinOp("*", a, b)


def Div(a, b):
    return BinOp("/", a, b)


# --------------------------------------------------------------------------
# lexer
# --------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_]\w*)|(?P<op>[-+*/^()]))"
)


@dataclass(frozen=True)
class Token:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    offset: int


def tokenize(text: str):
    toks = []
    pos = 0
    n = len(text)
    while True:
        while pos < n and text[pos].isspace():
            pos += 1
        if pos >= n:
            toks.append(Token("end", "", len(text.encode("utf-8"))))
            return toks
        m = _TOKEN.match(text, pos)
        if m is None or m.end() == pos:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", _byte_offset(text, pos))
        kind = m.lastgroup
        start = m.start(kind)
        toks.append(Token(kind, m.group(kind), _byte_offset(text, start)))
        pos = m.end()


def _byte_offset(text: str, pos: int) -> int:
    return len(text[:pos].encode("utf-8"))


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

_ATOM_START = ("number", "x", "y", "pi", "sin", "cos", "exp", "(")


class _Parser:
    def __init__(self, text: str):
        self.toks = tokenize(text)
        self.i = 0

    @property
    def tok(self) -> Token:
        return self.toks[self.i]

    def advance(self) -> Token:
        t = self.toks[self.i]
        self.i += 1
        return t

    def at_op(self, *ops) -> bool:
        return self.tok.kind == "op" and self.tok.text in ops

    def expect_op(self, op: str):
        if not self.at_op(op):
            raise ExprSyntaxError(f"unexpected {self._describe()}", self.tok.offset, (f"'{op}'",))
        self.advance()

    def _describe(self) -> str:
        return "end of input" if self.tok.kind == "end" else f"token {self.tok.text!r}"

    def parse(self) -> Expr:
        node = self.expr()
        if self.tok.kind != "end":
            raise ExprSyntaxError(
                f"unexpected {self._describe()}", self.tok.offset, ("'+'", "'-'", "'*'", "'/'", "'^'", "end")
            )
        return node

    def expr(self) -> Expr:
        node = self.term()
        while self.at_op("+", "-"):
            op = self.advance().text
            node = _fold(BinOp(op, node, self.term()))
        return node

    def term(self) -> Expr:
        node = self.unary()
        while self.at_op("*", "/"):
            op = self.advance().text
            node = _fold(BinOp(op, node, self.unary()))
        return node

    def unary(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            return _fold(Neg(self.unary()))
        if self.at_op("+"):
            self.advance()
            return self.unary()
        return self.power()

    def power(self) -> Expr:
        base = self.atom()
        if self.at_op("^"):
            self.advance()
            start = self.tok.offset
            exp = self.exponent()
            if not isinstance(exp, Num) or not math.isfinite(exp.value) or exp.value != int(exp.value):
                raise ExprSyntaxError("exponent must be an integer constant", start)
            if abs(exp.value) > 64:
                raise ExprSyntaxError("exponent magnitude above 64", start)
            return _fold(Pow(base, int(exp.value)))
        return base

    def exponent(self) -> Expr:
        if self.at_op("-"):
            self.advance()
            return _fold(Neg(self.exponent()))
        if self.at_op("+"):
            self.advance()
            return self.exponent()
        return self.power()

    def atom(self) -> Expr:
        t = self.tok
        if t.kind == "num":
            self.advance()
            return Num(float(t.text))
        if t.kind == "name":
            self.advance()
            if t.text in ("x", "y"):
                return Var(t.text)
            if t.text == "pi":
                return Num(PI)
            if t.text in FUNCTIONS:
                self.expect_op("(")
                arg = self.expr()
                self.expect_op(")")
                return _fold(Call(t.text, arg))
            raise ExprSyntaxError(f"unknown identifier {t.text!r}", t.offset, _ATOM_START)
        if self.at_op("("):
            self.advance()
            node = self.expr()
            self.expect_op(")")
            return node
        raise ExprSyntaxError(f"unexpected {self._describe()}", t.offset, _ATOM_START + ("'-'",))


def parse(text: str) -> Expr:
    """Parse ``text`` into an expression tree; raises :class:`ExprSyntaxError`."""
    try:
        return _Parser(text).parse()
    except RecursionError:
        raise ExprSyntaxError("expression nested too deeply", 0) from None


def _fold(node: Expr) -> Expr:
    """Replace a node whose children are all constants by its value."""
    with np.errstate(all="ignore"):
        try:
            return _fold_constants(node)
        except (OverflowError, ZeroDivisionError):
            return node


def _fold_constants(node: Expr) -> Expr:
    if isinstance(node, BinOp) and isinstance(node.left, Num) and isinstance(node.right, Num):
        a, b = node.left.value, node.right.value
        if node.op == "/" and b == 0:
            return node  # reported at evaluation
        return Num(_apply(node.op, a, b))
    if isinstance(node, Neg) and isinstance(node.arg, Num):
        return Num(-node.arg.value)
    if isinstance(node, Pow) and isinstance(node.base, Num):
        if node.base.value == 0 and node.exponent < 0:
            return node
        return Num(float(node.base.value) ** node.exponent)
    if isinstance(node, Call) and isinstance(node.arg, Num):
        return Num(float(FUNCTIONS[node.func](node.arg.value)))
    return node


def _apply(op: str, a, b):
    if op == "+":
        return a + b
    if op == "-":
        return a - b
    if op == "*":
        return a * b
    return a / b


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def evaluate(node: Expr, x, y):
    """Evaluate elementwise at ``(x, y)`` (scalars or arrays)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    with np.errstate(over="ignore", invalid="ignore"):
        out = _eval(node, x, y)
    return np.broadcast_to(out, np.broadcast(x, y).shape) * 1.0


def _eval(node: Expr, x, y):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else y
    if isinstance(node, Neg):
        return -_eval(node.arg, x, y)
    if isinstance(node, BinOp):
        a = _eval(node.left, x, y)
        b = _eval(node.right, x, y)
        if node.op == "/" and np.any(np.asarray(b) == 0):
            raise ExprEvalError("division by zero")
        return _apply(node.op, a, b)
    if isinstance(node, Pow):
        b = _eval(node.base, x, y)
        if node.exponent < 0:
            if np.any(np.asarray(b) == 0):
                raise ExprEvalError("division by zero")
            return 1.0 / np.asarray(b, dtype=float) ** (-node.exponent)
        return np.asarray(b, dtype=float) ** node.exponent
    if isinstance(node, Call):
        return FUNCTIONS[node.func](_eval(node.arg, x, y))
    raise TypeError(f"not an expression node: {node!r}")


class Function2:
    """Callable ``f(x, y)`` wrapper around a parsed expression."""

    def __init__(self, text: str):
        self.text = text
        self.tree = parse(text)

    def __call__(self, x, y):
        return evaluate(self.tree, x, y)

    def __repr__(self):
        return f"Function2({self.text!r})"


# --------------------------------------------------------------------------
# polynomial extraction
# --------------------------------------------------------------------------

def to_polynomial(node: Expr) -> Poly2:
    """Exact expansion of a polynomial expression.

    Division is accepted only by a nonzero constant.  Raises
    :class:`NonPolynomialError` for sin/cos/exp of a non-constant argument,
    division by a non-constant and negative powers.
    """
    if isinstance(node, Num):
        return Poly2.constant(node.value)
    if isinstance(node, Var):
        return Poly2.x() if node.name == "x" else Poly2.y()
    if isinstance(node, Neg):
        return -to_polynomial(node.arg)
    if isinstance(node, BinOp):
        a = to_polynomial(node.left)
        if node.op == "/":
            if not isinstance(node.right, Num) or node.right.value == 0:
                raise NonPolynomialError("non-polynomial coefficient: division by a non-constant")
            return a * (1.0 / node.right.value)
        b = to_polynomial(node.right)
        return a + b if node.op == "+" else a - b if node.op == "-" else a * b
    if isinstance(node, Pow):
        if node.exponent < 0:
            raise NonPolynomialError("non-polynomial coefficient: negative power")
        return to_polynomial(node.base) ** node.exponent
    if isinstance(node, Call):
        raise NonPolynomialError(f"non-polynomial coefficient: {node.func}() of a non-constant")
    raise TypeError(f"not an expression node: {node!r}")


def parse_polynomial(text: str) -> Poly2:
    return to_polynomial(parse(text))
