"""A tiny arithmetic language for coefficient fields a(x, y).

Grammar (whitespace is ignored)::

    expr     := term (('+' | '-') term)*
    term     := unary (('*' | '/') unary)*
    unary    := '-' unary | power
    power    := atom ('^' exponent)?
    exponent := '-' exponent | power
    atom     := NUMBER | NAME | NAME '(' expr ')' | '(' expr ')'

so ``^`` binds tighter than unary minus (``-2^2 == -4``) and associates to the
right, while ``+ - * /`` associate to the left.  Evaluation accepts scalars or
numpy arrays for ``x`` and ``y``.
"""
import math
import re
from dataclasses import dataclass

import numpy as np

from .errors import ExprDomainError, ExprNameError, ExprSyntaxError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.sqrt,
    "abs": np.abs,
}
CONSTANTS = {"pi": math.pi, "e": math.e}
VARIABLES = ("x", "y")

_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4}
_ATOM = 5


class Expr:
    """Base class of expression nodes.  Nodes are immutable and hashable."""

    prec = _ATOM

    def __call__(self, x, y):
        return eval_expr(self, x, y)

    def __str__(self):
        return pretty(self)


@dataclass(frozen=True)
class Num(Expr):
    value: float

    @property
    def prec(self):
        return _PREC["neg"] if self.value < 0 else _ATOM

    def _eval(self, x, y):
        return np.float64(self.value)


@dataclass(frozen=True)
class Name(Expr):
    """A variable (x, y) or a named constant (pi, e)."""

    name: str

    def _eval(self, x, y):
        if self.name == "x":
            return x
        if self.name == "y":
            return y
        return np.float64(CONSTANTS[self.name])


@dataclass(frozen=True)
class Neg(Expr):
    operand: Expr
    prec = _PREC["neg"]

    def _eval(self, x, y):
        return -_checked(self.operand, x, y)


@dataclass(frozen=True)
class BinOp(Expr):
    op: str
    left: Expr
    right: Expr

    @property
    def prec(self):
        return _PREC[self.op]

    def _eval(self, x, y):
        a = _checked(self.left, x, y)
        b = _checked(self.right, x, y)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            return a / b
        return np.power(a, b)


@dataclass(frozen=True)
class Call(Expr):
    func: str
    arg: Expr

    def _eval(self, x, y):
        return FUNCTIONS[self.func](_checked(self.arg, x, y))


def _checked(node, x, y):
    value = node._eval(x, y)
    if not np.all(np.isfinite(value)):
        raise ExprDomainError(pretty(node))
    return value


def eval_expr(expr, x, y):
    """Evaluate ``expr`` at (x, y); raises ExprDomainError on inf/nan."""
    with np.errstate(all="ignore"):
        value = _checked(expr, np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    shape = np.broadcast(np.asarray(x), np.asarray(y)).shape
    if not shape:
        return float(value)
    return np.broadcast_to(value, shape).astype(float)


_TOKEN = re.compile(r"""
    (?P<ws>\s+)
  | (?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<name>[A-Za-z_][A-Za-z_0-9]*)
  | (?P<op>[-+*/^()])
""", re.VERBOSE)


def _tokenize(text):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos + 1)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos + 1))
        pos = m.end()
    tokens.append(("end", "", len(text) + 1))
    return tokens


class _Parser:
    def __init__(self, text):
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, col = self.take()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprSyntaxError(f"expected {value!r}, found {found}", col)

    def parse(self):
        node = self.expr()
        kind, text, col = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"unexpected {text!r}", col)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = BinOp(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return BinOp("^", base, self.exponent())
        return base

    def exponent(self):
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Neg(self.exponent())
        return self.power()

    def atom(self):
        kind, text, col = self.take()
        if kind == "num":
            return Num(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in VARIABLES or text in CONSTANTS:
                return Name(text)
            raise ExprNameError(text, col)
        if (kind, text) == ("op", "("):
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprSyntaxError(f"unexpected {found}", col)


def parse_expr(text):
    """Parse ``text`` into an expression tree."""
    if not isinstance(text, str) or not text.strip():
        raise ExprSyntaxError("empty expression", 1)
    return _Parser(text).parse()


def _fmt_num(value):
    if value == int(value) and abs(value) < 1e15:
        return str(int(value))
    return repr(value)


def pretty(node):
    """Render with the fewest parentheses that preserve the tree shape."""
    if isinstance(node, Num):
        if node.value < 0:
            return pretty(Neg(Num(-node.value)))
        return _fmt_num(node.value)
    if isinstance(node, Name):
        return node.name
    if isinstance(node, Call):
        return f"{node.func}({pretty(node.arg)})"
    if isinstance(node, Neg):
        inner = pretty(node.operand)
        if node.operand.prec < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    p = node.prec
    left = pretty(node.left)
    right = pretty(node.right)
    if node.op == "^":
        if node.left.prec <= p:
            left = f"({left})"
        if node.right.prec < p and not isinstance(node.right, Neg):
            right = f"({right})"
    else:
        if node.left.prec < p:
            left = f"({left})"
        if node.right.prec <= p:
            right = f"({right})"
    return f"{left}{node.op}{right}"


def scale(expr, factor):
    """Expression for ``factor * expr``."""
    return BinOp("*", Num(float(factor)), expr)
