"""Arithmetic expressions in ``x1..xd`` for user-defined residual fields.

Grammar, loosest to tightest::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("-" | "+") unary | power
    power  := atom ("^" unary)?          # right-associative
    atom   := NUMBER | "pi" | VAR | FUNC "(" expr ("," expr)* ")" | "(" expr ")"

so ``-x1^2`` is ``-(x1^2)`` and ``2^-x1`` is ``2^(-x1)``.  Evaluation uses
IEEE doubles; domain errors (``log(-1)``, ``sqrt(-1)``, ``(-8)^(1/3)``)
produce NaN instead of raising.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np


class ExprError(ValueError):
    """Invalid expression text; ``offset`` is the byte position of the problem."""

    def __init__(self, message: str, offset: int | None = None):
        self.offset = offset
        where = f" at offset {offset}" if offset is not None else ""
        super().__init__(f"{message}{where}")


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Var:
    index: int


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    name: str
    args: tuple


Node = Union[Const, Var, Unary, Binary, Call]


def _nan_on_error(fn):
    def wrapped(*args):
        try:
            return fn(*args)
        except ValueError:
            return math.nan
        except OverflowError:
            return math.inf
    wrapped.__name__ = fn.__name__
    return wrapped


def _log(x):
    return math.log(x) if x > 0 else math.nan


def _sqrt(x):
    return math.sqrt(x) if x >= 0 else math.nan


def _exp(x):
    try:
        return math.exp(x)
    except OverflowError:
        return math.inf


def _min(a, b):
    return math.nan if a != a or b != b else min(a, b)


def _max(a, b):
    return math.nan if a != a or b != b else max(a, b)


FUNCTIONS: dict[str, tuple[int, Callable]] = {
    "sin": (1, _nan_on_error(math.sin)),
    "cos": (1, _nan_on_error(math.cos)),
    "tan": (1, _nan_on_error(math.tan)),
    "exp": (1, _exp),
    "log": (1, _log),
    "sqrt": (1, _sqrt),
    "abs": (1, abs),
    "min": (2, _min),
    "max": (2, _max),
}

CONSTANTS = {"pi": math.pi}


def _pow(a, b):
    try:
        return math.pow(a, b)
    except ValueError:
        if a == 0:  # zero to a negative power: a pole, not a domain error
            odd = float(b).is_integer() and int(b) % 2
            return math.copysign(math.inf, a) if odd else math.inf
        return math.nan
    except OverflowError:
        if a < 0 and float(b).is_integer() and int(b) % 2:
            return -math.inf
        return math.inf


def _div(a, b):
    try:
        return a / b
    except ZeroDivisionError:
        if a == 0 or a != a:
            return math.nan
        return math.copysign(math.inf, a) * math.copysign(1.0, b)


BINARY_OPS: dict[str, Callable[[float, float], float]] = {
    "+": lambda a, b: a + b,
    "-": lambda a, b: a - b,
    "*": lambda a, b: a * b,
    "/": _div,
    "^": _pow,
}

_TOKEN = re.compile(
    r"(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),])"
)


def _tokenize(src: str):
    # offsets are character positions; any non-ASCII character is rejected
    # where it occurs, so they coincide with UTF-8 byte offsets
    tokens = []
    pos = 0
    n = len(src)
    while True:
        while pos < n and src[pos] in " \t\r\n":
            pos += 1
        if pos >= n:
            break
        m = _TOKEN.match(src, pos)
        if m is None:
            raise ExprError(f"unexpected character {src[pos]!r}", pos)
        tokens.append((m.lastgroup, m.group(), pos))
        pos = m.end()
    tokens.append(("end", "", n))
    return tokens


class _Parser:
    def __init__(self, src: str, dim: int):
        self.tokens = _tokenize(src)
        self.i = 0
        self.dim = dim

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value):
        kind, text, off = self.next()
        if text != value or kind != "op":
            found = "end of input" if kind == "end" else repr(text)
            raise ExprError(f"expected {value!r}, found {found}", off)

    def parse(self):
        node = self.expr()
        kind, text, off = self.peek()
        if kind != "end":
            raise ExprError(f"unexpected {text!r}", off)
        return node

    def expr(self):
        node = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.next()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] == "op" and self.peek()[1] in "*/":
            op = self.next()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        kind, text, _ = self.peek()
        if kind == "op" and text in "+-":
            self.next()
            operand = self.unary()
            return Unary("-", operand) if text == "-" else operand
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[0] == "op" and self.peek()[1] == "^":
            self.next()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        kind, text, off = self.next()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if self.peek()[1] == "(" and self.peek()[0] == "op":
                return self.call(text, off)
            if text in CONSTANTS:
                return Const(CONSTANTS[text])
            m = re.fullmatch(r"x([1-9]\d*)", text)
            if m:
                index = int(m.group(1)) - 1
                if index >= self.dim:
                    raise ExprError(f"variable {text} exceeds dimension {self.dim}", off)
                return Var(index)
            if text in FUNCTIONS:
                raise ExprError(f"function {text!r} needs arguments", off)
            raise ExprError(f"unknown identifier {text!r}", off)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ExprError(f"unexpected {found}", off)

    def call(self, name, off):
        if name not in FUNCTIONS:
            raise ExprError(f"unknown function {name!r}", off)
        self.expect("(")
        args = [self.expr()]
        while self.peek()[0] == "op" and self.peek()[1] == ",":
            self.next()
            args.append(self.expr())
        self.expect(")")
        arity = FUNCTIONS[name][0]
        if len(args) != arity:
            raise ExprError(f"{name} takes {arity} argument(s), got {len(args)}", off)
        return Call(name, tuple(args))


def parse(src: str, dim: int) -> Node:
    """Parse ``src`` into an AST over variables ``x1..x{dim}``."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if not src or not src.strip():
        raise ExprError("empty expression", 0)
    return _Parser(src, dim).parse()


def _compile(node: Node) -> Callable[[list], float]:
    if isinstance(node, Const):
        v = node.value
        return lambda x: v
    if isinstance(node, Var):
        i = node.index
        return lambda x: x[i]
    if isinstance(node, Unary):
        inner = _compile(node.operand)
        return lambda x: -inner(x)
    if isinstance(node, Binary):
        op = BINARY_OPS[node.op]
        left, right = _compile(node.left), _compile(node.right)
        return lambda x: op(left(x), right(x))
    if isinstance(node, Call):
        fn = FUNCTIONS[node.name][1]
        if len(node.args) == 1:
            arg = _compile(node.args[0])
            return lambda x: fn(arg(x))
        a, b = (_compile(n) for n in node.args)
        return lambda x: fn(a(x), b(x))
    raise TypeError(f"not an expression node: {node!r}")


def max_var_index(node: Node) -> int:
    """Largest variable index used, or -1 for a constant expression."""
    if isinstance(node, Var):
        return node.index
    if isinstance(node, Unary):
        return max_var_index(node.operand)
    if isinstance(node, Binary):
        return max(max_var_index(node.left), max_var_index(node.right))
    if isinstance(node, Call):
        return max((max_var_index(a) for a in node.args), default=-1)
    return -1


def to_source(node: Node) -> str:
    """Fully parenthesised text that parses back to the same tree."""
    if isinstance(node, Const):
        if node.value < 0 or math.copysign(1.0, node.value) < 0:
            return f"(-{-node.value!r})"
        return repr(node.value)
    if isinstance(node, Var):
        return f"x{node.index + 1}"
    if isinstance(node, Unary):
        return f"(-{to_source(node.operand)})"
    if isinstance(node, Binary):
        return f"({to_source(node.left)} {node.op} {to_source(node.right)})"
    if isinstance(node, Call):
        return f"{node.name}({', '.join(to_source(a) for a in node.args)})"
    raise TypeError(f"not an expression node: {node!r}")


class Expression:
    """A parsed expression usable as a residual function ``f(z) -> float``."""

    def __init__(self, src: str, dim: int):
        self.source = src
        self.dim = dim
        self.tree = parse(src, dim)
        self._fn = _compile(self.tree)
        self.__name__ = src

    def __call__(self, z) -> float:
        if isinstance(z, np.ndarray):
            z = z.tolist()
        return self._fn(z)

    def __repr__(self):
        return f"Expression({self.source!r}, dim={self.dim})"


def evaluate_expr(expr, z) -> float:
    """Evaluate a parsed tree (or :class:`Expression`) at point ``z``."""
    if isinstance(expr, Expression):
        return expr(z)
    if isinstance(z, np.ndarray):
        z = z.tolist()
    need = max_var_index(expr)
    if need >= len(z):
        raise ValueError(f"point has {len(z)} coordinates, expression uses x{need + 1}")
    return _compile(expr)(z)
