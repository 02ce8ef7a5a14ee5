"""A small expression language for coefficients.

Grammar (lowest precedence first)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" unary)?          # right associative, -x^2 = -(x^2)
    atom   := number | name | name "(" expr ")" | "(" expr ")"

Names: the variables x, y, t, rho, theta, r, the imaginary unit i and pi.
Functions: sin, cos, exp, sqrt, abs, re, im, conj.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput

VARIABLES = ("x", "y", "t", "rho", "theta", "r")
CONSTANTS = {"i": 1j, "pi": np.pi}
FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "exp": np.exp,
    "sqrt": np.lib.scimath.sqrt,
    "abs": np.abs,
    "re": np.real,
    "im": np.imag,
    "conj": np.conj,
}


class ExpressionError(InvalidInput):
    def __init__(self, message: str, source: str, pos: int):
        line = source.count("\n", 0, pos) + 1
        col = pos - (source.rfind("\n", 0, pos) + 1) + 1
        super().__init__(f"{message} at line {line}, column {col}")
        self.line, self.column, self.pos = line, col, pos


# AST -----------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Name:
    id: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: object


@dataclass(frozen=True)
class Binary:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class Call:
    fn: str
    arg: object


_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|([A-Za-z_]\w*)|(\S))")


def _tokens(src: str):
    pos = 0
    out = []
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m or m.end() == pos:
            break
        num, name, op = m.groups()
        start = m.start(m.lastindex)
        if num is not None:
            out.append(("num", num, start))
        elif name is not None:
            out.append(("name", name, start))
        else:
            if op not in "+-*/^()":
                raise ExpressionError(f"unexpected character {op!r}", src, start)
            out.append(("op", op, start))
        pos = m.end()
    out.append(("end", "", len(src)))
    return out


class _Parser:
    def __init__(self, src: str):
        self.src = src
        self.toks = _tokens(src)
        self.i = 0

    def peek(self):
        return self.toks[self.i]

    def take(self):
        tok = self.toks[self.i]
        self.i += 1
        return tok

    def error(self, msg, tok=None):
        tok = tok or self.peek()
        raise ExpressionError(msg, self.src, tok[2])

    def expect(self, op):
        tok = self.take()
        if tok[0] != "op" or tok[1] != op:
            self.error(f"expected {op!r}", tok)

    def parse(self):
        if self.peek()[0] == "end":
            self.error("empty expression")
        node = self.expr()
        if self.peek()[0] != "end":
            self.error(f"unexpected {self.peek()[1]!r}")
        return node

    def expr(self):
        node = self.term()
        while self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            node = Binary(op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek()[:2] in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self):
        if self.peek()[:2] in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            return Unary(op, self.unary())
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek()[:2] == ("op", "^"):
            self.take()
            return Binary("^", base, self.unary())
        return base

    def atom(self):
        tok = self.take()
        kind, text, _ = tok
        if kind == "num":
            value = float(text)
            if not np.isfinite(value):
                self.error(f"number {text!r} overflows", tok)
            return Num(value)
        if kind == "name":
            if text in FUNCTIONS:
                if self.peek()[:2] != ("op", "("):
                    self.error(f"function {text!r} needs an argument")
                self.take()
                arg = self.expr()
                self.expect(")")
                return Call(text, arg)
            if text in VARIABLES or text in CONSTANTS:
                return Name(text)
            self.error(f"unknown identifier {text!r}", tok)
        if kind == "op" and text == "(":
            node = self.expr()
            self.expect(")")
            return node
        self.error("unexpected end of input" if kind == "end" else f"unexpected {text!r}", tok)


@dataclass(frozen=True)
class Expression:
    source: str
    tree: object

    def __call__(self, **env):
        return _eval(self.tree, env)

    def variables(self) -> set:
        return _names(self.tree) & set(VARIABLES)

    def __str__(self):
        return to_string(self.tree)


def parse_expression(source: str) -> Expression:
    if not isinstance(source, str):
        raise InvalidInput("expression source must be text")
    return Expression(source, _Parser(source).parse())


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "^": 4}


def to_string(node, parent: int = 0, right: bool = False) -> str:
    """Minimal-parenthesis rendering that parses back to the same tree."""
    if isinstance(node, Num):
        return repr(node.value)
    if isinstance(node, Name):
        return node.id
    if isinstance(node, Call):
        return f"{node.fn}({to_string(node.arg)})"
    if isinstance(node, Unary):
        s = node.op + to_string(node.operand, 3)
        return f"({s})" if parent > 3 else s
    p = _PREC[node.op]
    if node.op == "^":
        s = f"{to_string(node.left, 5)}^{to_string(node.right, 3, True)}"
    else:
        s = f"{to_string(node.left, p)}{node.op}{to_string(node.right, p + 1, True)}"
    return f"({s})" if p < parent else s


def _names(node) -> set:
    if isinstance(node, Name):
        return {node.id}
    if isinstance(node, Num):
        return set()
    if isinstance(node, Unary):
        return _names(node.operand)
    if isinstance(node, Call):
        return _names(node.arg)
    return _names(node.left) | _names(node.right)


def _eval(node, env):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Name):
        if node.id in CONSTANTS:
            return CONSTANTS[node.id]
        if node.id not in env:
            raise InvalidInput(f"no value for variable {node.id!r}")
        return env[node.id]
    if isinstance(node, Unary):
        v = _eval(node.operand, env)
        return -v if node.op == "-" else v
    if isinstance(node, Call):
        return FUNCTIONS[node.fn](_eval(node.arg, env))
    a, b = _eval(node.left, env), _eval(node.right, env)
    if node.op == "+":
        return a + b
    if node.op == "-":
        return a - b
    if node.op == "*":
        return a * b
    if node.op == "/":
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.true_divide(a, b)
    if isinstance(b, (int, float)) and float(b).is_integer() and abs(b) <= 64:
        return a ** int(b)
    return np.power(np.asarray(a, dtype=complex) if np.any(np.asarray(a) < 0) else a, b)
