"""Arithmetic expressions in ``x1, x2`` with exact gradients.

Grammar::

    expr    := term (("+" | "-") term)*
    term    := unary (("*" | "/") unary)*
    unary   := ("+" | "-") unary | primary
    primary := NUMBER | "x1" | "x2" | "(" expr ")"

Evaluation uses dual numbers, so every parsed expression also yields its
gradient without finite differences.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

__all__ = ["ExpressionError", "Expression", "parse_expression"]

_TOKEN = re.compile(r"\s*(?:(\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?)|(x1|x2)|(.))")
_ALIASES = {"x₁": "x1", "x₂": "x2", "−": "-", "×": "*", "·": "*"}


class ExpressionError(ValueError):
    def __init__(self, text, pos, message):
        super().__init__(f"{message} at column {pos + 1} in {text!r}")
        self.text = text
        self.pos = pos


def _tokenize(text):
    src = text
    for k, v in _ALIASES.items():
        src = src.replace(k, v)
    tokens = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if m is None or m.end() == pos:
            break
        num, var, other = m.groups()
        start = m.start(m.lastindex) if m.lastindex else pos
        if num is not None:
            tokens.append(("num", float(num), start))
        elif var is not None:
            tokens.append(("var", int(var[1]) - 1, start))
        elif other is not None:
            if other not in "+-*/()":
                raise ExpressionError(text, start, f"unexpected character {other!r}")
            tokens.append((other, None, start))
        pos = m.end()
    tokens.append(("end", None, len(src)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.tokens[self.i][0]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message):
        raise ExpressionError(self.text, self.tokens[self.i][2], message)

    def parse(self):
        if self.peek() == "end":
            self.fail("empty expression")
        node = self.expr()
        if self.peek() != "end":
            self.fail("trailing input")
        return node

    def expr(self):
        node = self.term()
        while self.peek() in ("+", "-"):
            op = self.take()[0]
            node = (op, node, self.term())
        return node

    def term(self):
        node = self.unary()
        while self.peek() in ("*", "/"):
            op = self.take()[0]
            node = (op, node, self.unary())
        return node

    def unary(self):
        if self.peek() in ("+", "-"):
            op = self.take()[0]
            inner = self.unary()
            return inner if op == "+" else ("neg", inner)
        return self.primary()

    def primary(self):
        kind, value, _ = self.tokens[self.i]
        if kind == "num":
            self.i += 1
            return ("num", value)
        if kind == "var":
            self.i += 1
            return ("var", value)
        if kind == "(":
            self.i += 1
            node = self.expr()
            if self.peek() != ")":
                self.fail("expected ')'")
            self.i += 1
            return node
        self.fail("expected a number, x1, x2 or '('")


def _eval(node, x):
    """Return ``(value, gradient)`` with gradient on a trailing axis."""
    kind = node[0]
    shape = x.shape[:-1]
    d = x.shape[-1]
    if kind == "num":
        return np.full(shape, node[1]), np.zeros(shape + (d,))
    if kind == "var":
        k = node[1]
        if k >= d:
            raise ValueError(f"x{k + 1} used on a {d}-dimensional domain")
        grad = np.zeros(shape + (d,))
        grad[..., k] = 1.0
        return x[..., k].astype(float), grad
    if kind == "neg":
        v, g = _eval(node[1], x)
        return -v, -g
    (a, ga), (b, gb) = _eval(node[1], x), _eval(node[2], x)
    if kind == "+":
        return a + b, ga + gb
    if kind == "-":
        return a - b, ga - gb
    if kind == "*":
        return a * b, ga * b[..., None] + a[..., None] * gb
    with np.errstate(divide="ignore", invalid="ignore"):
        return a / b, (ga * b[..., None] - a[..., None] * gb) / (b ** 2)[..., None]


def _uses(node, k):
    if node[0] == "var":
        return node[1] == k
    return any(_uses(c, k) for c in node[1:] if isinstance(c, tuple))


@dataclass(frozen=True)
class Expression:
    text: str
    tree: tuple

    def __call__(self, x):
        return _eval(self.tree, np.asarray(x, dtype=float))[0]

    def gradient(self, x):
        return _eval(self.tree, np.asarray(x, dtype=float))[1]

    @property
    def is_constant(self):
        return not (_uses(self.tree, 0) or _uses(self.tree, 1))

    def constant_value(self):
        return float(_eval(self.tree, np.zeros((1, 2)))[0][0])


def parse_expression(text):
    """Parse ``text`` into an :class:`Expression`."""
    return Expression(text.strip(), _Parser(text).parse())
