"""A small arithmetic-expression compiler for user mass profiles.

Grammar (``^`` binds tighter than unary minus and is right associative)::

    expr   := term (("+" | "-") term)*
    term   := unary (("*" | "/") unary)*
    unary  := ("+" | "-") unary | power
    power  := atom ("^" unary)?
    atom   := NUMBER | NAME | FUNC "(" expr ")" | "(" expr ")"

Compiled expressions are callables ``f(x, **params)`` that accept numpy arrays.
"""
from __future__ import annotations

import re

import numpy as np

from .errors import ParseError

FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "tanh": np.tanh,
    "cosh": np.cosh,
    "sinh": np.sinh,
    "exp": np.exp,
    "ln": np.log,
    "sqrt": np.sqrt,
    "atan": np.arctan,
}
CONSTANTS = {"pi": np.pi, "e": np.e}

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.\d*|\.\d+|\d+)(?:[eE][+-]?\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text):
    pos, out = 0, []
    while pos < len(text):
        if text[pos:].strip() == "":
            break
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            start = pos + (len(text[pos:]) - len(text[pos:].lstrip()))
            raise ParseError(f"unexpected character {text[start]!r}", start, {"number", "name", "operator"})
        kind = m.lastgroup
        out.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text, variables):
        self.text = text
        self.tokens = _tokenize(text)
        self.i = 0
        self.variables = set(variables)

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value, expected):
        kind, val, pos = self.peek()
        if val != value or kind == "end":
            what = "end of input" if kind == "end" else repr(val)
            raise ParseError(f"unexpected {what}", pos, expected)
        return self.take()

    def parse(self):
        node = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected {val!r}", pos, {"+", "-", "*", "/", "^", "end of input"})
        return node

    def expr(self):
        node = self.term()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.term()
            node = _binary(op, node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            rhs = self.unary()
            node = _binary(op, node, rhs)
        return node

    def unary(self):
        kind, val, _ = self.peek()
        if kind == "op" and val in ("+", "-"):
            self.take()
            inner = self.unary()
            return inner if val == "+" else (lambda env, f=inner: -f(env))
        return self.power()

    def power(self):
        base = self.atom()
        kind, val, _ = self.peek()
        if kind == "op" and val == "^":
            self.take()
            exponent = self.unary()
            return lambda env, b=base, e=exponent: np.power(b(env), e(env))
        return base

    def atom(self):
        kind, val, pos = self.take()
        if kind == "num":
            c = float(val)
            return lambda env: c
        if kind == "name":
            if val in FUNCTIONS:
                self.expect("(", {"("})
                arg = self.expr()
                self.expect(")", {")", "+", "-", "*", "/", "^"})
                fn = FUNCTIONS[val]
                return lambda env: fn(arg(env))
            if val in self.variables:
                return lambda env: env[val]
            if val in CONSTANTS:
                c = CONSTANTS[val]
                return lambda env: c
            raise ParseError(
                f"unknown name {val!r}", pos, set(self.variables) | set(CONSTANTS) | set(FUNCTIONS)
            )
        if kind == "op" and val == "(":
            node = self.expr()
            self.expect(")", {")", "+", "-", "*", "/", "^"})
            return node
        what = "end of input" if kind == "end" else repr(val)
        raise ParseError(f"unexpected {what}", pos, {"number", "name", "(", "-", "+"})


def _binary(op, lhs, rhs):
    if op == "+":
        return lambda env: lhs(env) + rhs(env)
    if op == "-":
        return lambda env: lhs(env) - rhs(env)
    if op == "*":
        return lambda env: lhs(env) * rhs(env)
    return lambda env: lhs(env) / rhs(env)


class Expression:
    """A compiled expression in the variable ``x`` and named parameters."""

    def __init__(self, text, params=()):
        self.text = text
        self.params = tuple(params)
        self._fn = _Parser(text, ("x", *self.params)).parse()

    def __call__(self, x, **params):
        missing = set(self.params) - set(params)
        if missing:
            raise TypeError(f"missing parameter(s): {sorted(missing)}")
        env = dict(params)
        env["x"] = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            out = self._fn(env)
        return np.broadcast_to(np.asarray(out, dtype=float), np.shape(env["x"])) * 1.0

    def __repr__(self):
        return f"Expression({self.text!r})"


def compile_expression(text, params=()):
    return Expression(text, params)
