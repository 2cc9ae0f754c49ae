"""Small expression language for coefficients: parse, evaluate, differentiate.

Grammar (tightest first): ^ is right-associative, then unary minus, then
* and /, then + and -.  So -x^2 means -(x^2).  Variables are exactly x and
t, the constants pi and e are built in, and the unary functions sin, cos,
tan, exp, log, sqrt, abs are known.  Evaluation is numpy-aware: x and t may
be scalars or broadcastable arrays.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_FUNCTIONS = {
    "sin": np.sin,
    "cos": np.cos,
    "tan": np.tan,
    "exp": np.exp,
    "log": np.log,
    "sqrt": np.sqrt,
    "abs": np.abs,
}

_CONSTANTS = {"pi": math.pi, "e": math.e}


class LexError(ValueError):
    """Bad character or malformed number; offset points into the source."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class ParseError(ValueError):
    """Structurally invalid expression; offset points at the bad token."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (offset {offset})")
        self.offset = offset


class EvalError(ArithmeticError):
    """Domain violation during evaluation (division by zero, log of a
    nonpositive value, ...).  Carries the offending node."""

    def __init__(self, message, node):
        super().__init__(message)
        self.node = node


class DiffError(ValueError):
    """Raised for nodes with no symbolic derivative (abs)."""


@dataclass(frozen=True)
class Token:
    kind: str  # "number" | "ident" | "op" | "paren" | "comma"
    lexeme: str
    pos: int


@dataclass(frozen=True)
class Expr:
    pass


@dataclass(frozen=True)
class Const(Expr):
    value: float


@dataclass(frozen=True)
class Var(Expr):
    name: str  # "x" or "t"


@dataclass(frozen=True)
class Neg(Expr):
    child: Expr


@dataclass(frozen=True)
class Call(Expr):
    fn: str
    arg: Expr


@dataclass(frozen=True)
class BinOp(Expr):
    op: str  # "+", "-", "*", "/", "^"
    left: Expr
    right: Expr


def tokenize(source):
    """Split source into tokens.  Whitespace separates; lexemes concatenate
    back to the source otherwise."""
    tokens = []
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isdigit():
            start = i
            while i < n and source[i].isdigit():
                i += 1
            if i < n and source[i] == ".":
                if i + 1 >= n or not source[i + 1].isdigit():
                    raise LexError("malformed number: expected digit after '.'", i)
                i += 1
                while i < n and source[i].isdigit():
                    i += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    i = j
                    while i < n and source[i].isdigit():
                        i += 1
            tokens.append(Token("number", source[start:i], start))
            continue
        if ch == ".":
            raise LexError("malformed number: expected digit before '.'", i)
        if ch.isalpha() or ch == "_":
            start = i
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            tokens.append(Token("ident", source[start:i], start))
            continue
        if ch in "+-*/^":
            tokens.append(Token("op", ch, i))
            i += 1
            continue
        if ch in "()":
            tokens.append(Token("paren", ch, i))
            i += 1
            continue
        if ch == ",":
            tokens.append(Token("comma", ch, i))
            i += 1
            continue
        raise LexError(f"unexpected character {ch!r}", i)
    return tokens


class _Parser:
    def __init__(self, tokens, source_len):
        self.tokens = tokens
        self.k = 0
        self.source_len = source_len

    def peek(self):
        return self.tokens[self.k] if self.k < len(self.tokens) else None

    def advance(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def fail(self, expected):
        tok = self.peek()
        if tok is None:
            raise ParseError(f"expected {expected}, found end of input", self.source_len)
        raise ParseError(f"expected {expected}, found {tok.lexeme!r}", tok.pos)

    def parse_sum(self):
        node = self.parse_term()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "op" and tok.lexeme in "+-":
                self.advance()
                node = BinOp(tok.lexeme, node, self.parse_term())
            else:
                return node

    def parse_term(self):
        node = self.parse_unary()
        while True:
            tok = self.peek()
            if tok is not None and tok.kind == "op" and tok.lexeme in "*/":
                self.advance()
                node = BinOp(tok.lexeme, node, self.parse_unary())
            else:
                return node

    def parse_unary(self):
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.lexeme == "-":
            self.advance()
            return Neg(self.parse_unary())
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        tok = self.peek()
        if tok is not None and tok.kind == "op" and tok.lexeme == "^":
            self.advance()
            # right-associative; the exponent may carry its own unary minus
            return BinOp("^", base, self.parse_unary())
        return base

    def parse_atom(self):
        tok = self.peek()
        if tok is None:
            self.fail("a value")
        if tok.kind == "number":
            self.advance()
            return Const(float(tok.lexeme))
        if tok.kind == "paren" and tok.lexeme == "(":
            self.advance()
            node = self.parse_sum()
            closing = self.peek()
            if closing is None or closing.lexeme != ")":
                self.fail("')'")
            self.advance()
            return node
        if tok.kind == "ident":
            name = tok.lexeme
            self.advance()
            if name in ("x", "t"):
                return Var(name)
            if name in _CONSTANTS:
                return Const(_CONSTANTS[name])
            if name in _FUNCTIONS:
                opening = self.peek()
                if opening is None or opening.lexeme != "(":
                    self.fail(f"'(' after function {name!r}")
                self.advance()
                arg = self.parse_sum()
                closing = self.peek()
                if closing is None or closing.lexeme != ")":
                    self.fail("')'")
                self.advance()
                return Call(name, arg)
            raise ParseError(f"unknown identifier {name!r}", tok.pos)
        self.fail("a value")


def parse(source):
    """Parse source into an expression tree.  Raises LexError or ParseError."""
    tokens = tokenize(source)
    parser = _Parser(tokens, len(source))
    node = parser.parse_sum()
    trailing = parser.peek()
    if trailing is not None:
        raise ParseError(
            f"expected operator or end of input, found {trailing.lexeme!r}", trailing.pos
        )
    return node


def _checked(value, node):
    if not np.all(np.isfinite(value)):
        raise EvalError(f"non-finite value from {to_string(node)!r}", node)
    return value


def _eval(node, x, t):
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Var):
        return x if node.name == "x" else t
    if isinstance(node, Neg):
        return np.negative(_eval(node.child, x, t))
    if isinstance(node, Call):
        return _checked(_FUNCTIONS[node.fn](_eval(node.arg, x, t)), node)
    left = _eval(node.left, x, t)
    right = _eval(node.right, x, t)
    op = node.op
    if op == "+":
        out = np.add(left, right)
    elif op == "-":
        out = np.subtract(left, right)
    elif op == "*":
        out = np.multiply(left, right)
    elif op == "/":
        out = np.divide(left, right)
    else:
        out = np.power(np.asarray(left, dtype=float), right)
    return _checked(out, node)


def evaluate(node, x, t):
    """Evaluate at (x, t); either argument may be a scalar or an ndarray.
    Domain violations raise EvalError instead of propagating NaN/inf."""
    with np.errstate(all="ignore"):
        out = _eval(node, x, t)
    if np.ndim(out) == 0:
        return float(out)
    return np.asarray(out, dtype=float)


# --- construction helpers with literal constant folding ---------------------


def const(v):
    return Const(float(v))


ZERO = Const(0.0)
ONE = Const(1.0)


def is_zero(node):
    return isinstance(node, Const) and node.value == 0.0


def is_one(node):
    return isinstance(node, Const) and node.value == 1.0


def neg(a):
    if isinstance(a, Const):
        return Const(-a.value)
    if isinstance(a, Neg):
        return a.child
    return Neg(a)


def add(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value + b.value)
    if is_zero(a):
        return b
    if is_zero(b):
        return a
    return BinOp("+", a, b)


def sub(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value - b.value)
    if is_zero(b):
        return a
    if is_zero(a):
        return neg(b)
    return BinOp("-", a, b)


def mul(a, b):
    if isinstance(a, Const) and isinstance(b, Const):
        return Const(a.value * b.value)
    if is_zero(a) or is_zero(b):
        return ZERO
    if is_one(a):
        return b
    if is_one(b):
        return a
    return BinOp("*", a, b)


def div(a, b):
    if isinstance(a, Const) and isinstance(b, Const) and b.value != 0.0:
        return Const(a.value / b.value)
    if is_zero(a):
        return ZERO
    if is_one(b):
        return a
    return BinOp("/", a, b)


def powe(a, b):
    if is_one(b):
        return a
    if is_zero(b):
        return ONE
    return BinOp("^", a, b)


def call(fn, arg):
    if fn not in _FUNCTIONS:
        raise ValueError(f"unknown function {fn!r}")
    return Call(fn, arg)


def differentiate(node, var):
    """Symbolic partial derivative with respect to var ("x" or "t").
    Only literal arithmetic is folded; no deeper simplification is promised.
    abs has no derivative here and raises DiffError."""
    if var not in ("x", "t"):
        raise ValueError(f"variable must be 'x' or 't', got {var!r}")
    return _diff(node, var)


def _diff(node, var):
    if isinstance(node, Const):
        return ZERO
    if isinstance(node, Var):
        return ONE if node.name == var else ZERO
    if isinstance(node, Neg):
        return neg(_diff(node.child, var))
    if isinstance(node, Call):
        u = node.arg
        du = _diff(u, var)
        if node.fn == "sin":
            return mul(call("cos", u), du)
        if node.fn == "cos":
            return neg(mul(call("sin", u), du))
        if node.fn == "tan":
            return div(du, powe(call("cos", u), const(2.0)))
        if node.fn == "exp":
            return mul(node, du)
        if node.fn == "log":
            return div(du, u)
        if node.fn == "sqrt":
            return div(du, mul(const(2.0), node))
        raise DiffError("abs(...) has no symbolic derivative")
    u, v = node.left, node.right
    du, dv = _diff(u, var), _diff(v, var)
    if node.op == "+":
        return add(du, dv)
    if node.op == "-":
        return sub(du, dv)
    if node.op == "*":
        return add(mul(du, v), mul(u, dv))
    if node.op == "/":
        return div(sub(mul(du, v), mul(u, dv)), powe(v, const(2.0)))
    # u^v: constant exponent gets the power rule, otherwise the general form
    if is_zero(dv):
        return mul(mul(v, powe(u, sub(v, ONE))), du)
    if is_zero(du):
        return mul(mul(node, call("log", u)), dv)
    return mul(node, add(mul(dv, call("log", u)), div(mul(v, du), u)))


def substitute(node, var, replacement):
    """Replace every occurrence of variable var with the given expression."""
    if isinstance(node, Const):
        return node
    if isinstance(node, Var):
        return replacement if node.name == var else node
    if isinstance(node, Neg):
        return neg(substitute(node.child, var, replacement))
    if isinstance(node, Call):
        return Call(node.fn, substitute(node.arg, var, replacement))
    return BinOp(
        node.op,
        substitute(node.left, var, replacement),
        substitute(node.right, var, replacement),
    )


_PREC = {"+": 1, "-": 1, "*": 2, "/": 2, "neg": 3, "^": 4, "atom": 5}


def _prec(node):
    if isinstance(node, (Const, Var, Call)):
        return _PREC["atom"]
    if isinstance(node, Neg):
        return _PREC["neg"]
    return _PREC[node.op]


def to_string(node):
    """Render the tree so that parse(to_string(e)) evaluates identically."""
    if isinstance(node, Const):
        return repr(node.value)
    if isinstance(node, Var):
        return node.name
    if isinstance(node, Call):
        return f"{node.fn}({to_string(node.arg)})"
    if isinstance(node, Neg):
        inner = to_string(node.child)
        if _prec(node.child) < _PREC["neg"]:
            inner = f"({inner})"
        return f"-{inner}"
    left = to_string(node.left)
    right = to_string(node.right)
    if node.op == "^":
        if _prec(node.left) <= _PREC["^"]:
            left = f"({left})"
        if _prec(node.right) < _PREC["^"]:
            right = f"({right})"
    else:
        p = _PREC[node.op]
        if _prec(node.left) < p:
            left = f"({left})"
        if _prec(node.right) <= p:
            right = f"({right})"
    return f"{left}{node.op}{right}"
