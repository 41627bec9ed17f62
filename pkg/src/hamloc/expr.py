"""Scalar expressions in a small calculator grammar.

Nonlinearities and bound functions are written as plain text, e.g.
``t*u^2*(1+sin(v)^2)``, parsed once into an immutable tree and then
evaluated either at scalar points or elementwise over numpy arrays.

Precedence, tightest first: ``^``, unary minus, ``* /``, ``+ -``.  All
binary operators associate to the left, so ``2^3^2 == 64`` and
``-2^2 == -4``.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

DEFAULT_VARIABLES = ("t", "u", "v")
FUNCTIONS = ("sin", "cos", "exp", "abs", "sqrt")
CONSTANTS = {"pi": math.pi}


class ExpressionError(ValueError):
    pass


class ParseError(ExpressionError):
    def __init__(self, message: str, source: str, position: int):
        self.source = source
        self.position = position
        super().__init__(f"{message} at position {position}: {source!r}")


class DomainError(ExpressionError):
    """Raised when an expression is evaluated outside its real domain.

    ``witness`` maps variable names to the offending point.
    """

    def __init__(self, message: str, witness: dict[str, float] | None = None):
        self.witness = witness or {}
        if self.witness:
            pt = ", ".join(f"{k}={v!r}" for k, v in self.witness.items())
            message = f"{message} at ({pt})"
        super().__init__(message)


# ---------------------------------------------------------------- nodes


class Node:
    def to_source(self) -> str:
        raise NotImplementedError

    def eval(self, env: Mapping[str, np.ndarray]) -> np.ndarray:
        raise NotImplementedError

    def variables(self) -> set[str]:
        raise NotImplementedError


@dataclass(frozen=True)
class Const(Node):
    value: float

    def to_source(self) -> str:
        text = repr(float(self.value))
        return f"({text})" if self.value < 0 else text

    def eval(self, env):
        return np.float64(self.value)

    def variables(self):
        return set()


@dataclass(frozen=True)
class Var(Node):
    name: str

    def to_source(self) -> str:
        return self.name

    def eval(self, env):
        return env[self.name]

    def variables(self):
        return {self.name}


@dataclass(frozen=True)
class Unary(Node):
    op: str  # "neg" or a function name
    arg: Node

    def to_source(self) -> str:
        if self.op == "neg":
            return f"(-{self.arg.to_source()})"
        return f"{self.op}({self.arg.to_source()})"

    def eval(self, env):
        x = self.arg.eval(env)
        if self.op == "neg":
            return -x
        if self.op == "sin":
            return np.sin(x)
        if self.op == "cos":
            return np.cos(x)
        if self.op == "exp":
            with np.errstate(over="ignore"):
                return np.exp(x)
        if self.op == "abs":
            return np.abs(x)
        if self.op == "sqrt":
            bad = x < 0
            if np.any(bad):
                raise _domain("sqrt of negative number", bad, env)
            return np.sqrt(x)
        raise ExpressionError(f"unknown unary op {self.op!r}")

    def variables(self):
        return self.arg.variables()


@dataclass(frozen=True)
class Binary(Node):
    op: str  # one of + - * / ^
    left: Node
    right: Node

    def to_source(self) -> str:
        return f"({self.left.to_source()}{self.op}{self.right.to_source()})"

    def eval(self, env):
        a = self.left.eval(env)
        b = self.right.eval(env)
        if self.op == "+":
            return a + b
        if self.op == "-":
            return a - b
        if self.op == "*":
            return a * b
        if self.op == "/":
            bad = np.broadcast_to(b == 0, np.broadcast(a, b).shape)
            if np.any(bad):
                raise _domain("division by zero", bad, env)
            return a / b
        if self.op == "^":
            return _power(a, b, env)
        raise ExpressionError(f"unknown binary op {self.op!r}")

    def variables(self):
        return self.left.variables() | self.right.variables()


def _power(a, b, env):
    shape = np.broadcast(a, b).shape
    a_b = np.broadcast_to(a, shape)
    b_b = np.broadcast_to(b, shape)
    integral = b_b == np.round(b_b)
    bad = (a_b < 0) & ~integral
    if np.any(bad):
        raise _domain("non-integer power of negative base", bad, env)
    bad = (a_b == 0) & (b_b < 0)
    if np.any(bad):
        raise _domain("zero raised to negative power", bad, env)
    with np.errstate(over="ignore"):
        return np.power(a, b)


def _domain(message: str, mask, env: Mapping[str, np.ndarray]) -> DomainError:
    shape = np.broadcast_shapes(np.shape(mask), *(np.shape(v) for v in env.values()))
    full = np.broadcast_to(mask, shape)
    idx = np.unravel_index(int(np.argmax(full)), shape) if shape else ()
    witness = {name: float(np.broadcast_to(value, shape)[idx]) for name, value in env.items()}
    return DomainError(message, witness)


# --------------------------------------------------------------- public


@dataclass(frozen=True)
class Expression:
    """A parsed expression together with the variable names it may use."""

    root: Node
    allowed: tuple[str, ...] = DEFAULT_VARIABLES
    source: str = field(default="", compare=False)

    def __call__(self, **env) -> np.ndarray:
        """Vectorized evaluation; missing variables default to 0."""
        values = {}
        for name in self.allowed:
            values[name] = np.asarray(env.get(name, 0.0), dtype=float)
        extra = set(env) - set(self.allowed)
        if extra:
            raise ExpressionError(f"unexpected variables {sorted(extra)}")
        out = self.root.eval(values)
        shape = np.broadcast_shapes(*(np.shape(v) for v in values.values()))
        return np.broadcast_to(np.asarray(out, dtype=float), shape)

    def to_source(self) -> str:
        return self.root.to_source()

    def is_constant(self) -> bool:
        return not self.root.variables()

    def __str__(self) -> str:
        return self.source or self.to_source()


def evaluate(e: Expression, t: float = 0.0, u: float = 0.0, v: float = 0.0) -> float:
    env = {"t": t, "u": u, "v": v}
    return float(e(**{k: env[k] for k in e.allowed if k in env}))


def constant(value: float) -> Expression:
    return Expression(Const(float(value)), DEFAULT_VARIABLES, repr(float(value)))


def combine(op: str, a: Expression, b: Expression) -> Expression:
    """Build ``a op b``; both operands must share the variable set."""
    allowed = tuple(dict.fromkeys(a.allowed + b.allowed))
    return Expression(Binary(op, a.root, b.root), allowed)


def apply(func: str, a: Expression) -> Expression:
    return Expression(Unary(func, a.root), a.allowed)


# --------------------------------------------------------------- parser

_TOKEN = re.compile(
    r"\s*(?:(?P<num>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),]))"
)


def _tokenize(source: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(source):
        if source[pos:].strip() == "":
            break
        m = _TOKEN.match(source, pos)
        if m is None or m.end() == pos:
            start = pos + len(source[pos:]) - len(source[pos:].lstrip())
            raise ParseError(f"unexpected character {source[start]!r}", source, start)
        kind = m.lastgroup
        tokens.append((kind, m.group(kind), m.start(kind)))
        pos = m.end()
    tokens.append(("end", "", len(source)))
    return tokens


class _Parser:
    def __init__(self, source: str, variables: Sequence[str]):
        self.source = source
        self.variables = tuple(variables)
        self.tokens = _tokenize(source)
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def take(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect(self, value: str):
        kind, text, pos = self.take()
        if text != value:
            found = "end of input" if kind == "end" else repr(text)
            raise ParseError(f"expected {value!r}, found {found}", self.source, pos)

    def parse(self) -> Node:
        node = self.additive()
        kind, text, pos = self.peek()
        if kind != "end":
            raise ParseError(f"unexpected token {text!r}", self.source, pos)
        return node

    def additive(self) -> Node:
        node = self.multiplicative()
        while self.peek()[1] in ("+", "-") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.multiplicative())
        return node

    def multiplicative(self) -> Node:
        node = self.unary()
        while self.peek()[1] in ("*", "/") and self.peek()[0] == "op":
            op = self.take()[1]
            node = Binary(op, node, self.unary())
        return node

    def unary(self) -> Node:
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Unary("neg", self.unary())
        if self.peek()[:2] == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self) -> Node:
        node = self.atom()
        while self.peek()[:2] == ("op", "^"):
            self.take()
            node = Binary("^", node, self.exponent())
        return node

    def exponent(self) -> Node:
        # allows u^-2 without parentheses
        if self.peek()[:2] == ("op", "-"):
            self.take()
            return Unary("neg", self.exponent())
        return self.atom()

    def atom(self) -> Node:
        kind, text, pos = self.take()
        if kind == "num":
            return Const(float(text))
        if kind == "name":
            if text in FUNCTIONS:
                self.expect("(")
                arg = self.additive()
                self.expect(")")
                return Unary(text, arg)
            if text in self.variables:
                return Var(text)
            if text in CONSTANTS:
                return Const(CONSTANTS[text])
            raise ParseError(f"unknown identifier {text!r}", self.source, pos)
        if text == "(":
            node = self.additive()
            self.expect(")")
            return node
        found = "end of input" if kind == "end" else repr(text)
        raise ParseError(f"unexpected {found}", self.source, pos)


def parse(source: str, variables: Sequence[str] = DEFAULT_VARIABLES) -> Expression:
    if not isinstance(source, str) or not source.strip():
        raise ParseError("empty expression", str(source), 0)
    root = _Parser(source, variables).parse()
    return Expression(root, tuple(variables), source)


def as_expression(obj, variables: Sequence[str] = DEFAULT_VARIABLES) -> Expression:
    """Accept an Expression, a source string or a number."""
    if isinstance(obj, Expression):
        return obj
    if isinstance(obj, (int, float)) and not isinstance(obj, bool):
        return Expression(Const(float(obj)), tuple(variables), repr(float(obj)))
    return parse(obj, variables)


# ------------------------------------------------------- box bounds


@dataclass(frozen=True)
class Box3:
    t: tuple[float, float]
    u: tuple[float, float]
    v: tuple[float, float]

    def __post_init__(self):
        for name in ("t", "u", "v"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise ValueError(f"box axis {name}: lower {lo} > upper {hi}")

    def axes(self) -> dict[str, tuple[float, float]]:
        return {"t": self.t, "u": self.u, "v": self.v}

    def as_dict(self) -> dict[str, list[float]]:
        return {k: [float(a), float(b)] for k, (a, b) in self.axes().items()}


@dataclass(frozen=True)
class SamplingPolicy:
    samples: int = 64
    refinements: int = 2
    local_samples: int = 65

    def as_dict(self) -> dict:
        return {"samples_per_axis": self.samples, "refinement_rounds": self.refinements,
                "local_samples_per_axis": self.local_samples, "rigorous": False}


@dataclass(frozen=True)
class BoxBound:
    lower: float
    upper: float
    argmin: dict[str, float]
    argmax: dict[str, float]
    policy: SamplingPolicy
    rigorous: bool = False


def _axis(lo: float, hi: float, n: int) -> np.ndarray:
    return np.array([lo]) if hi == lo else np.linspace(lo, hi, n)


def _scan(e: Expression, axes: dict[str, np.ndarray]):
    names = ("t", "u", "v")
    grids = np.meshgrid(*(axes[k] for k in names), indexing="ij")
    env = {k: g for k, g in zip(names, grids) if k in e.allowed}
    values = np.asarray(e(**env))
    values = np.broadcast_to(values, grids[0].shape)
    if not np.all(np.isfinite(values)):
        mask = ~np.isfinite(values)
        raise _domain("non-finite value", mask, dict(zip(names, grids)))
    i_min = np.unravel_index(np.argmin(values), values.shape)
    i_max = np.unravel_index(np.argmax(values), values.shape)
    pt_min = {k: float(g[i_min]) for k, g in zip(names, grids)}
    pt_max = {k: float(g[i_max]) for k, g in zip(names, grids)}
    return float(values[i_min]), pt_min, float(values[i_max]), pt_max


def bound_on_box(e: Expression, box: Box3, policy: SamplingPolicy = SamplingPolicy()) -> BoxBound:
    """Empirical min/max of ``e`` over ``box``.

    A tensor grid with ``policy.samples`` points per axis is scanned, then
    each extremal sample is refined by rescanning a shrinking neighbourhood
    around it.  The result is sampling-based and NOT a rigorous enclosure.
    """
    if e.is_constant():
        c = float(e())
        mid = {k: 0.5 * (a + b) for k, (a, b) in box.axes().items()}
        return BoxBound(c, c, mid, mid, policy)
    axes = {k: _axis(a, b, policy.samples) for k, (a, b) in box.axes().items()}
    lo, pt_lo, hi, pt_hi = _scan(e, axes)
    spacing = {k: (b - a) / (policy.samples - 1) for k, (a, b) in box.axes().items()}
    for _ in range(policy.refinements):
        for want_min in (True, False):
            centre = pt_lo if want_min else pt_hi
            local = {}
            for k, (a, b) in box.axes().items():
                c = centre[k]
                local[k] = _axis(max(a, c - spacing[k]), min(b, c + spacing[k]), policy.local_samples)
            l_lo, l_pt_lo, l_hi, l_pt_hi = _scan(e, local)
            if want_min and l_lo < lo:
                lo, pt_lo = l_lo, l_pt_lo
            if not want_min and l_hi > hi:
                hi, pt_hi = l_hi, l_pt_hi
        spacing = {k: 2 * s / (policy.local_samples - 1) for k, s in spacing.items()}
    return BoxBound(lo, hi, pt_lo, pt_hi, policy)
