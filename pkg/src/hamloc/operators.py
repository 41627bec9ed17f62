"""Nystrom discretization of the Hammerstein operators T1, T2.

Grid functions live on a uniform grid of [0, 1].  Integrals are taken
with one Gauss-Legendre panel per grid cell, so both the kernel kink at
s = t_i and the breakpoints of the piecewise-linear interpolant of (u, v)
fall on panel boundaries.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import Expression, as_expression
from .kernels import CONE_K1, CONE_K2, K1, K2, ConeData, Kernel
from .quadrature import QuadratureRule, _gauss_legendre

DEFAULT_ORDER = 5
FD_STEP = 1e-7


@dataclass(frozen=True)
class GridFunction:
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.ndim != 1 or len(vals) < 3:
            raise ValueError("grid function needs at least 3 values")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid function values must be finite")
        object.__setattr__(self, "values", vals)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def t(self) -> np.ndarray:
        return np.linspace(0.0, 1.0, self.n)

    @property
    def h(self) -> float:
        return 1.0 / (self.n - 1)

    @classmethod
    def sample(cls, fn, n: int = 1025) -> "GridFunction":
        t = np.linspace(0.0, 1.0, n)
        if isinstance(fn, (int, float)):
            return cls(np.full(n, float(fn)))
        if isinstance(fn, (str, Expression)):
            e = as_expression(fn, ("t",))
            return cls(np.broadcast_to(e(t=t), t.shape).copy())
        return cls(np.broadcast_to(np.asarray(fn(t), dtype=float), t.shape).copy())

    def __add__(self, other):
        return GridFunction(self.values + _vals(other))

    def __sub__(self, other):
        return GridFunction(self.values - _vals(other))

    def __mul__(self, c: float):
        return GridFunction(self.values * c)

    __rmul__ = __mul__


def _vals(x):
    return x.values if isinstance(x, GridFunction) else np.asarray(x, dtype=float)


@dataclass(frozen=True)
class Problem:
    f: Expression
    g: Expression
    kernel1: Kernel = K1
    cone1: ConeData = CONE_K1
    kernel2: Kernel = K2
    cone2: ConeData = CONE_K2
    name: str = "problem"

    @classmethod
    def make(cls, f, g, **kw) -> "Problem":
        return cls(as_expression(f), as_expression(g), **kw)

    def as_dict(self) -> dict:
        return {"name": self.name, "f": str(self.f), "g": str(self.g),
                "kernel1": self.kernel1.as_dict(), "cone1": self.cone1.as_dict(),
                "kernel2": self.kernel2.as_dict(), "cone2": self.cone2.as_dict()}


@dataclass
class Nystrom:
    """Precomputed weights k(t_i, s_q) w_q for one kernel on one grid."""

    kernel: Kernel
    n: int
    order: int = DEFAULT_ORDER
    t: np.ndarray = field(init=False)
    s: np.ndarray = field(init=False)
    cell: np.ndarray = field(init=False)
    xi: np.ndarray = field(init=False)
    matrix: np.ndarray = field(init=False)

    def __post_init__(self):
        self.t = np.linspace(0.0, 1.0, self.n)
        h = 1.0 / (self.n - 1)
        x, w = _gauss_legendre(self.order)
        self.cell = np.repeat(np.arange(self.n - 1), self.order)
        self.xi = np.tile(x, self.n - 1)
        self.s = self.t[self.cell] + h * self.xi
        weights = np.tile(w * h, self.n - 1)
        T, S = np.meshgrid(self.t, self.s, indexing="ij")
        self.matrix = self.kernel(T, S) * weights[None, :]

    def interpolate(self, values: np.ndarray) -> np.ndarray:
        return (1 - self.xi) * values[self.cell] + self.xi * values[self.cell + 1]

    def apply(self, node_values: np.ndarray) -> np.ndarray:
        return self.matrix @ node_values

    def linearized(self, node_scale: np.ndarray) -> np.ndarray:
        """Matrix of w -> matrix @ (node_scale * interpolate(w)), shape (n, n)."""
        M = (self.matrix * node_scale[None, :]).reshape(self.n, self.n - 1, self.order)
        left = np.einsum("icq,q->ic", M, 1 - self.xi[: self.order])
        right = np.einsum("icq,q->ic", M, self.xi[: self.order])
        out = np.zeros((self.n, self.n))
        out[:, :-1] += left
        out[:, 1:] += right
        return out


_CACHE: dict = {}


def nystrom(kernel: Kernel, n: int, order: int = DEFAULT_ORDER) -> Nystrom:
    key = (kernel, n, order)
    if key not in _CACHE:
        if len(_CACHE) > 8:
            _CACHE.clear()
        _CACHE[key] = Nystrom(kernel, n, order)
    return _CACHE[key]


def _order(rule) -> int:
    if rule is None:
        return DEFAULT_ORDER
    if isinstance(rule, QuadratureRule):
        return rule.order
    return int(rule)


def _check_pair(u: GridFunction, v: GridFunction):
    if u.n != v.n:
        raise ValueError(f"u and v live on different grids ({u.n} vs {v.n})")


def node_values(p: Problem, u: GridFunction, v: GridFunction, order: int = DEFAULT_ORDER):
    """(s_q, u(s_q), v(s_q)) at the quadrature nodes of the Nystrom grid."""
    N = nystrom(p.kernel1, u.n, order)
    return N.s, N.interpolate(u.values), N.interpolate(v.values)


def _apply(kernel: Kernel, rhs: Expression, u: GridFunction, v: GridFunction, rule) -> GridFunction:
    _check_pair(u, v)
    N = nystrom(kernel, u.n, _order(rule))
    vals = rhs(t=N.s, u=N.interpolate(u.values), v=N.interpolate(v.values))
    return GridFunction(N.apply(np.asarray(vals, dtype=float)))


def apply_T1(p: Problem, u: GridFunction, v: GridFunction, rule=None) -> GridFunction:
    return _apply(p.kernel1, p.f, u, v, rule)


def apply_T2(p: Problem, u: GridFunction, v: GridFunction, rule=None) -> GridFunction:
    return _apply(p.kernel2, p.g, u, v, rule)


def sup_norm(w) -> float:
    return float(np.max(np.abs(_vals(w))))


def min_on_window(w: GridFunction, window) -> float:
    """Minimum over grid points in [a, b] and the interpolated endpoints."""
    a, b = float(window[0]), float(window[1])
    t = w.t
    if b < a or b < t[0] or a > t[-1]:
        raise ValueError(f"empty window {window}")
    inside = w.values[(t >= a) & (t <= b)]
    ends = np.interp([a, b], t, w.values)
    return float(np.min(np.concatenate([inside, ends])))


def cone_margin_K1(w: GridFunction, c1: float, window) -> float:
    """Nonnegative exactly when w is in the discrete cone K1."""
    return min(float(np.min(w.values)), min_on_window(w, window) - c1 * sup_norm(w))


def cone_margin_K2(w: GridFunction, c2: float) -> float:
    return min_on_window(w, (0.0, 1.0)) - c2 * sup_norm(w)


def residual(p: Problem, u: GridFunction, v: GridFunction, rule=None) -> tuple[float, float]:
    r1 = sup_norm(u - apply_T1(p, u, v, rule))
    r2 = sup_norm(v - apply_T2(p, u, v, rule))
    return r1, r2


def bvp_residual(u: GridFunction, rhs, v: GridFunction, component: str = "u") -> float:
    """Max interior residual of w'' + rhs(t, u, v) = 0 by second differences.

    ``component`` selects which of u, v plays the role of w.
    """
    rhs = as_expression(rhs)
    if u.n < 5:
        raise ValueError("bvp_residual needs n >= 5")
    _check_pair(u, v)
    x = (u if component == "u" else v).values
    d2 = (x[:-2] - 2 * x[1:-1] + x[2:]) / u.h ** 2
    t = u.t[1:-1]
    return float(np.max(np.abs(d2 + rhs(t=t, u=u.values[1:-1], v=v.values[1:-1]))))


def partials(e: Expression, s: np.ndarray, u: np.ndarray, v: np.ndarray):
    """Forward-difference partial derivatives of e(t, u, v) in u and v."""
    base = e(t=s, u=u, v=v)
    du = FD_STEP * (1 + np.abs(u))
    dv = FD_STEP * (1 + np.abs(v))
    eu = (e(t=s, u=u + du, v=v) - base) / du
    ev = (e(t=s, u=u, v=v + dv) - base) / dv
    return np.asarray(base), np.asarray(eu), np.asarray(ev)
