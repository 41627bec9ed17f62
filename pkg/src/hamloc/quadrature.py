"""Composite Gauss-Legendre rules and kernel integral profiles."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .expr import Expression, ExpressionError, as_expression
from .kernels import Kernel


@lru_cache(maxsize=32)
def _gauss_legendre(order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    return (x + 1) / 2, w / 2


@dataclass(frozen=True)
class QuadratureRule:
    """Composite Gauss-Legendre rule: ``panels`` equal panels of ``order`` nodes each."""

    nodes: np.ndarray
    weights: np.ndarray
    panels: int
    order: int
    interval: tuple[float, float]

    def integrate(self, values) -> float:
        return float(np.dot(self.weights, values))

    def on(self, lo: float, hi: float) -> "QuadratureRule":
        return make_rule(self.panels, self.order, (lo, hi))

    def as_dict(self) -> dict:
        return {"family": "composite-gauss-legendre", "panels": self.panels,
                "local_order": self.order, "interval": list(self.interval)}


def make_rule(panels: int = 64, local_order: int = 5, interval=(0.0, 1.0)) -> QuadratureRule:
    lo, hi = float(interval[0]), float(interval[1])
    if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
        raise ValueError(f"invalid interval {interval}")
    if panels < 1:
        raise ValueError("panels must be >= 1")
    if not 2 <= local_order <= 10:
        raise ValueError("local_order must lie in 2..10")
    xi, wi = _gauss_legendre(local_order)
    edges = np.linspace(lo, hi, panels + 1)
    h = np.diff(edges)
    nodes = (edges[:-1, None] + h[:, None] * xi[None, :]).ravel()
    weights = (h[:, None] * wi[None, :]).ravel()
    return QuadratureRule(nodes, weights, panels, local_order, (lo, hi))


DEFAULT_RULE = make_rule(64, 5)


@dataclass(frozen=True)
class Profile:
    """Values P(t_i) of t -> integral of k(t,s) w(s) over ``s_interval``."""

    t: np.ndarray
    values: np.ndarray
    s_interval: tuple[float, float]

    def __post_init__(self):
        if len(self.t) < 2 or len(self.t) != len(self.values):
            raise ValueError("profile needs >= 2 matching points")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("profile values must be finite")


@dataclass(frozen=True)
class Extrema:
    min: float
    argmin: float
    max: float
    argmax: float


def _weight_on(w, s: np.ndarray) -> np.ndarray:
    if isinstance(w, Expression):
        var = "s" if "s" in w.allowed else "t"
        return np.asarray(w(**{var: s}), dtype=float)
    if hasattr(w, "values") and hasattr(w, "t"):
        # grid functions are integrated through their piecewise-linear interpolant
        return np.interp(s, w.t, w.values)
    if callable(w):
        return np.asarray(w(s), dtype=float)
    if isinstance(w, str):
        # weights are written in s, or in t like the bound functions
        try:
            return _weight_on(as_expression(w, ("s",)), s)
        except ExpressionError:
            pass
    return _weight_on(as_expression(w), s)


def kernel_profile(k: Kernel, w, s_interval=(0.0, 1.0), t_grid=None,
                   rule: QuadratureRule = DEFAULT_RULE, split: bool = True) -> Profile:
    """Integrate k(t_i, s) w(s) over ``s_interval`` for every t_i.

    With ``split`` (the default for kinked kernels) each integral is broken
    at s = t_i and the composite rule is applied on both pieces, so the
    diagonal kink always sits on a panel boundary.
    """
    lo, hi = float(s_interval[0]), float(s_interval[1])
    t = np.linspace(0.0, 1.0, 1025) if t_grid is None else np.asarray(t_grid, dtype=float)
    xi, wi = rule.nodes, rule.weights
    # reference rule on [0, 1]
    r0, r1 = rule.interval
    xi = (xi - r0) / (r1 - r0)
    wi = wi / (r1 - r0)
    if split and k.kink:
        cut = np.clip(t, lo, hi)[:, None]
        parts = [(lo + (cut - lo) * xi, (cut - lo) * wi), (cut + (hi - cut) * xi, (hi - cut) * wi)]
    else:
        parts = [(np.broadcast_to(lo + (hi - lo) * xi, (len(t), len(xi))),
                  np.broadcast_to((hi - lo) * wi, (len(t), len(xi))))]
    total = np.zeros(len(t))
    for nodes, weights in parts:
        kv = k(np.broadcast_to(t[:, None], nodes.shape), nodes)
        total += np.sum(weights * kv * _weight_on(w, nodes), axis=1)
    return Profile(t, total, (lo, hi))


def _parabola_vertex(x: np.ndarray, y: np.ndarray):
    a, b, c = np.polyfit(x, y, 2)
    if a == 0:
        return None
    xv = -b / (2 * a)
    return xv, a * xv * xv + b * xv + c, a


def profile_extrema(P: Profile, window=None) -> Extrema:
    """Grid extrema inside ``window``, refined by a local parabola fit."""
    a, b = (P.t[0], P.t[-1]) if window is None else (float(window[0]), float(window[1]))
    slack = 1e-12
    idx = np.flatnonzero((P.t >= a - slack) & (P.t <= b + slack))
    if len(idx) == 0:
        raise ValueError(f"window {window} contains no profile points")
    vals = P.values[idx]
    out = []
    for want_max in (False, True):
        j = int(np.argmax(vals) if want_max else np.argmin(vals))
        best_t, best_v = float(P.t[idx[j]]), float(vals[j])
        if 0 < j < len(idx) - 1:
            sel = idx[j - 1:j + 2]
            vertex = _parabola_vertex(P.t[sel], P.values[sel])
            if vertex is not None:
                xv, yv, curv = vertex
                inside = P.t[sel[0]] <= xv <= P.t[sel[-1]]
                right_kind = curv < 0 if want_max else curv > 0
                better = yv > best_v if want_max else yv < best_v
                if inside and right_kind and better:
                    best_t, best_v = float(xv), float(yv)
        out.append((best_v, best_t))
    (mn, amn), (mx, amx) = out
    return Extrema(mn, amn, mx, amx)
