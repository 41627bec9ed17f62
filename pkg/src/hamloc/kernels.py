"""Green's-function kernels, their envelopes and cone constants."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .expr import Expression, as_expression

EPS_PHI = 1e-10
ENVELOPE_TOL = 1e-12

BUILTIN_KERNELS = ("k1_dirichlet", "k2_sturm_liouville")


class KernelError(ValueError):
    pass


def _check_unit(t, s):
    t = np.asarray(t, dtype=float)
    s = np.asarray(s, dtype=float)
    if np.any((t < 0) | (t > 1) | (s < 0) | (s > 1)) or not (np.all(np.isfinite(t)) and np.all(np.isfinite(s))):
        raise KernelError("kernel arguments must lie in [0, 1]")
    return t, s


def eval_k1(t, s):
    """Green's function of -u'' with u(0) = u(1) = 0."""
    t, s = _check_unit(t, s)
    out = np.where(s <= t, (1 - t) * s, t * (1 - s))
    return float(out) if out.ndim == 0 else out


def eval_k2(t, s):
    """Green's function of -v'' with v'(0) = 0, v(1) + v'(1) = 0."""
    t, s = _check_unit(t, s)
    out = np.where(s <= t, 2 - t, 2 - s)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class Kernel:
    """A nonnegative kernel on the unit square.

    ``kink`` marks kernels that are only piecewise smooth across s = t;
    integrators split there.  ``lower``/``upper`` hold the two branch
    sources (s <= t and s > t) for user kernels.
    """

    name: str
    evaluator: Callable[[np.ndarray, np.ndarray], np.ndarray]
    kink: bool = True
    provenance: str = "builtin"
    lower: str | None = None
    upper: str | None = None

    def __call__(self, t, s):
        return self.evaluator(t, s)

    def as_dict(self) -> dict:
        d = {"name": self.name, "provenance": self.provenance, "kink": self.kink}
        if self.lower is not None:
            d["branches"] = {"s_le_t": self.lower, "s_gt_t": self.upper}
        return d


K1 = Kernel("k1_dirichlet", eval_k1, True, "builtin-k1")
K2 = Kernel("k2_sturm_liouville", eval_k2, True, "builtin-k2")


def builtin_kernel(name: str) -> Kernel:
    if name == "k1_dirichlet":
        return K1
    if name == "k2_sturm_liouville":
        return K2
    raise KernelError(f"unknown builtin kernel {name!r}; choose from {BUILTIN_KERNELS}")


def user_kernel(s_le_t: str, s_gt_t: str, name: str = "user", samples: int = 1025,
                tol: float = 1e-12) -> Kernel:
    """Two-piece kernel from expressions in (t, s).

    Continuity across the diagonal is checked on ``samples`` points and a
    ``KernelError`` is raised when the branches disagree by more than
    ``tol`` (relative to the kernel scale).
    """
    lo = as_expression(s_le_t, ("t", "s"))
    hi = as_expression(s_gt_t, ("t", "s"))

    def evaluator(t, s):
        t, s = _check_unit(t, s)
        t, s = np.broadcast_arrays(t, s)
        out = np.where(s <= t, lo(t=t, s=s), hi(t=t, s=s))
        return float(out) if out.ndim == 0 else out

    d = np.linspace(0.0, 1.0, samples)
    a, b = lo(t=d, s=d), hi(t=d, s=d)
    jump = np.abs(a - b)
    scale = max(1.0, float(np.max(np.abs(a))))
    if np.max(jump) > tol * scale:
        i = int(np.argmax(jump))
        raise KernelError(f"kernel {name!r} is discontinuous across s=t: jump {jump[i]:.3e} at t=s={d[i]:.6g}")
    return Kernel(name, evaluator, True, "user", str(s_le_t), str(s_gt_t))


def check_nonnegative(k: Kernel, n: int = 257) -> tuple[float, tuple[float, float]]:
    """Smallest kernel value on an n x n grid, with its location."""
    g = np.linspace(0, 1, n)
    T, S = np.meshgrid(g, g, indexing="ij")
    K = k(T, S)
    i = np.unravel_index(np.argmin(K), K.shape)
    return float(K[i]), (float(T[i]), float(S[i]))


@dataclass(frozen=True)
class ConeData:
    """Envelope Phi(s), cone constant c and window [a, b]."""

    envelope: Expression
    c: float
    window: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self):
        a, b = self.window
        if not 0 < self.c <= 1:
            raise KernelError(f"cone constant must lie in (0, 1], got {self.c}")
        if not 0 <= a < b <= 1:
            raise KernelError(f"window must satisfy 0 <= a < b <= 1, got {self.window}")

    @classmethod
    def make(cls, envelope, c: float, window=(0.0, 1.0)) -> "ConeData":
        return cls(as_expression(envelope, ("s",)), float(c), (float(window[0]), float(window[1])))

    def as_dict(self) -> dict:
        return {"envelope": str(self.envelope), "c": self.c, "window": list(self.window)}


CONE_K1 = ConeData.make("s*(1-s)", 0.25, (0.25, 0.75))
CONE_K2 = ConeData.make("2-s", 0.5, (0.0, 1.0))


@dataclass(frozen=True)
class GridSpec:
    n: int = 1025
    refine_factor: int = 10


@dataclass(frozen=True)
class EnvelopeReport:
    holds: bool
    worst_margin: float
    witness: tuple[float, float]
    n: int

    def as_dict(self) -> dict:
        return {"holds": self.holds, "worst_margin": self.worst_margin,
                "witness": {"t": self.witness[0], "s": self.witness[1]}, "grid": self.n}


def verify_upper_envelope(k: Kernel, phi, grid: GridSpec = GridSpec(n=512)) -> EnvelopeReport:
    phi = as_expression(phi, ("s",))
    g = np.linspace(0, 1, grid.n)
    T, S = np.meshgrid(g, g, indexing="ij")
    margin = phi(s=S) - k(T, S)
    i = np.unravel_index(np.argmin(margin), margin.shape)
    worst = float(margin[i])
    return EnvelopeReport(worst >= -ENVELOPE_TOL, worst, (float(T[i]), float(S[i])), grid.n)


def _window_points(a: float, b: float, n: int) -> np.ndarray:
    g = np.linspace(0, 1, n)
    inside = g[(g >= a) & (g <= b)]
    return np.unique(np.concatenate([inside, [a, b]]))


def _admissible_s(phi: Expression, s: np.ndarray, eps: float) -> np.ndarray:
    """Drop s where phi < eps, adding the cutoff point next to each gap.

    The cutoff point is located by bisection so that ratios near zeros of
    phi are sampled as close to the zero as the threshold allows.
    """
    vals = phi(s=s)
    keep = vals >= eps
    if keep.all():
        return s
    if not keep.any():
        raise KernelError("envelope is below the cutoff on the whole grid")
    bad = ~keep
    # interior run of two or more excluded points means phi vanishes on an interval
    runs = np.diff(np.concatenate([[0], bad.astype(int), [0]]))
    starts, ends = np.flatnonzero(runs == 1), np.flatnonzero(runs == -1)
    for st, en in zip(starts, ends):
        if st > 0 and en < len(s) and en - st >= 2:
            raise KernelError(f"envelope vanishes on [{s[st]:.6g}, {s[en - 1]:.6g}]")
    extra = []
    for i in np.flatnonzero(bad):
        for j in (i - 1, i + 1):
            if 0 <= j < len(s) and keep[j]:
                lo, hi = s[j], s[i]
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if phi(s=mid) >= eps:
                        lo = mid
                    else:
                        hi = mid
                extra.append(lo)
    return np.unique(np.concatenate([s[keep], extra]))


def _ratio_min(k: Kernel, phi: Expression, t: np.ndarray, s: np.ndarray):
    T, S = np.meshgrid(t, s, indexing="ij")
    R = k(T, S) / phi(s=S)
    i = np.unravel_index(np.argmin(R), R.shape)
    return float(R[i]), float(T[i]), float(S[i])


def cone_constant_search(k: Kernel, phi, window, grid: GridSpec = GridSpec(), eps: float = EPS_PHI):
    """Minimum of k(t,s)/phi(s) over t in window, with its argmin (t, s)."""
    phi = as_expression(phi, ("s",))
    a, b = float(window[0]), float(window[1])
    if not 0 <= a <= b <= 1:
        raise KernelError(f"bad window {window}")
    t = _window_points(a, b, grid.n)
    s = _admissible_s(phi, np.linspace(0, 1, grid.n), eps)
    best, t_star, s_star = _ratio_min(k, phi, t, s)
    if grid.refine_factor > 1:
        h = 1.0 / (grid.n - 1)
        m = 2 * grid.refine_factor + 1
        t_loc = np.linspace(max(a, t_star - h), min(b, t_star + h), m)
        s_loc = _admissible_s(phi, np.linspace(max(0.0, s_star - h), min(1.0, s_star + h), m), eps)
        val, tt, ss = _ratio_min(k, phi, t_loc, s_loc)
        if val < best:
            best, t_star, s_star = val, tt, ss
    return best, t_star, s_star


def compute_cone_constant(k: Kernel, phi, window, grid: GridSpec = GridSpec(), eps: float = EPS_PHI) -> float:
    """Largest c with c*phi(s) <= k(t,s) on the sampled window.

    Sampling-based: the returned value over-estimates the true constant
    and converges to it as the grid is refined.
    """
    return cone_constant_search(k, phi, window, grid, eps)[0]


def envelope_sandwich_margin(k: Kernel, cone: ConeData, n: int = 257) -> float:
    """min over the grid of k - c*phi on the window (>= 0 when the lower bound holds)."""
    t = _window_points(*cone.window, n)
    s = np.linspace(0, 1, n)
    T, S = np.meshgrid(t, s, indexing="ij")
    return float(np.min(k(T, S) - cone.c * cone.envelope(s=S)))
