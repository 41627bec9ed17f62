"""Fixed points of (T1, T2): damped Picard and Newton-Nystrom."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from .certify import LocalizationSpec
from .kernels import ConeData
from .operators import (DEFAULT_ORDER, GridFunction, Problem, cone_margin_K1, min_on_window, nystrom,
                        partials, residual, sup_norm)

log = logging.getLogger(__name__)

COND_LIMIT = 1e12
MAX_HALVINGS = 30
DIVERGENCE_RUN = 10


@dataclass(frozen=True)
class SolveParams:
    method: str = "newton"
    damping: float = 0.5
    max_iter: int = 100
    tol: float = 1e-10
    n: int = 1025
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if self.method not in ("picard", "newton"):
            raise ValueError(f"unknown method {self.method!r}")
        if not 0 < self.damping <= 1:
            raise ValueError("damping must lie in (0, 1]")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.n < 3:
            raise ValueError("grid needs n >= 3")

    def as_dict(self) -> dict:
        return {"method": self.method, "damping": self.damping, "max_iter": self.max_iter,
                "tol": self.tol, "n": self.n, "local_order": self.order}


@dataclass
class LocalizationReport:
    consistent: bool
    checks: list[dict]

    def as_dict(self) -> dict:
        return {"consistent": self.consistent, "checks": self.checks}


@dataclass
class SolveResult:
    u: GridFunction
    v: GridFunction
    residuals: tuple[float, float]
    iterations: int
    converged: bool
    status: str
    method: str
    history: list[dict] = field(default_factory=list)
    violations: list[dict] = field(default_factory=list)
    localization: LocalizationReport | None = None

    def summary(self) -> dict:
        d = {"method": self.method, "status": self.status, "converged": self.converged,
             "iterations": self.iterations, "residuals": list(self.residuals),
             "sup_u": sup_norm(self.u), "sup_v": sup_norm(self.v),
             "box_violations": len(self.violations)}
        if self.localization is not None:
            d["localization"] = self.localization.as_dict()
        return d


# ------------------------------------------------------- initial guesses


def default_initial_guess(spec: LocalizationSpec | None, kind: str = "midshell", coeffs: dict | None = None,
                          n: int = 1025, scale: float = 1.0) -> tuple[GridFunction, GridFunction]:
    """Starting pair for the iterations.

    ``midshell``: u0 = A * 4t(1-t) with A the geometric mean of rho1, rho2,
    v0 the midpoint of [alpha, beta] (0 for a ball target).
    ``polynomial``: ascending-power coefficients ``coeffs["u"]`` and
    ``coeffs["v"]``.  ``scale`` multiplies u0.
    """
    t = np.linspace(0.0, 1.0, n)
    if kind == "polynomial":
        if not coeffs:
            raise ValueError("polynomial needs coefficients")
        u0 = np.polynomial.polynomial.polyval(t, coeffs.get("u", [0.0]))
        v0 = np.polynomial.polynomial.polyval(t, coeffs.get("v", [0.0]))
    elif kind == "midshell":
        if spec is None:
            raise ValueError("midshell needs a localization spec")
        amp = float(np.sqrt(spec.rho1 * spec.rho2))
        u0 = amp * 4 * t * (1 - t)
        v0 = np.zeros(n) if spec.ball else np.full(n, 0.5 * (spec.alpha + spec.beta))
    else:
        raise ValueError(f"unknown initial guess kind {kind!r}")
    return GridFunction(scale * u0), GridFunction(np.asarray(v0, dtype=float) * np.ones(n))


# --------------------------------------------------------------- logging


def _position(u: GridFunction, v: GridFunction, spec: LocalizationSpec | None, cone1: ConeData) -> dict:
    pos = {"sup_u": sup_norm(u), "min_window_u": min_on_window(u, cone1.window),
           "min_v": float(np.min(v.values)), "max_v": float(np.max(v.values))}
    if spec is None:
        return pos
    if spec.case == "compressive":
        in_shell = spec.rho1 <= pos["min_window_u"] and pos["sup_u"] <= spec.rho2
    else:
        in_shell = spec.rho2 <= pos["sup_u"] and pos["min_window_u"] <= spec.rho1
    if spec.ball:
        in_set = sup_norm(v) <= spec.R2
    else:
        in_set = spec.alpha <= pos["min_v"] and pos["max_v"] <= spec.beta
    pos["in_shell"] = bool(in_shell)
    pos["v_in_target"] = bool(in_set)
    return pos


class _Tracker:
    def __init__(self, spec, cone1):
        self.spec, self.cone1 = spec, cone1
        self.history, self.violations = [], []

    def record(self, k, u, v, r, **extra):
        pos = _position(u, v, self.spec, self.cone1)
        entry = {"iteration": k, "r1": r[0], "r2": r[1], **pos, **extra}
        self.history.append(entry)
        if self.spec is not None and not (pos["in_shell"] and pos["v_in_target"]):
            self.violations.append({"iteration": k, **pos})
        log.debug("iter %d r=(%.3e, %.3e)", k, r[0], r[1])


# ------------------------------------------------------------- iterations


class _System:
    """F(u, v) = (u - T1(u, v), v - T2(u, v)) on the grid."""

    def __init__(self, p: Problem, n: int, order: int):
        self.p = p
        self.n = n
        self.N1 = nystrom(p.kernel1, n, order)
        self.N2 = nystrom(p.kernel2, n, order)

    def images(self, u: np.ndarray, v: np.ndarray):
        s = self.N1.s
        pu, pv = self.N1.interpolate(u), self.N1.interpolate(v)
        with np.errstate(over="ignore", invalid="ignore"):
            f = np.broadcast_to(self.p.f(t=s, u=pu, v=pv), s.shape)
            g = np.broadcast_to(self.p.g(t=s, u=pu, v=pv), s.shape)
        return self.N1.apply(f), self.N2.apply(g)

    def residual_norm(self, x: np.ndarray) -> tuple[float, float]:
        u, v = x[: self.n], x[self.n:]
        Tu, Tv = self.images(u, v)
        r = (float(np.max(np.abs(u - Tu))), float(np.max(np.abs(v - Tv))))
        return tuple(np.inf if not np.isfinite(q) else q for q in r)

    def jacobian(self, x: np.ndarray) -> np.ndarray:
        n, s = self.n, self.N1.s
        pu, pv = self.N1.interpolate(x[:n]), self.N1.interpolate(x[n:])
        _, fu, fv = partials(self.p.f, s, pu, pv)
        _, gu, gv = partials(self.p.g, s, pu, pv)
        J = np.eye(2 * n)
        J[:n, :n] -= self.N1.linearized(np.broadcast_to(fu, s.shape))
        J[:n, n:] -= self.N1.linearized(np.broadcast_to(fv, s.shape))
        J[n:, :n] -= self.N2.linearized(np.broadcast_to(gu, s.shape))
        J[n:, n:] -= self.N2.linearized(np.broadcast_to(gv, s.shape))
        return J


def _finish(p, x, n, params, status, k, tracker, method) -> SolveResult:
    u, v = GridFunction(x[:n]), GridFunction(x[n:])
    r = residual(p, u, v, params.order)
    converged = max(r) <= params.tol
    if status == "converged" and not converged:
        status = "max_iter"
    return SolveResult(u, v, r, k, converged, status, method, tracker.history, tracker.violations)


def picard(p: Problem, init, params: SolveParams = SolveParams(method="picard"),
           spec: LocalizationSpec | None = None) -> SolveResult:
    """(u, v) <- (1 - theta)(u, v) + theta (T1(u, v), T2(u, v)).

    Stops at tolerance, after ``max_iter`` updates, or when the residual has
    grown for ``DIVERGENCE_RUN`` consecutive iterations.
    """
    u0, v0 = init
    n = u0.n
    sysm = _System(p, n, params.order)
    theta = params.damping
    x = np.concatenate([u0.values, v0.values])
    tracker = _Tracker(spec, p.cone1)
    status, growth, prev = "max_iter", 0, np.inf
    k = 0
    while True:
        Tu, Tv = sysm.images(x[:n], x[n:])
        r = (float(np.max(np.abs(x[:n] - Tu))), float(np.max(np.abs(x[n:] - Tv))))
        if not all(np.isfinite(r)):
            status = "diverged"
            break
        tracker.record(k, GridFunction(x[:n]), GridFunction(x[n:]), r)
        if max(r) <= params.tol:
            status = "converged"
            break
        growth = growth + 1 if max(r) > prev else 0
        prev = max(r)
        if growth >= DIVERGENCE_RUN:
            status = "diverged"
            break
        if k >= params.max_iter:
            break
        x = (1 - theta) * x + theta * np.concatenate([Tu, Tv])
        k += 1
    if status == "diverged" and not np.all(np.isfinite(x)):
        x = np.nan_to_num(x, nan=0.0, posinf=0.0, neginf=0.0)
    return _finish(p, x, n, params, status, k, tracker, "picard")


def newton_nystrom(p: Problem, init, params: SolveParams = SolveParams(),
                   spec: LocalizationSpec | None = None) -> SolveResult:
    """Damped Newton on the 2n grid unknowns with a finite-difference Jacobian.

    Step lengths are halved until the sup-norm residual decreases; after
    ``MAX_HALVINGS`` failures a damped Picard step is tried instead.
    """
    u0, v0 = init
    n = u0.n
    sysm = _System(p, n, params.order)
    x = np.concatenate([u0.values, v0.values])
    tracker = _Tracker(spec, p.cone1)
    status = "max_iter"
    k = 0
    r = sysm.residual_norm(x)
    while True:
        tracker.record(k, GridFunction(x[:n]), GridFunction(x[n:]), r)
        if max(r) <= params.tol:
            status = "converged"
            break
        if k >= params.max_iter:
            break
        Tu, Tv = sysm.images(x[:n], x[n:])
        F = x - np.concatenate([Tu, Tv])
        J = sysm.jacobian(x)
        lu, piv = sla.lu_factor(J, check_finite=False)
        rcond, _ = sla.lapack.dgecon(lu, np.linalg.norm(J, 1), norm="1")
        if rcond == 0 or 1.0 / rcond > COND_LIMIT:
            status = "singular"
            tracker.history[-1]["condition"] = np.inf if rcond == 0 else 1.0 / rcond
            break
        delta = sla.lu_solve((lu, piv), F, check_finite=False)
        step, accepted = 1.0, False
        for _ in range(MAX_HALVINGS + 1):
            trial = x - step * delta
            r_trial = sysm.residual_norm(trial)
            if max(r_trial) < max(r):
                accepted = True
                break
            step /= 2
        kind = "newton"
        if not accepted:
            theta = params.damping
            trial = (1 - theta) * x + theta * np.concatenate([Tu, Tv])
            r_trial = sysm.residual_norm(trial)
            if max(r_trial) < max(r):
                kind, accepted, step = "picard", True, theta
        if not accepted:
            status = "line_search_failed"
            break
        tracker.history[-1].update(step=step, step_kind=kind, condition=1.0 / rcond)
        x, r = trial, r_trial
        k += 1
    return _finish(p, x, n, params, status, k, tracker, "newton")


def solve(p: Problem, init, params: SolveParams = SolveParams(), spec: LocalizationSpec | None = None) -> SolveResult:
    fn = newton_nystrom if params.method == "newton" else picard
    res = fn(p, init, params, spec)
    if spec is not None and res.converged:
        res.localization = check_localization(res, spec, p.cone1)
    return res


# ------------------------------------------------------------ localization


def check_localization(res: SolveResult, spec: LocalizationSpec, cone1: ConeData, rel_tol: float = 1e-6) -> LocalizationReport:
    """Evaluate the theorem's conclusions on a computed pair."""
    u, v = res.u, res.v
    a, b = cone1.window
    sup_u, win_u = sup_norm(u), min_on_window(u, cone1.window)
    checks = []

    def add(name, value, relation, bound):
        tol = rel_tol * max(1.0, abs(bound))
        margin = value - bound if relation == ">=" else bound - value
        checks.append({"name": name, "value": float(value), "relation": relation, "bound": float(bound),
                       "margin": float(margin), "holds": bool(margin >= -tol)})

    add("min u", float(np.min(u.values)), ">=", 0.0)
    add("K1 cone margin of u", cone_margin_K1(u, cone1.c, cone1.window), ">=", 0.0)
    wname = f"min_[{a!r},{b!r}] u"
    if spec.case == "compressive":
        add(wname, win_u, ">=", spec.rho1)
        add("||u||_inf", sup_u, "<=", spec.rho2)
    else:
        add("||u||_inf", sup_u, ">=", spec.rho2)
        add(wname, win_u, "<=", spec.rho1)
    if spec.ball:
        add("||v||_inf", sup_norm(v), "<=", spec.R2)
    else:
        add("min v", float(np.min(v.values)), ">=", spec.alpha)
        add("max v", float(np.max(v.values)), "<=", spec.beta)
    return LocalizationReport(all(c["holds"] for c in checks), checks)


# ------------------------------------------------------------ multi-start


def shell_amplitudes(spec: LocalizationSpec, c1: float, count: int = 6) -> np.ndarray:
    """Geometric lattice of sup-norm amplitudes spanning the certified shell."""
    if spec.case == "compressive":
        lo, hi = spec.rho1, spec.rho2
    else:
        lo, hi = spec.rho2, spec.rho1 / c1
    return np.geomspace(lo, hi, count)


def multi_start(p: Problem, amplitudes, v_levels, params: SolveParams = SolveParams(),
                spec: LocalizationSpec | None = None, dedupe: float = 1e-4, workers: int = 1) -> list[SolveResult]:
    """Solve from u0 = A 4t(1-t), v0 = c for every (A, c); keep distinct converged pairs."""
    t = np.linspace(0, 1, params.n)
    starts = [(GridFunction(A * 4 * t * (1 - t)), GridFunction(np.full(params.n, float(c))))
              for A in amplitudes for c in v_levels]

    def run(init):
        try:
            return solve(p, init, params, spec)
        except (ValueError, np.linalg.LinAlgError, OverflowError) as exc:
            log.info("start failed: %s", exc)
            return None

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(run, starts))
    else:
        results = [run(s) for s in starts]
    found: list[SolveResult] = []
    for res in results:
        if res is None or not res.converged:
            continue
        if all(max(sup_norm(res.u - q.u), sup_norm(res.v - q.v)) > dedupe for q in found):
            found.append(res)
    found.sort(key=lambda r: sup_norm(r.u))
    return found
