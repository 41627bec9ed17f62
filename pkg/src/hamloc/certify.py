"""Hypothesis checks for the shell x convex-set localization theorems.

Each integral condition becomes a :class:`ConditionRecord` carrying the
bound function, the computed profile extremum, the threshold and a signed
margin (``margin >= -tol`` means the condition holds).  Domination checks
such as ``f_lower <= f`` on a box are sampling-based and flagged as such.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np

from .expr import Box3, Expression, SamplingPolicy, apply, as_expression, bound_on_box, combine
from .kernels import Kernel, check_nonnegative, compute_cone_constant, verify_upper_envelope, GridSpec
from .operators import Problem
from .quadrature import DEFAULT_RULE, QuadratureRule, kernel_profile, profile_extrema

TOL = 1e-9
T_POINTS = 1025


class SpecError(ValueError):
    pass


@dataclass(frozen=True)
class LocalizationSpec:
    """Radii of the conical shell plus the target set for v.

    ``case`` is "compressive" (rho1/c1 < rho2) or "expansive" (rho2 < rho1).
    The v-target is either the order interval [alpha, beta] or the ball of
    radius R2.
    """

    rho1: float
    rho2: float
    case: str
    alpha: float | None = None
    beta: float | None = None
    R2: float | None = None

    def __post_init__(self):
        if not (self.rho1 > 0 and self.rho2 > 0):
            raise SpecError("rho1 and rho2 must be positive")
        if self.case not in ("compressive", "expansive"):
            raise SpecError(f"unknown case {self.case!r}")
        has_interval = self.alpha is not None or self.beta is not None
        has_ball = self.R2 is not None
        if has_interval == has_ball:
            raise SpecError("give exactly one of {alpha, beta} or {R2}")
        if has_interval and not (self.alpha is not None and self.beta is not None and 0 < self.alpha < self.beta):
            raise SpecError("interval target needs 0 < alpha < beta")
        if has_ball and not self.R2 > 0:
            raise SpecError("R2 must be positive")

    @classmethod
    def make(cls, rho1, rho2, c1, case=None, **target) -> "LocalizationSpec":
        """Build a spec, inferring the case tag from the radii when omitted."""
        if case is None:
            if rho1 / c1 < rho2:
                case = "compressive"
            elif rho2 < rho1:
                case = "expansive"
            else:
                raise SpecError(f"neither rho1/c1 < rho2 nor rho2 < rho1 holds (rho1={rho1}, rho2={rho2}, c1={c1})")
        spec = cls(float(rho1), float(rho2), case, **{k: float(v) for k, v in target.items() if v is not None})
        spec.validate(c1)
        return spec

    @property
    def ball(self) -> bool:
        return self.R2 is not None

    def validate(self, c1: float):
        if self.case == "compressive" and not self.rho1 / c1 < self.rho2:
            raise SpecError(f"compressive case needs rho1/c1 < rho2, got {self.rho1 / c1} >= {self.rho2}")
        if self.case == "expansive" and not self.rho2 < self.rho1:
            raise SpecError(f"expansive case needs rho2 < rho1, got {self.rho2} >= {self.rho1}")

    def R1(self, c1: float) -> float:
        return max(self.rho1 / c1, self.rho2)

    def v_range(self) -> tuple[float, float]:
        return (-self.R2, self.R2) if self.ball else (self.alpha, self.beta)

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}


@dataclass
class ConditionRecord:
    id: str
    passed: bool
    margin: float
    extremum: float | None = None
    threshold: float | None = None
    sense: str = ">="
    bound: str | None = None
    provenance: str | None = None
    domination: dict | None = None
    kernel: str | None = None
    t_window: list | None = None
    s_interval: list | None = None
    argext: float | None = None
    quadrature: dict | None = None
    tight: bool = False
    strict: bool = False
    note: str = ""

    def as_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None and v != ""}


@dataclass
class Certificate:
    theorem: str
    problem: str
    verdict: str
    records: list[ConditionRecord]
    localization: dict
    spec: dict
    tol: float = TOL
    rigorous: bool = False
    sampling: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def record(self, cid: str) -> ConditionRecord:
        for r in self.records:
            if r.id == cid:
                return r
        raise KeyError(cid)

    def as_dict(self) -> dict:
        return {"theorem": self.theorem, "problem": self.problem, "verdict": self.verdict,
                "tol": self.tol, "rigorous": self.rigorous, "sampling": self.sampling,
                "spec": self.spec, "conditions": [r.as_dict() for r in self.records],
                "localization": self.localization}


# ------------------------------------------------------------- helpers


def _bound_expr(bound) -> Expression:
    e = as_expression(bound)
    extra = e.root.variables() - {"t"}
    if extra:
        raise SpecError(f"bound function {bound!r} may depend on t only, uses {sorted(extra)}")
    return e


def _domination(gap: Expression, box: Box3, mode: str, policy: SamplingPolicy, tol: float) -> dict:
    """Check gap >= 0 on the box by sampling (or record a user assertion)."""
    if mode == "user-asserted":
        return {"mode": "user-asserted", "box": box.as_dict(), "holds": True}
    b = bound_on_box(gap, box, policy)
    return {"mode": "sampled", "box": box.as_dict(), "holds": b.lower >= -tol,
            "min_gap": b.lower, "witness": b.argmin, "policy": policy.as_dict()}


def _bound_nonnegative(e: Expression, tol: float) -> float:
    t = np.linspace(0, 1, T_POINTS)
    return float(np.min(np.broadcast_to(e(t=t), t.shape)))


def _integral_condition(cid, kernel: Kernel, bound: Expression, s_interval, t_window, want_min: bool,
                        threshold: float, domination: dict, rule: QuadratureRule, tol: float,
                        strict: bool = False) -> ConditionRecord:
    a, b = t_window
    t = np.linspace(0, 1, T_POINTS)
    t = np.unique(np.concatenate([t[(t >= a) & (t <= b)], [a, b]]))
    ext = profile_extrema(kernel_profile(kernel, bound, s_interval, t, rule), t_window)
    if want_min:
        extremum, arg, margin, sense = ext.min, ext.argmin, ext.min - threshold, ">="
    else:
        extremum, arg, margin, sense = ext.max, ext.argmax, threshold - ext.max, "<="
    low = _bound_nonnegative(bound, tol)
    ok = (margin > tol if strict else margin >= -tol) and domination["holds"] and low >= -tol
    notes = []
    if not domination["holds"]:
        notes.append("domination check failed")
    if low < -tol:
        notes.append(f"bound function negative (min {low!r})")
    return ConditionRecord(
        id=cid, passed=bool(ok), margin=float(margin), extremum=float(extremum), threshold=float(threshold),
        sense=sense, bound=str(bound), provenance="user-supplied", domination=domination,
        kernel=kernel.name, t_window=[float(a), float(b)], s_interval=[float(s) for s in s_interval],
        argext=float(arg), quadrature=rule.as_dict(), tight=bool(abs(margin) <= tol), strict=strict,
        note="; ".join(notes))


def _v_axis(spec: LocalizationSpec) -> tuple[float, float]:
    return spec.v_range()


# ------------------------------------------------- single conditions


def certify_H5(p: Problem, spec: LocalizationSpec, f_lower, rule: QuadratureRule = DEFAULT_RULE, *,
               domination: str = "sampled", policy: SamplingPolicy = SamplingPolicy(),
               tol: float = TOL, rho: float | None = None, cid: str | None = None,
               strict: bool = False) -> ConditionRecord:
    """min over [a,b] of int_a^b k1(t,s) f_lower(s) ds >= rho1, with f_lower <= f on the box."""
    c1, (a, b) = p.cone1.c, p.cone1.window
    rho = spec.rho1 if rho is None else rho
    fl = _bound_expr(f_lower)
    box = Box3((a, b), (rho, rho / c1), _v_axis(spec))
    dom = _domination(combine("-", p.f, fl), box, domination, policy, tol)
    return _integral_condition(cid or ("H5*" if spec.ball else "H5"), p.kernel1, fl, (a, b), (a, b), True, rho,
                               dom, rule, tol, strict)


def certify_H6(p: Problem, spec: LocalizationSpec, f_upper, rule: QuadratureRule = DEFAULT_RULE, *,
               domination: str = "sampled", policy: SamplingPolicy = SamplingPolicy(),
               tol: float = TOL, rho: float | None = None, cid: str | None = None,
               strict: bool = False) -> ConditionRecord:
    """max over [0,1] of int_0^1 k1(t,s) f_upper(s) ds <= rho2, with f <= f_upper on the box."""
    rho = spec.rho2 if rho is None else rho
    fu = _bound_expr(f_upper)
    box = Box3((0.0, 1.0), (0.0, rho), _v_axis(spec))
    dom = _domination(combine("-", fu, p.f), box, domination, policy, tol)
    return _integral_condition(cid or ("H6*" if spec.ball else "H6"), p.kernel1, fu, (0.0, 1.0), (0.0, 1.0),
                               False, rho, dom, rule, tol, strict)


def h7_box(p: Problem, spec: LocalizationSpec) -> Box3:
    c1, (a, b) = p.cone1.c, p.cone1.window
    if spec.case == "compressive":
        u = (spec.rho1, spec.rho2)
    else:
        u = (c1 * spec.rho2, spec.rho1 / c1)
    return Box3((a, b), u, (spec.alpha, spec.beta))


def h8_box(p: Problem, spec: LocalizationSpec) -> Box3:
    top = spec.rho2 if spec.case == "compressive" else spec.rho1 / p.cone1.c
    return Box3((0.0, 1.0), (0.0, top), (spec.alpha, spec.beta))


def certify_H7(p: Problem, spec: LocalizationSpec, g_lower, rule: QuadratureRule = DEFAULT_RULE, *,
               domination: str = "sampled", policy: SamplingPolicy = SamplingPolicy(),
               tol: float = TOL, box: Box3 | None = None, cid: str = "H7") -> ConditionRecord:
    gl = _bound_expr(g_lower)
    box = box or h7_box(p, spec)
    dom = _domination(combine("-", p.g, gl), box, domination, policy, tol)
    a, b = p.cone1.window
    return _integral_condition(cid, p.kernel2, gl, (a, b), (0.0, 1.0), True, spec.alpha, dom, rule, tol)


def certify_H8(p: Problem, spec: LocalizationSpec, g_upper, rule: QuadratureRule = DEFAULT_RULE, *,
               domination: str = "sampled", policy: SamplingPolicy = SamplingPolicy(),
               tol: float = TOL, box: Box3 | None = None, cid: str = "H8") -> ConditionRecord:
    gu = _bound_expr(g_upper)
    box = box or h8_box(p, spec)
    dom = _domination(combine("-", gu, p.g), box, domination, policy, tol)
    return _integral_condition(cid, p.kernel2, gu, (0.0, 1.0), (0.0, 1.0), False, spec.beta, dom, rule, tol)


def certify_H7_star(p: Problem, spec: LocalizationSpec, g_star, rule: QuadratureRule = DEFAULT_RULE, *,
                    domination: str = "sampled", policy: SamplingPolicy = SamplingPolicy(),
                    tol: float = TOL, u_top: float | None = None, cid: str = "H7*") -> ConditionRecord:
    """|g| <= g_star on [0,1] x [0,R1] x [-R2,R2] and max int_0^1 k2 g_star <= R2."""
    gs = _bound_expr(g_star)
    top = spec.R1(p.cone1.c) if u_top is None else u_top
    box = Box3((0.0, 1.0), (0.0, top), (-spec.R2, spec.R2))
    dom = _domination(combine("-", gs, apply("abs", p.g)), box, domination, policy, tol)
    return _integral_condition(cid, p.kernel2, gs, (0.0, 1.0), (0.0, 1.0), False, spec.R2, dom, rule, tol)


# ----------------------------------------------------- kernel checks


def kernel_records(p: Problem, tol: float = TOL, n: int = 1025) -> list[ConditionRecord]:
    """(H1)-(H3): nonnegative kernels, envelopes and cone constants on grids."""
    out = []
    for cid, k in (("H1:k1", p.kernel1), ("H1:k2", p.kernel2)):
        low, where = check_nonnegative(k)
        out.append(ConditionRecord(cid, low >= -tol, low, extremum=low, threshold=0.0, kernel=k.name,
                                   note=f"min at t={where[0]!r}, s={where[1]!r}"))
    for cid, k, cone in (("H2", p.kernel1, p.cone1), ("H3", p.kernel2, p.cone2)):
        env = verify_upper_envelope(k, cone.envelope, GridSpec(n=512))
        out.append(ConditionRecord(f"{cid}:upper", env.holds, env.worst_margin, extremum=env.worst_margin,
                                   threshold=0.0, bound=str(cone.envelope), kernel=k.name,
                                   note=f"worst at t={env.witness[0]!r}, s={env.witness[1]!r}"))
        c_hat = compute_cone_constant(k, cone.envelope, cone.window, GridSpec(n=n))
        margin = c_hat - cone.c
        out.append(ConditionRecord(f"{cid}:lower", margin >= -tol, margin, extremum=c_hat, threshold=cone.c,
                                   bound=str(cone.envelope), kernel=k.name, t_window=list(cone.window),
                                   tight=abs(margin) <= tol))
    return out


# ------------------------------------------------------------ theorems


def _verdict(records) -> str:
    return "pass" if all(r.passed for r in records) else "fail"


def _shell_statement(p: Problem, spec: LocalizationSpec) -> list[dict]:
    a, b = p.cone1.window
    w = f"min_{{t in [{a!r},{b!r}]}} u(t)"
    if spec.case == "compressive":
        return [{"quantity": w, "relation": ">=", "value": spec.rho1},
                {"quantity": "||u||_inf", "relation": "<=", "value": spec.rho2}]
    return [{"quantity": "||u||_inf", "relation": ">=", "value": spec.rho2},
            {"quantity": w, "relation": "<=", "value": spec.rho1}]


def _localization(p: Problem, spec: LocalizationSpec, verdict: str) -> dict:
    ineq = _shell_statement(p, spec)
    if spec.ball:
        ineq.append({"quantity": "||v||_inf", "relation": "<=", "value": spec.R2})
    else:
        ineq.append({"quantity": "v(t)", "relation": ">=", "value": spec.alpha})
        ineq.append({"quantity": "v(t)", "relation": "<=", "value": spec.beta})
    text = "; ".join(f"{d['quantity']} {d['relation']} {d['value']!r}" for d in ineq)
    return {"predicted": verdict == "pass", "u_in_cone": "K1", "inequalities": ineq,
            "statement": ("a solution (u, v) exists with " + text) if verdict == "pass" else "no conclusion"}


def certify_th_Ham(p: Problem, spec: LocalizationSpec, bounds: dict, rule: QuadratureRule = DEFAULT_RULE, *,
                   domination: str = "sampled", policy: SamplingPolicy = SamplingPolicy(),
                   tol: float = TOL, kernels: bool = True) -> Certificate:
    """Order-interval localization: checks H5-H8 with the case-appropriate boxes.

    ``bounds`` maps ``f_lower``, ``f_upper``, ``g_lower``, ``g_upper`` to
    expressions in t.
    """
    if spec.ball:
        raise SpecError("certify_th_Ham needs an [alpha, beta] target")
    spec.validate(p.cone1.c)
    kw = dict(domination=domination, policy=policy, tol=tol)
    records = kernel_records(p, tol) if kernels else []
    records += [certify_H5(p, spec, bounds["f_lower"], rule, **kw),
                certify_H6(p, spec, bounds["f_upper"], rule, **kw),
                certify_H7(p, spec, bounds["g_lower"], rule, **kw),
                certify_H8(p, spec, bounds["g_upper"], rule, **kw)]
    verdict = _verdict(records)
    return Certificate("th_Ham", p.name, verdict, records, _localization(p, spec, verdict), spec.as_dict(), tol,
                       sampling=policy.as_dict())


def certify_th_Ham2(p: Problem, spec: LocalizationSpec, bounds: dict, rule: QuadratureRule = DEFAULT_RULE, *,
                    domination: str = "sampled", policy: SamplingPolicy = SamplingPolicy(),
                    tol: float = TOL, kernels: bool = True) -> Certificate:
    """Ball localization for v: checks H5*-H7*.

    ``bounds`` maps ``f_star_lower``, ``f_star_upper`` and ``g_star``.
    """
    if not spec.ball:
        raise SpecError("certify_th_Ham2 needs an R2 target")
    spec.validate(p.cone1.c)
    kw = dict(domination=domination, policy=policy, tol=tol)
    records = kernel_records(p, tol) if kernels else []
    records += [certify_H5(p, spec, bounds["f_star_lower"], rule, **kw),
                certify_H6(p, spec, bounds["f_star_upper"], rule, **kw),
                certify_H7_star(p, spec, bounds["g_star"], rule, **kw)]
    verdict = _verdict(records)
    d = spec.as_dict()
    d["R1"] = spec.R1(p.cone1.c)
    return Certificate("th_Ham2", p.name, verdict, records, _localization(p, spec, verdict), d, tol,
                       sampling=policy.as_dict())


@dataclass(frozen=True)
class MultiplicitySpec:
    """Four radii rho_a < rho_b < rho_c < rho_d and the v-target D."""

    radii: tuple[float, float, float, float]
    alpha: float | None = None
    beta: float | None = None
    R2: float | None = None

    def validate(self, c1: float):
        if len(self.radii) != 4:
            raise SpecError(f"multiplicity needs four radii, got {len(self.radii)}")
        ra, rb, rc, rd = self.radii
        if not ra > 0:
            raise SpecError("radii must be positive")
        if not ra / c1 < rb:
            raise SpecError(f"need rho_a/c1 < rho_b, got {ra / c1} >= {rb}")
        if not rb < rc:
            raise SpecError(f"need rho_b < rho_c, got {rb} >= {rc}")
        if not rc / c1 < rd:
            raise SpecError(f"need rho_c/c1 < rho_d, got {rc / c1} >= {rd}")
        if (self.R2 is None) == (self.alpha is None or self.beta is None):
            raise SpecError("give exactly one of {alpha, beta} or {R2}")

    def as_dict(self) -> dict:
        d = {"radii": list(self.radii)}
        d.update({k: getattr(self, k) for k in ("alpha", "beta", "R2") if getattr(self, k) is not None})
        return d


def certify_multiplicity(p: Problem, mspec: MultiplicitySpec, bounds: dict, rule: QuadratureRule = DEFAULT_RULE,
                         *, domination: str = "sampled", policy: SamplingPolicy = SamplingPolicy(),
                         tol: float = TOL, kernels: bool = True) -> Certificate:
    """Three-solution certificate from lower bounds at rho_a, rho_c and upper bounds at rho_b, rho_d.

    ``bounds`` keys: ``f_lower_a``, ``f_upper_b``, ``f_lower_c``, ``f_upper_d``
    and either ``g_lower``/``g_upper`` or ``g_star``.  Boundary conditions
    must hold with strict margins because the index argument excludes
    fixed points on the boundaries.
    """
    c1, (a, b) = p.cone1.c, p.cone1.window
    mspec.validate(c1)
    ra, rb, rc, rd = mspec.radii
    ball = mspec.R2 is not None
    # u only serves to size boxes; any valid single-shell spec carries the v-target
    carrier = LocalizationSpec(rc, rb, "expansive", mspec.alpha, mspec.beta, mspec.R2)
    kw = dict(domination=domination, policy=policy, tol=tol)
    records = kernel_records(p, tol) if kernels else []
    records += [
        certify_H5(p, carrier, bounds["f_lower_a"], rule, rho=ra, cid="M:lower@rho_a", strict=True, **kw),
        certify_H6(p, carrier, bounds["f_upper_b"], rule, rho=rb, cid="M:upper@rho_b", strict=True, **kw),
        certify_H5(p, carrier, bounds["f_lower_c"], rule, rho=rc, cid="M:lower@rho_c", strict=True, **kw),
        certify_H6(p, carrier, bounds["f_upper_d"], rule, rho=rd, cid="M:upper@rho_d", strict=True, **kw),
    ]
    if ball:
        records.append(certify_H7_star(p, carrier, bounds["g_star"], rule, u_top=rd, cid="M:g_abs", **kw))
    else:
        records.append(certify_H7(p, carrier, bounds["g_lower"], rule, box=Box3((a, b), (ra, rd), (mspec.alpha, mspec.beta)),
                                  cid="M:g_lower", **kw))
        records.append(certify_H8(p, carrier, bounds["g_upper"], rule, box=Box3((0.0, 1.0), (0.0, rd), (mspec.alpha, mspec.beta)),
                                  cid="M:g_upper", **kw))
    verdict = _verdict(records)
    w = f"min_{{t in [{a!r},{b!r}]}} u(t)"
    regions = [
        {"solution": 1, "conditions": [f"||u||_inf < {rb!r}", f"{w} > {ra!r}"]},
        {"solution": 2, "conditions": [f"||u||_inf < {rd!r}", f"{w} > {rc!r}"]},
        {"solution": 3, "conditions": [f"||u||_inf > {rb!r}", f"{w} < {rc!r}"]},
    ]
    target = {"||v||_inf <=": mspec.R2} if ball else {"alpha": mspec.alpha, "beta": mspec.beta}
    loc = {"predicted": verdict == "pass", "solutions": 3 if verdict == "pass" else 0,
           "regions": regions, "v_target": target}
    return Certificate("three_solutions", p.name, verdict, records, loc, mspec.as_dict(), tol,
                       sampling=policy.as_dict())


def render_text(doc: dict) -> str:
    """Line-for-line text rendering of a JSON-ready dict."""
    lines = []

    def walk(prefix, obj):
        if isinstance(obj, dict):
            for k, v in obj.items():
                walk(f"{prefix}.{k}" if prefix else str(k), v)
        elif isinstance(obj, list):
            for i, v in enumerate(obj):
                walk(f"{prefix}[{i}]", v)
        else:
            lines.append(f"{prefix}: {obj!r}" if isinstance(obj, float) else f"{prefix}: {obj}")

    walk("", doc)
    return "\n".join(lines) + "\n"
