"""Loading and validating JSON problem files."""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

from .certify import LocalizationSpec, MultiplicitySpec, SpecError
from .expr import ExpressionError, parse
from .kernels import CONE_K1, CONE_K2, ConeData, KernelError, builtin_kernel, user_kernel
from .operators import Problem
from .solve import SolveParams

BUNDLED = ("numex", "ex2", "three_solutions")

_DEFAULT_CONES = {"k1_dirichlet": CONE_K1, "k2_sturm_liouville": CONE_K2}


class ProblemFileError(ValueError):
    """Schema or content error; ``path`` is the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path or '<root>'}: {message}")


def schema() -> dict:
    return json.loads(resources.files("hamloc.problems").joinpath("problem.schema.json").read_text())


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("hamloc.problems").joinpath(f"{name}.json")))


def resolve(path_or_name: str) -> Path:
    p = Path(path_or_name)
    if p.exists():
        return p
    if path_or_name in BUNDLED:
        return bundled_path(path_or_name)
    raise ProblemFileError("", f"no such problem file or bundled example: {path_or_name}")


@dataclass
class ProblemFile:
    raw: dict
    problem: Problem
    spec: LocalizationSpec | None
    multiplicity: MultiplicitySpec | None
    bounds: dict
    domination: str
    params: SolveParams
    initial_guess: dict
    multi_start: dict | None
    source: str = ""

    @property
    def name(self) -> str:
        return self.problem.name


def _parse_field(path: str, source: str, variables=("t", "u", "v")):
    try:
        return parse(source, variables)
    except ExpressionError as exc:
        raise ProblemFileError(path, str(exc)) from exc


def _kernel(path: str, spec):
    try:
        if isinstance(spec, str):
            return builtin_kernel(spec)
        _parse_field(f"{path}.s_le_t", spec["s_le_t"], ("t", "s"))
        _parse_field(f"{path}.s_gt_t", spec["s_gt_t"], ("t", "s"))
        return user_kernel(spec["s_le_t"], spec["s_gt_t"], spec.get("name", "user"))
    except KernelError as exc:
        raise ProblemFileError(path, str(exc)) from exc


def _cone(path: str, kernel, override: dict | None) -> ConeData:
    if override is None:
        if kernel.name in _DEFAULT_CONES:
            return _DEFAULT_CONES[kernel.name]
        raise ProblemFileError(path, "user kernels need explicit cone data (envelope, c, window)")
    _parse_field(f"{path}.envelope", override["envelope"], ("s",))
    try:
        return ConeData.make(override["envelope"], override["c"], override.get("window", (0.0, 1.0)))
    except KernelError as exc:
        raise ProblemFileError(path, str(exc)) from exc


def from_dict(raw: dict, source: str = "") -> ProblemFile:
    validator = jsonschema.Draft202012Validator(schema())
    errors = sorted(validator.iter_errors(raw), key=lambda e: list(e.absolute_path))
    if errors:
        err = errors[0]
        path = ".".join(str(p) for p in err.absolute_path)
        raise ProblemFileError(path, err.message)
    f = _parse_field("f", raw["f"])
    g = _parse_field("g", raw["g"])
    kernels = raw.get("kernels", {})
    cones = raw.get("cones", {})
    k1 = _kernel("kernels.k1", kernels.get("k1", "k1_dirichlet"))
    k2 = _kernel("kernels.k2", kernels.get("k2", "k2_sturm_liouville"))
    c1 = _cone("cones.k1", k1, cones.get("k1"))
    c2 = _cone("cones.k2", k2, cones.get("k2"))
    problem = Problem(f, g, k1, c1, k2, c2, raw.get("name", "problem"))

    bounds = raw.get("bounds", {})
    for key, text in bounds.items():
        _parse_field(f"bounds.{key}", text)

    spec = mspec = None
    if "localization" in raw:
        loc = raw["localization"]
        try:
            spec = LocalizationSpec.make(loc["rho1"], loc["rho2"], c1.c, loc.get("case"),
                                         alpha=loc.get("alpha"), beta=loc.get("beta"), R2=loc.get("R2"))
        except SpecError as exc:
            raise ProblemFileError("localization", str(exc)) from exc
    if "multiplicity" in raw:
        m = raw["multiplicity"]
        mspec = MultiplicitySpec(tuple(m["radii"]), m.get("alpha"), m.get("beta"), m.get("R2"))
        try:
            mspec.validate(c1.c)
        except SpecError as exc:
            raise ProblemFileError("multiplicity", str(exc)) from exc

    s = raw.get("solver", {})
    try:
        params = SolveParams(method=s.get("method", "newton"), damping=s.get("damping", 0.5),
                             max_iter=s.get("max_iter", 100), tol=s.get("tol", 1e-10),
                             n=s.get("grid", 1025), order=s.get("order", 5))
    except ValueError as exc:
        raise ProblemFileError("solver", str(exc)) from exc
    init = raw.get("initial_guess", {"kind": "midshell"})
    if init["kind"] == "polynomial" and "u" not in init:
        raise ProblemFileError("initial_guess", "polynomial needs coefficient list 'u'")
    return ProblemFile(raw, problem, spec, mspec, bounds, raw.get("domination", "sampled"), params, init,
                       raw.get("multi_start"), source)


def load(path_or_name: str) -> ProblemFile:
    path = resolve(str(path_or_name))
    try:
        raw = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ProblemFileError("", f"invalid JSON: {exc}") from exc
    return from_dict(raw, str(path))
