"""Command-line front end.

    hamloc certify PROBLEM [--out DIR] [--no-timestamp]
    hamloc solve PROBLEM [--method newton|picard] [--grid N] [--tol X] [--multi-start]
    hamloc multi-start PROBLEM
    hamloc kernel-report PROBLEM

PROBLEM is a path to a JSON problem file or the name of a bundled example
(numex, ex2, three_solutions).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .certify import SpecError, certify_multiplicity, certify_th_Ham, certify_th_Ham2, render_text
from .expr import ExpressionError
from .kernels import GridSpec, KernelError, check_nonnegative, cone_constant_search, verify_upper_envelope
from .operators import GridFunction
from .problemfile import ProblemFile, ProblemFileError, load
from .solve import (SolveParams, SolveResult, default_initial_guess, multi_start,
                    shell_amplitudes, solve)

EXIT_OK, EXIT_ERROR, EXIT_FAIL, EXIT_INCONSISTENT = 0, 1, 2, 3

log = logging.getLogger("hamloc")


def _stamp(doc: dict, args) -> dict:
    if not args.no_timestamp:
        doc = {"generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"), **doc}
    return doc


def _write_json(path: Path, doc) -> None:
    path.write_text(json.dumps(doc, indent=2, allow_nan=True) + "\n")


def write_grid_csv(path: Path, gf: GridFunction) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "value"])
        for t, x in zip(gf.t, gf.values):
            w.writerow([repr(float(t)), repr(float(x))])


def read_grid_csv(path: Path) -> GridFunction:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return GridFunction(np.array([float(r["value"]) for r in rows]))


def write_solution(out: Path, res: SolveResult, stem: str = "solution") -> None:
    with open(out / f"{stem}.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "u", "v"])
        for t, a, b in zip(res.u.t, res.u.values, res.v.values):
            w.writerow([repr(float(t)), repr(float(a)), repr(float(b))])
    doc = {"t": res.u.t.tolist(), "u": res.u.values.tolist(), "v": res.v.values.tolist(),
           "summary": res.summary()}
    _write_json(out / f"{stem}.json", doc)


def write_iterations(path: Path, res: SolveResult) -> None:
    with open(path, "w") as fh:
        for rec in res.history:
            fh.write(json.dumps(rec) + "\n")


# ----------------------------------------------------------------- commands


def _certificate(pf: ProblemFile):
    kw = dict(domination=pf.domination)
    if pf.multiplicity is not None:
        return certify_multiplicity(pf.problem, pf.multiplicity, pf.bounds, **kw)
    if pf.spec is None:
        raise ProblemFileError("localization", "certify needs a localization or multiplicity section")
    if pf.spec.ball:
        return certify_th_Ham2(pf.problem, pf.spec, pf.bounds, **kw)
    return certify_th_Ham(pf.problem, pf.spec, pf.bounds, **kw)


def _missing_bounds(pf: ProblemFile) -> list[str]:
    if pf.multiplicity is not None:
        need = ["f_lower_a", "f_upper_b", "f_lower_c", "f_upper_d"]
        need += ["g_star"] if pf.multiplicity.R2 is not None else ["g_lower", "g_upper"]
    elif pf.spec is not None and pf.spec.ball:
        need = ["f_star_lower", "f_star_upper", "g_star"]
    else:
        need = ["f_lower", "f_upper", "g_lower", "g_upper"]
    return [k for k in need if k not in pf.bounds]


def cmd_certify(args) -> int:
    pf = load(args.problem)
    missing = _missing_bounds(pf)
    if missing:
        raise ProblemFileError("bounds", f"missing bound functions {missing}")
    cert = _certificate(pf)
    doc = _stamp({"problem_file": pf.name, **cert.as_dict()}, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "certificate.json", doc)
    (out / "certificate.txt").write_text(render_text(doc))
    for r in cert.records:
        flag = "tight" if r.tight else ""
        print(f"{r.id:16s} {'pass' if r.passed else 'FAIL'}  margin={r.margin!r} {flag}")
    print(f"verdict: {cert.verdict}")
    return EXIT_OK if cert.passed else EXIT_FAIL


def _params(pf: ProblemFile, args) -> SolveParams:
    changes = {}
    if args.method:
        changes["method"] = args.method
    if args.grid:
        changes["n"] = args.grid
    if args.tol:
        changes["tol"] = args.tol
    return dataclasses.replace(pf.params, **changes)


def _initial(pf: ProblemFile, n: int):
    ig = pf.initial_guess
    coeffs = {k: ig[k] for k in ("u", "v") if k in ig}
    return default_initial_guess(pf.spec, ig["kind"], coeffs, n=n, scale=ig.get("scale", 1.0))


def cmd_solve(args) -> int:
    if getattr(args, "multi_start", False):
        return cmd_multi_start(args)
    pf = load(args.problem)
    params = _params(pf, args)
    res = solve(pf.problem, _initial(pf, params.n), params, pf.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_solution(out, res)
    write_iterations(out / "iterations.jsonl", res)
    loc = {"converged": res.converged, "status": res.status, "residuals": list(res.residuals),
           "iterations": res.iterations, "box_violations": res.violations}
    if res.localization is not None:
        loc.update(res.localization.as_dict())
    _write_json(out / "localization.json", _stamp(loc, args))
    print(f"{res.method}: {res.status} after {res.iterations} iterations, residuals {res.residuals}")
    if not res.converged:
        return EXIT_FAIL
    if res.localization is not None:
        for c in res.localization.checks:
            print(f"  {c['name']:24s} {c['value']!r} {c['relation']} {c['bound']!r}  {'ok' if c['holds'] else 'VIOLATED'}")
        if not res.localization.consistent:
            return EXIT_INCONSISTENT
    return EXIT_OK


def cmd_multi_start(args) -> int:
    pf = load(args.problem)
    params = _params(pf, args)
    ms = pf.multi_start or {}
    if "amplitudes" in ms:
        amps = ms["amplitudes"]
    elif pf.spec is not None:
        amps = shell_amplitudes(pf.spec, pf.problem.cone1.c).tolist()
    else:
        raise ProblemFileError("multi_start", "need amplitudes or a localization spec")
    if "v_levels" in ms:
        levels = ms["v_levels"]
    elif pf.spec is not None:
        levels = [0.0] if pf.spec.ball else np.linspace(pf.spec.alpha, pf.spec.beta, 3).tolist()
    else:
        levels = [0.0]
    found = multi_start(pf.problem, amps, levels, params, pf.spec)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    summary = []
    for i, res in enumerate(found):
        write_solution(out, res, f"solution_{i}")
        summary.append(res.summary())
        print(f"solution {i}: ||u||={np.max(np.abs(res.u.values))!r} ||v||={np.max(np.abs(res.v.values))!r}")
    _write_json(out / "multistart.json", _stamp({"amplitudes": list(amps), "v_levels": list(levels),
                                                 "solutions": summary}, args))
    print(f"{len(found)} distinct solution(s)")
    return EXIT_OK if found else EXIT_FAIL


def cmd_kernel_report(args) -> int:
    pf = load(args.problem)
    p = pf.problem
    rows = []
    for label, k, cone in (("k1", p.kernel1, p.cone1), ("k2", p.kernel2, p.cone2)):
        low, _ = check_nonnegative(k)
        env = verify_upper_envelope(k, cone.envelope)
        c_hat, t_star, s_star = cone_constant_search(k, cone.envelope, cone.window, GridSpec())
        ok = env.holds and low >= 0 and c_hat >= cone.c - 1e-9
        rows.append({"kernel": label, "name": k.name, "envelope": str(cone.envelope), "window": list(cone.window),
                     "min_kernel": low, "envelope_holds": env.holds, "envelope_worst_margin": env.worst_margin,
                     "c_computed": c_hat, "c_argmin": [t_star, s_star], "c_stated": cone.c,
                     "status": "ok" if ok else "fail"})
    print(f"{'kernel':8s} {'envelope':14s} {'window':16s} {'c computed':>14s} {'c stated':>9s} envelope status")
    for r in rows:
        win = f"[{r['window'][0]:g}, {r['window'][1]:g}]"
        print(f"{r['kernel']:8s} {r['envelope']:14s} {win:16s} {r['c_computed']:14.10f} {r['c_stated']:9g} "
              f"{'holds' if r['envelope_holds'] else 'FAILS':8s} {r['status']}")
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "kernel_report.json", _stamp({"rows": rows}, args))
    return EXIT_OK


# --------------------------------------------------------------------- main


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hamloc", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(sp, out_default="out"):
        sp.add_argument("problem", help="problem file or bundled example name")
        sp.add_argument("--out", default=out_default, help="output directory")
        sp.add_argument("--no-timestamp", action="store_true", help="omit generated_at fields")

    def solver_flags(sp):
        sp.add_argument("--method", choices=["picard", "newton"])
        sp.add_argument("--grid", type=int)
        sp.add_argument("--tol", type=float)

    sp = sub.add_parser("certify", help="check the theorem hypotheses and write a certificate")
    common(sp)
    sp.set_defaults(func=cmd_certify)

    sp = sub.add_parser("solve", help="compute a solution and check its localization")
    common(sp)
    solver_flags(sp)
    sp.add_argument("--multi-start", action="store_true", help="solve from a lattice of initial amplitudes")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("multi-start", help="hunt for several solutions")
    common(sp)
    solver_flags(sp)
    sp.set_defaults(func=cmd_multi_start)

    sp = sub.add_parser("kernel-report", help="envelope and cone-constant table")
    common(sp, out_default=None)
    sp.set_defaults(func=cmd_kernel_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (ProblemFileError, ExpressionError, SpecError, KernelError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
