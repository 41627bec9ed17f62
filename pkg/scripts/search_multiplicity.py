"""Parameter search for a three-solution test problem.

Family: f(u) = A + B r^p / (1 + r^p), r = u / u0, g = 1, with k1, k2 and
the Dirichlet window [1/4, 3/4].  A candidate (A, B, u0, p) and radii
ra < rb < rc < rd pass the brute-force screen when

    inf f on [ra, ra/c1] * m  > ra      (m = min over the window of int k1 over the window)
    sup f on [0, rb]     * M  < rb      (M = max_t int_0^1 k1)
    inf f on [rc, rc/c1] * m  > rc
    sup f on [0, rd]     * M  < rd

with m, M computed here by brute-force trapezoid sums, not taken from the
library.  Survivors are then run through certify_multiplicity and, with
--solve, through multi-start to count distinct solutions.
"""
import argparse
import itertools
import json

import numpy as np
from scipy.integrate import trapezoid

C1 = 0.25


def k1(t, s):
    return np.where(s <= t, (1 - t) * s, t * (1 - s))


def brute_constants(n: int = 2001) -> tuple[float, float]:
    s = np.linspace(0, 1, n)
    T, S = np.meshgrid(s, s, indexing="ij")
    full = trapezoid(k1(T, S), s, axis=1)
    w = s[(s >= 0.25) & (s <= 0.75)]
    Tw, Sw = np.meshgrid(w, w, indexing="ij")
    window = trapezoid(k1(Tw, Sw), w, axis=1)
    return float(window.min()), float(full.max())


def family(A, B, u0, p):
    return lambda u: A + B * (u / u0) ** p / (1 + (u / u0) ** p)


def screen(f, radii, m, M, samples=4001):
    ra, rb, rc, rd = radii
    lo = lambda a, b: f(np.linspace(a, b, samples)).min()
    hi = lambda a, b: f(np.linspace(a, b, samples)).max()
    margins = [lo(ra, ra / C1) * m - ra, rb - hi(0, rb) * M, lo(rc, rc / C1) * m - rc, rd - hi(0, rd) * M]
    return min(margins), margins


def search(m, M):
    grid = itertools.product([10, 16, 20, 24], [60, 80, 120], [4.5, 5.5, 6.5], [20, 40, 60],
                             [(1, 5, 6, 25), (1, 6, 7, 30), (1.25, 6, 7, 30)])
    for A, B, u0, p, radii in grid:
        worst, margins = screen(family(A, B, u0, p), radii, m, M)
        if worst > 1e-9:  # same strictness as the certificate
            yield {"A": A, "B": B, "u0": u0, "p": p, "radii": radii, "screen_margins": margins}


def certify(c):
    from hamloc.certify import MultiplicitySpec, certify_multiplicity
    from hamloc.operators import Problem

    f = f"{c['A']}+{c['B']}*(u/{c['u0']})^{c['p']}/(1+(u/{c['u0']})^{c['p']})"
    ra, rb, rc, rd = c["radii"]
    fam = family(c["A"], c["B"], c["u0"], c["p"])
    bounds = {"f_lower_a": repr(float(fam(np.float64(ra)))), "f_upper_b": repr(float(fam(np.float64(rb)))),
              "f_lower_c": repr(float(fam(np.float64(rc)))), "f_upper_d": repr(float(fam(np.float64(rd)))),
              "g_lower": "1", "g_upper": "1"}
    cert = certify_multiplicity(Problem.make(f, "1"), MultiplicitySpec(tuple(c["radii"]), alpha=0.25, beta=2), bounds)
    return f, bounds, cert


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--limit", type=int, default=5)
    ap.add_argument("--solve", action="store_true", help="multi-start the first certified candidate")
    args = ap.parse_args()
    m, M = brute_constants()
    print(f"brute-force constants: window min {m:.6f}, full max {M:.6f}")
    found = []
    for cand in search(m, M):
        f, bounds, cert = certify(cand)
        cand.update(f=f, bounds=bounds, verdict=cert.verdict,
                    margins={r.id: r.margin for r in cert.records if r.id.startswith("M:")})
        print(json.dumps(cand))
        if cert.passed:
            found.append(cand)
        if len(found) >= args.limit:
            break
    if args.solve and found:
        from hamloc.operators import Problem, sup_norm
        from hamloc.solve import SolveParams, multi_start

        c = found[0]
        sols = multi_start(Problem.make(c["f"], "1"), [1, 2, 3, 4, 5, 6, 8, 10, 12, 14], [1.0], SolveParams(n=513))
        print(f"{len(sols)} distinct solutions, sup norms {[round(sup_norm(s.u), 4) for s in sols]}")
