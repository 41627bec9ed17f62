"""Grid-refinement study for the bundled examples.

For each n in the list, solves with Newton and reports the fixed-point
residuals, the second-difference residuals against u'' + f = 0 and
v'' + g = 0, their successive ratios, and the sup-norm change of the
solution against the next coarser grid.  Writes a CSV table.
"""
import argparse
import csv
import dataclasses
import time
from pathlib import Path

import numpy as np

from hamloc.operators import bvp_residual
from hamloc.problemfile import load
from hamloc.solve import default_initial_guess, solve


def study(name: str, grids: list[int]) -> list[dict]:
    pf = load(name)
    ig = pf.initial_guess
    coeffs = {k: ig[k] for k in ("u", "v") if k in ig}
    rows, prev = [], None
    for n in grids:
        init = default_initial_guess(pf.spec, ig["kind"], coeffs, n=n)
        t0 = time.perf_counter()
        res = solve(pf.problem, init, dataclasses.replace(pf.params, n=n), pf.spec)
        row = {"problem": name, "n": n, "seconds": round(time.perf_counter() - t0, 3),
               "iterations": res.iterations, "status": res.status,
               "r1": res.residuals[0], "r2": res.residuals[1],
               "bvp_u": bvp_residual(res.u, pf.problem.f, res.v, "u"),
               "bvp_v": bvp_residual(res.u, pf.problem.g, res.v, "v")}
        if prev is not None:
            p_row, p_res = prev
            row["ratio_u"] = p_row["bvp_u"] / row["bvp_u"]
            row["ratio_v"] = p_row["bvp_v"] / row["bvp_v"]
            row["change_u"] = float(np.max(np.abs(res.u.values[::2] - p_res.u.values)))
            row["change_v"] = float(np.max(np.abs(res.v.values[::2] - p_res.v.values)))
        rows.append(row)
        prev = (row, res)
        print({k: (f"{v:.4g}" if isinstance(v, float) else v) for k, v in row.items()})
    return rows


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--problems", nargs="+", default=["numex", "ex2"])
    ap.add_argument("--grids", nargs="+", type=int, default=[129, 257, 513, 1025, 2049])
    ap.add_argument("--out", default="runs/convergence.csv")
    args = ap.parse_args()
    rows = [r for name in args.problems for r in study(name, args.grids)]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    keys = list(dict.fromkeys(k for r in rows for k in r))
    with open(out, "w", newline="") as fh:
        w = csv.DictWriter(fh, keys)
        w.writeheader()
        w.writerows(rows)
    print(f"wrote {out}")
