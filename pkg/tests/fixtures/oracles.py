"""Independent oracles for the derived constants used in the test suite.

Every value is computed symbolically with sympy (integrals split at s = t)
and cross-checked by mpmath quadrature on a brute-force t grid.  Nothing
here imports hamloc.  Run as a script to refresh ``oracles.json``:

    python3 tests/fixtures/oracles.py
"""
from __future__ import annotations

import json
from pathlib import Path

import mpmath as mp
import sympy as sp

HERE = Path(__file__).resolve().parent
FROZEN = HERE / "oracles.json"

t, s = sp.symbols("t s", real=True)
QUARTER, HALF, THREE_Q = sp.Rational(1, 4), sp.Rational(1, 2), sp.Rational(3, 4)

# the two kernels, branch s <= t first
K1 = ((1 - t) * s, t * (1 - s))
K2 = (2 - t, 2 - s)


def profile(kernel, w, lo, hi):
    """t -> int_lo^hi k(t,s) w(s) ds for t in [lo, hi], as a polynomial in t."""
    left, right = kernel
    return sp.expand(sp.integrate(left * w, (s, lo, t)) + sp.integrate(right * w, (s, t, hi)))


def profile_tail(kernel, w, lo, hi):
    """Same integral for t >= hi, where only the s <= t branch is active."""
    return sp.expand(sp.integrate(kernel[0] * w, (s, lo, hi)))


def profile_head(kernel, w, lo, hi):
    """t <= lo: only the s > t branch."""
    return sp.expand(sp.integrate(kernel[1] * w, (s, lo, hi)))


def extremum(expr, lo, hi, want_min):
    crit = [c for c in sp.solve(sp.diff(expr, t), t) if c.is_real and lo <= c <= hi]
    vals = [sp.nsimplify(expr.subs(t, x)) for x in [lo, hi, *crit]]
    return sp.simplify(min(vals) if want_min else max(vals))


def symbolic() -> dict:
    out = {}
    # max_t int_0^1 k1(t,s) ds
    out["k1_unit_profile_max"] = extremum(profile(K1, 1, 0, 1), 0, 1, False)
    # min over t in [1/4,3/4] of int_{1/4}^{3/4} k1(t,s) ds
    out["k1_window_profile_min"] = extremum(profile(K1, 1, QUARTER, THREE_Q), QUARTER, THREE_Q, True)
    # max_t int_0^1 k2(t,s) ds
    out["k2_unit_profile_max"] = extremum(profile(K2, 1, 0, 1), 0, 1, False)
    # max_t int_0^1 k2(t,s) s ds
    out["k2_s_profile_max"] = extremum(profile(K2, s, 0, 1), 0, 1, False)
    # min over t in [0,1] of int_{1/4}^{3/4} k2(t,s) 5s ds, piecewise in t
    pieces = [
        extremum(profile_head(K2, 5 * s, QUARTER, THREE_Q), 0, QUARTER, True),
        extremum(profile(K2, 5 * s, QUARTER, THREE_Q), QUARTER, THREE_Q, True),
        extremum(profile_tail(K2, 5 * s, QUARTER, THREE_Q), THREE_Q, 1, True),
    ]
    out["k2_5s_window_profile_min"] = sp.simplify(min(pieces))
    # numex starting polynomial for u at t = 1/2
    coeffs = [0, sp.Rational(50667, 1000), sp.Rational(-99333, 1000), sp.Rational(85333, 1000), sp.Rational(-42667, 1000)]
    out["polynomial_u_half"] = sum(c * HALF ** i for i, c in enumerate(coeffs))
    # max_t int_0^1 k2(t,s) s e^{-1} ds: e^{v^2-2} <= e^{-1} for |v| <= 1, |sin u| <= 1
    out["h7_star_extremum"] = out["k2_s_profile_max"] * sp.exp(-1)
    # cone-margin examples
    w1 = profile(K1, 1, 0, 1)
    out["cone_margin_k1_window_term"] = sp.simplify(w1.subs(t, QUARTER) - QUARTER * out["k1_unit_profile_max"])
    w2 = profile(K2, 1, 0, 1)
    out["cone_margin_k2"] = sp.simplify(w2.subs(t, 1) - HALF * out["k2_unit_profile_max"])
    return out


def _k(kernel_name, tt, ss):
    if kernel_name == "k1":
        return (1 - tt) * ss if ss <= tt else tt * (1 - ss)
    return 2 - tt if ss <= tt else 2 - ss


def _brute_profile(kernel_name, w, lo, hi, tt):
    pts = sorted({lo, hi, min(max(tt, lo), hi)})
    return mp.quad(lambda x: _k(kernel_name, tt, x) * w(x), pts)


def brute_force(n: int = 401) -> dict:
    """Brute-force grid scan of the same quantities with mpmath quadrature."""
    mp.mp.dps = 30
    grid = [mp.mpf(i) / (n - 1) for i in range(n)]
    win = [x for x in grid if mp.mpf(1) / 4 <= x <= mp.mpf(3) / 4]
    one = lambda x: 1
    return {
        "k1_unit_profile_max": max(_brute_profile("k1", one, 0, 1, x) for x in grid),
        "k1_window_profile_min": min(_brute_profile("k1", one, mp.mpf(1) / 4, mp.mpf(3) / 4, x) for x in win),
        "k2_unit_profile_max": max(_brute_profile("k2", one, 0, 1, x) for x in grid),
        "k2_s_profile_max": max(_brute_profile("k2", lambda x: x, 0, 1, x) for x in grid),
        "k2_5s_window_profile_min": min(_brute_profile("k2", lambda x: 5 * x, mp.mpf(1) / 4, mp.mpf(3) / 4, x)
                                        for x in grid),
    }


def compute() -> dict:
    sym = symbolic()
    brute = brute_force()
    for key, val in brute.items():
        if abs(float(sym[key]) - float(val)) > 1e-12:
            raise AssertionError(f"oracle disagreement on {key}: {sym[key]} vs {val}")
    return {key: {"exact": str(val), "value": float(val)} for key, val in sym.items()}


def load() -> dict:
    return {k: v["value"] for k, v in json.loads(FROZEN.read_text()).items()}


if __name__ == "__main__":
    FROZEN.write_text(json.dumps(compute(), indent=2) + "\n")
    print(FROZEN.read_text())
