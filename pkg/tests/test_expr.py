import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamloc.expr import (Binary, Box3, Const, DomainError, ParseError, SamplingPolicy, Unary, Var, bound_on_box,
                         evaluate, parse)

F_NUMEX = "t*u^2*(1+sin(v)^2)"
G_NUMEX = "t*(2+sin(u))*(6+cos(v))"


@pytest.mark.parametrize("src, point, expected", [
    (F_NUMEX, (1, 2, 0), 4.0),
    (G_NUMEX, (1, 0, 0), 14.0),
    ("t*exp(v^2-2)*sin(u)", (1, 0, 1), 0.0),
    (F_NUMEX, (0.5, 2, 0), 2.0),
    (G_NUMEX, (1, math.pi / 2, math.pi), 15.0),
    ("32", (0.3, 7, -2), 32.0),
])
def test_evaluate_examples(src, point, expected):
    assert evaluate(parse(src), *point) == pytest.approx(expected, abs=1e-14)


def test_precedence():
    assert evaluate(parse("1+2*3")) == 7
    assert evaluate(parse("-2^2")) == -4
    assert evaluate(parse("(-2)^2")) == 4
    assert evaluate(parse("2*-3")) == -6
    assert evaluate(parse("8/4/2")) == 1
    assert evaluate(parse("10-4-3")) == 3


def test_power_is_left_associative():
    assert evaluate(parse("2^3^2")) == 64


def test_negative_exponent():
    assert evaluate(parse("u^-1"), u=4) == 0.25


def test_pi_and_functions():
    assert evaluate(parse("cos(pi)")) == -1
    assert evaluate(parse("sqrt(abs(u))"), u=-9) == 3
    assert evaluate(parse("exp(0)")) == 1


def test_vectorized_call():
    e = parse("t + u*v")
    out = e(t=np.array([0.0, 1.0]), u=2.0, v=np.array([3.0, 4.0]))
    np.testing.assert_array_equal(out, [6.0, 9.0])


@pytest.mark.parametrize("src, pos", [("t*", 2), ("(t+1", 4), ("t $ u", 2), ("sin t", 4), ("", 0)])
def test_syntax_errors_report_position(src, pos):
    with pytest.raises(ParseError) as info:
        parse(src)
    assert info.value.position == pos


def test_unknown_identifier():
    with pytest.raises(ParseError, match="unknown"):
        parse("t*w")


@pytest.mark.parametrize("src, env", [
    ("1/u", {"u": 0.0}),
    ("sqrt(u)", {"u": -1.0}),
    ("u^0.5", {"u": -2.0}),
    ("u^-1", {"u": 0.0}),
])
def test_domain_errors_carry_witness(src, env):
    with pytest.raises(DomainError) as info:
        evaluate(parse(src), **env)
    assert info.value.witness["u"] == env["u"]


def test_domain_error_witness_in_vector():
    e = parse("1/(u-2)")
    with pytest.raises(DomainError) as info:
        e(u=np.linspace(0, 4, 5))
    assert info.value.witness["u"] == 2.0


def test_integer_power_of_negative_base_is_fine():
    assert evaluate(parse("u^3"), u=-2) == -8


@pytest.mark.parametrize("src, box, side, expected", [
    (F_NUMEX, Box3((0.25, 0.75), (64, 256), (1, 14)), "lower", 1024.0),
    (F_NUMEX, Box3((0, 1), (0, 4), (1, 14)), "upper", 32.0),
])
def test_bound_on_box_examples(src, box, side, expected):
    b = bound_on_box(parse(src), box)
    assert getattr(b, side) == pytest.approx(expected, rel=1e-6)
    assert b.rigorous is False


def test_bound_on_box_constant():
    b = bound_on_box(parse("7"), Box3((0, 1), (-3, 3), (2, 5)))
    assert (b.lower, b.upper) == (7.0, 7.0)


def test_bound_on_box_domain_error_has_witness():
    with pytest.raises(DomainError) as info:
        bound_on_box(parse("1/(u-1)"), Box3((0, 1), (0, 2), (0, 1)), SamplingPolicy(samples=3))
    assert info.value.witness["u"] == 1.0


def test_box_rejects_inverted_interval():
    with pytest.raises(ValueError):
        Box3((1, 0), (0, 1), (0, 1))


def test_bound_on_box_is_sound_on_samples():
    e = parse("sin(3*u)*cos(v) + t^2")
    box = Box3((0, 1), (-1, 2), (0, 3))
    pol = SamplingPolicy(samples=16, refinements=1, local_samples=9)
    b = bound_on_box(e, box, pol)
    T, U, V = np.meshgrid(*(np.linspace(lo, hi, 16) for lo, hi in (box.t, box.u, box.v)), indexing="ij")
    vals = e(t=T, u=U, v=V)
    assert b.lower <= vals.min() + 1e-15
    assert b.upper >= vals.max() - 1e-15


def test_refinement_approaches_true_range_from_inside():
    # exact range: t, u at their lower ends with sin v = 0; upper ends with sin^2 v = 1
    e = parse("t*u^2*(1+sin(v)^2)")
    box = Box3((0.25, 0.75), (64, 256), (1, 14))
    lo, hi = 1024.0, 0.75 * 256 ** 2 * 2
    coarse = bound_on_box(e, box, SamplingPolicy(samples=8, refinements=0, local_samples=3))
    fine = bound_on_box(e, box, SamplingPolicy(samples=64, refinements=2))
    for b in (coarse, fine):
        assert lo - 1e-9 <= b.lower and b.upper <= hi + 1e-9
    assert fine.lower - lo <= coarse.lower - lo + 1e-12
    assert hi - fine.upper <= hi - coarse.upper + 1e-12


# -------------------------------------------------------------------- round trip

_leaf = st.one_of(
    st.sampled_from(["t", "u", "v"]).map(Var),
    st.floats(min_value=-5, max_value=5, allow_nan=False).map(lambda x: Const(round(x, 3))),
)


def _grow(children):
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*"]), children, children).map(lambda a: Binary(*a)),
        st.tuples(st.sampled_from(["neg", "sin", "cos", "abs"]), children).map(lambda a: Unary(*a)),
        st.tuples(children, st.integers(0, 3)).map(lambda a: Binary("^", a[0], Const(float(a[1])))),
    )


trees = st.recursive(_leaf, _grow, max_leaves=12)


@settings(max_examples=60, deadline=None)
@given(trees)
def test_parse_print_round_trip(node):
    from hamloc.expr import Expression

    e = Expression(node)
    back = parse(e.to_source())
    rng = np.random.default_rng(0)
    pts = rng.uniform(-2, 2, size=(3, 100))
    a = e(t=pts[0], u=pts[1], v=pts[2])
    b = back(t=pts[0], u=pts[1], v=pts[2])
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-12)
