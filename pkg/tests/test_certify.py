import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hamloc.certify import (LocalizationSpec, MultiplicitySpec, SpecError, certify_H5, certify_H6, certify_H7,
                            certify_H8, certify_multiplicity, certify_th_Ham, certify_th_Ham2, h7_box, h8_box,
                            render_text)
from hamloc.operators import Problem

C1 = 0.25


def numex_spec(**kw):
    base = dict(rho1=64, rho2=4, alpha=1, beta=14)
    base.update(kw)
    return LocalizationSpec.make(base.pop("rho1"), base.pop("rho2"), C1, **base)


@pytest.fixture(scope="module")
def p_numex(numex):
    return numex.problem


@pytest.fixture(scope="module")
def numex_cert(numex):
    return certify_th_Ham(numex.problem, numex.spec, numex.bounds)


def test_numex_margins(numex_cert):
    assert numex_cert.passed
    want = {"H5": 0.0, "H6": 0.0, "H7": 0.25, "H8": 0.0}
    for cid, margin in want.items():
        assert abs(numex_cert.record(cid).margin - margin) <= 1e-8
    assert [numex_cert.record(c).tight for c in want] == [True, True, False, True]
    assert numex_cert.rigorous is False


def test_numex_extrema(numex_cert, oracle):
    assert abs(numex_cert.record("H5").extremum - 1024 * oracle["k1_window_profile_min"]) <= 1e-8
    assert abs(numex_cert.record("H6").extremum - 32 * oracle["k1_unit_profile_max"]) <= 1e-8
    assert abs(numex_cert.record("H7").extremum - oracle["k2_5s_window_profile_min"]) <= 1e-8
    assert abs(numex_cert.record("H8").extremum - 21 * oracle["k2_s_profile_max"]) <= 1e-8


def test_numex_beta_13_fails_H8(p_numex, numex):
    cert = certify_th_Ham(p_numex, numex_spec(beta=13), numex.bounds)
    assert not cert.passed
    assert not cert.record("H8").passed
    assert cert.record("H8").margin == pytest.approx(-1.0, abs=1e-8)


def test_numex_compressive_attempt_fails(p_numex, numex):
    spec = LocalizationSpec.make(4, 64, C1, alpha=1, beta=14)
    assert spec.case == "compressive"
    cert = certify_th_Ham(p_numex, spec, numex.bounds)
    h5 = cert.record("H5")
    assert not h5.passed
    assert not h5.domination["holds"]


def test_expansive_boxes(p_numex):
    spec = numex_spec()
    assert h7_box(p_numex, spec).u == (1.0, 256.0)
    assert h8_box(p_numex, spec).u == (0.0, 256.0)


@pytest.mark.parametrize("f_lower, margin, ok", [("1024", 0.0, True), ("2048", 64.0, True), ("0", -64.0, False)])
def test_H5_examples(p_numex, f_lower, margin, ok):
    # integral part only; the sampled domination check is exercised separately
    r = certify_H5(p_numex, numex_spec(), f_lower, domination="user-asserted")
    assert r.passed is ok
    assert r.margin == pytest.approx(margin, abs=1e-8)


def test_H5_bound_above_f_fails_domination(p_numex):
    r = certify_H5(p_numex, numex_spec(), "2048")
    assert r.margin == pytest.approx(64.0, abs=1e-8)
    assert not r.domination["holds"] and not r.passed
    assert r.domination["min_gap"] == pytest.approx(-1024.0, rel=1e-6)


@pytest.mark.parametrize("f_upper, ok", [("32", True), ("40", False)])
def test_H6_examples(p_numex, f_upper, ok):
    assert certify_H6(p_numex, numex_spec(), f_upper).passed is ok


def test_H6_zero_bound_fails_only_on_domination(p_numex):
    # f <= 0 is false on the box, so the integral passes but the domination check does not
    r = certify_H6(p_numex, numex_spec(), "0")
    assert r.margin == pytest.approx(4.0)
    assert not r.domination["holds"] and not r.passed


def test_H6_zero_bound_for_zero_f():
    p = Problem.make("0", "1")
    assert certify_H6(p, numex_spec(), "0").passed


def test_H7_examples(p_numex):
    assert not certify_H7(p_numex, numex_spec(), "0").passed
    r = certify_H7(p_numex, numex_spec(alpha=1.25), "5*t")
    assert r.passed and abs(r.margin) <= 1e-8 and r.tight


@pytest.mark.parametrize("g_upper, ok", [("21*t", True), ("24*t", False)])
def test_H8_examples(p_numex, g_upper, ok):
    assert certify_H8(p_numex, numex_spec(), g_upper).passed is ok


def test_H8_zero_bound_for_zero_g():
    assert certify_H8(Problem.make("1", "0"), numex_spec(), "0").passed


def test_ex2_certificate(ex2, oracle):
    cert = certify_th_Ham2(ex2.problem, ex2.spec, ex2.bounds)
    assert cert.passed
    h7 = cert.record("H7*")
    assert abs(h7.extremum - oracle["h7_star_extremum"]) <= 1e-8
    assert cert.spec["R1"] == 256.0


def test_ex2_small_R2_fails(ex2):
    spec = LocalizationSpec.make(64, 4, C1, R2=0.2)
    cert = certify_th_Ham2(ex2.problem, spec, ex2.bounds)
    assert not cert.record("H7*").passed


@pytest.mark.parametrize("R2", [0.1, 1.0, 7.0])
def test_zero_g_passes_H7_star(R2):
    p = Problem.make("t*u^2*(1+sin(v)^2)", "0")
    spec = LocalizationSpec.make(64, 4, C1, R2=R2)
    cert = certify_th_Ham2(p, spec, {"f_star_lower": "1024", "f_star_upper": "32", "g_star": "0"}, kernels=False)
    assert cert.record("H7*").passed


def test_spec_errors():
    with pytest.raises(SpecError):
        LocalizationSpec.make(8, 8, C1, alpha=1, beta=2)  # 32 < 8 fails and 8 < 8 fails
    with pytest.raises(SpecError):
        LocalizationSpec.make(64, 4, C1, case="compressive", alpha=1, beta=2)
    with pytest.raises(SpecError):
        LocalizationSpec(64, 4, "expansive", alpha=1, beta=2, R2=1)
    with pytest.raises(SpecError):
        LocalizationSpec(64, 4, "expansive", alpha=3, beta=2)


def test_theorem_target_mismatch(ex2, numex):
    with pytest.raises(SpecError):
        certify_th_Ham(ex2.problem, ex2.spec, ex2.bounds)
    with pytest.raises(SpecError):
        certify_th_Ham2(numex.problem, numex.spec, numex.bounds)


@settings(max_examples=15, deadline=None)
@given(st.floats(0.01, 100))
def test_H5_scaling_covariance(p_numex, lam):
    spec = numex_spec()
    base = certify_H5(p_numex, spec, "1024+t", domination="user-asserted")
    scaled = certify_H5(p_numex, spec, f"{lam!r}*(1024+t)", domination="user-asserted")
    assert scaled.extremum == pytest.approx(lam * base.extremum, rel=1e-12, abs=0)


def test_certificate_determinism(numex):
    a = certify_th_Ham(numex.problem, numex.spec, numex.bounds).as_dict()
    b = certify_th_Ham(numex.problem, numex.spec, numex.bounds).as_dict()
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)


@settings(max_examples=10, deadline=None)
@given(st.floats(14, 40), st.floats(0.2, 1.25))
def test_verdicts_monotone_in_thresholds(p_numex, numex, beta, alpha):
    base = certify_th_Ham(p_numex, numex_spec(), numex.bounds, domination="user-asserted", kernels=False)
    looser = certify_th_Ham(p_numex, numex_spec(alpha=alpha, beta=beta), numex.bounds,
                            domination="user-asserted", kernels=False)
    assert base.passed and looser.passed


def test_text_report_mirrors_json(numex_cert):
    doc = numex_cert.as_dict()
    text = render_text(doc)

    def leaves(obj):
        if isinstance(obj, dict):
            for v in obj.values():
                yield from leaves(v)
        elif isinstance(obj, list):
            for v in obj:
                yield from leaves(v)
        elif isinstance(obj, float) and math.isfinite(obj):
            yield obj

    for x in leaves(doc):
        assert repr(x) in text


# ------------------------------------------------------------- multiplicity


def test_multiplicity_three_solutions():
    from hamloc.problemfile import load

    pf = load("three_solutions")
    cert = certify_multiplicity(pf.problem, pf.multiplicity, pf.bounds)
    assert cert.passed
    assert cert.localization["solutions"] == 3
    assert all(r.margin > 0 for r in cert.records if r.id.startswith("M:"))


def test_multiplicity_radii_ordering():
    with pytest.raises(SpecError):
        MultiplicitySpec((1, 3, 6, 25), alpha=0.5, beta=2).validate(C1)  # 1/c1 = 4 > 3


def test_multiplicity_needs_four_radii():
    with pytest.raises(SpecError):
        MultiplicitySpec((64, 4), alpha=1, beta=14).validate(C1)


def test_multiplicity_requires_strict_margins():
    # a tight single-shell bound that passes th_Ham is rejected when used as a multiplicity boundary
    p = Problem.make("1024", "1")
    m = MultiplicitySpec((64, 300, 301, 1300), alpha=0.25, beta=2)
    bounds = {"f_lower_a": "1024", "f_upper_b": "1024", "f_lower_c": "4832", "f_upper_d": "1024",
              "g_lower": "1", "g_upper": "1"}
    cert = certify_multiplicity(p, m, bounds, domination="user-asserted", kernels=False)
    assert not cert.record("M:lower@rho_a").passed
    assert abs(cert.record("M:lower@rho_a").margin) <= 1e-9
