import json
import math

import numpy as np
import pytest

import frontwave as fw
from frontwave import oracle
from frontwave.model import Model


def fact(label):
    for f in oracle.analytic_facts():
        if f.label == label:
            return f
    raise KeyError(label)


# ------------------------------------------------------------ analytic facts

def test_exact_z_fact_passes():
    f = fact("remark_6_2:exact_z")
    shot = oracle.compute_artifact(f)
    chk = oracle.verify_fact(f, shot)
    assert chk.passed and chk.deviation < 1e-6


def test_exact_profile_fact_passes():
    f = fact("remark_9_3_model2:exact_profile")
    chk = oracle.verify_fact(f, oracle.compute_artifact(f))
    assert chk.passed


def test_nonexistence_fact_passes_only_on_refusal():
    f = fact("oscillatory_8_3:nonexistence:s_pm")
    m = fw.build_model("oscillatory_8_3")
    assert oracle.verify_fact(f, lambda: fw.s_pm(m, 1.0)).passed
    assert not oracle.verify_fact(f, lambda: (-1.0, 0.0)).passed


def test_wrong_artifact_fails():
    f = fact("remark_6_2:exact_z")
    wrong = fw.integrate_backward_from_one(fw.build_model("remark_6_2"), 0.5, 0.0)
    assert not oracle.verify_fact(f, wrong).passed


@pytest.mark.parametrize("f", oracle.analytic_facts(), ids=lambda f: f.label)
def test_facts_are_self_consistent(f):
    chk = oracle.self_check(f)
    if chk is not None:
        assert chk.passed, chk.detail


def test_analytic_suite_all_pass():
    checks = oracle.analytic_suite()
    assert checks
    bad = [c.label for c in checks if not c.passed]
    assert not bad


# ------------------------------------------------------------ reference values

@pytest.mark.parametrize("name,exact", [("fisher", 2.0), ("remark_6_2", 0.0)])
def test_reference_critical_speed(name, exact):
    ref = oracle.reference_bisection(fw.build_model(name), "c_star")
    assert ref.stable
    assert abs(ref.value - exact) <= 1e-4


def test_reference_beta_stable_across_collars():
    ref = oracle.reference_bisection(fw.build_model("remark_6_2"), "beta", c=1.0)
    assert ref.stable and len(ref.values) == 3
    assert ref.spread <= 10 * ref.tolerance


def test_regression_suite_matches_baseline():
    checks = oracle.regression_suite()
    assert len(checks) == len(oracle.load_baseline())
    assert all(c.passed for c in checks)


def test_minted_baseline_roundtrip(tmp_path):
    path = tmp_path / "b.json"
    oracle.mint_baseline(str(path), queries=(("remark_6_2", "c_star", None),))
    entries = oracle.load_baseline(str(path))
    assert len(entries) == 1
    assert entries[0]["id"] == "remark_6_2" and entries[0]["quantity"] == "c_star"
    assert json.loads(path.read_text()) == entries


# ------------------------------------------------------------ endpoint slopes

def test_endpoint_slopes_above_critical():
    m = fw.build_model("fisher")
    chk = oracle.endpoint_slopes(m, 3.0, 2.0)
    assert chk.branch_zero == "s_plus"
    assert chk.ok_one and chk.ok_zero


# ------------------------------------------------------------ property corpus

def test_corpus_is_deterministic():
    a = oracle.random_corpus(6, seed=7)
    b = oracle.random_corpus(6, seed=7)
    assert a == b
    assert oracle.random_corpus(6, seed=8) != a


def test_corpus_members_satisfy_positivity():
    phi = np.linspace(0, 1, 201)[1:-1]
    for spec in oracle.random_corpus(10):
        m = Model(spec)
        assert np.all(m.q(phi) > 0)
        assert abs(float(m.q(0.0))) < 1e-14 and abs(float(m.q(1.0))) < 1e-14
        assert m.dq0 is not None


def test_property_suite_small_corpus():
    rep = oracle.property_suite(n=6, seed=oracle.CORPUS_SEED)
    assert len(rep.members) == 6
    assert rep.ok, (rep.violations, rep.errors)


def test_reaction_bound_respected_by_member_with_positive_slope():
    for spec in oracle.random_corpus(30):
        m = Model(spec)
        if m.dq0 > 1e-3:
            cs = fw.critical_speed(m)
            assert cs.c_star >= m.h0 + 2 * math.sqrt(m.dq0) - 1e-3
            return
    pytest.fail("corpus has no member with a positive slope of q at 0")
