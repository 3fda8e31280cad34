import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import frontwave as fw
from frontwave.errors import RefusalError
from frontwave.model import ModelSpec
from frontwave.oracle import load_baseline
from frontwave.thresholds import classify_slope_at_zero, speed_indicator

CLASS_RANK = {"failed": 0, "s_minus": 1, "s_plus": 2}


def baseline(model, quantity, c=None):
    for entry in load_baseline():
        if entry["id"] == model and entry["quantity"] == quantity and entry["c"] == c:
            return entry
    raise KeyError((model, quantity, c))


# ------------------------------------------------------------ bounds

def test_fisher_bounds_coincide(models):
    b = fw.analytic_bounds(models["fisher"])
    assert b.lower_reac == pytest.approx(2.0, abs=1e-12)
    assert b.lower == pytest.approx(2.0, abs=1e-12)
    assert b.upper_pointwise == pytest.approx(2.0, abs=1e-12)


def test_remark_6_2_bounds(models):
    b = fw.analytic_bounds(models["remark_6_2"])
    assert b.sup_f_over_phi == pytest.approx(0.0, abs=1e-12)
    assert b.liminf_q_over_phi == 0.0
    assert b.lower_reac == 0.0 and b.lower == pytest.approx(0.0, abs=1e-12)
    # sup of phi^2 (1 - phi) on (0, 1) is 4/27
    assert b.sup_q_over_phi == pytest.approx(4 / 27, rel=1e-12)


@pytest.mark.parametrize("name", ["remark_6_2", "counterexample_6_2b", "remark_9_3_model2"])
def test_integral_bound_refines_pointwise(models, name):
    b = fw.analytic_bounds(models[name])
    assert models[name].dq0 == 0.0
    assert b.upper_integral is not None
    assert b.lower <= b.upper_integral <= b.upper_pointwise


def test_integral_bound_absent_when_slope_positive(models):
    assert fw.analytic_bounds(models["fisher"]).upper_integral is None


# ------------------------------------------------------------ critical speed

@pytest.mark.parametrize("name,exact", [("remark_6_2", 0.0), ("fisher", 2.0),
                                        ("counterexample_6_2b", 0.0)])
def test_critical_speed(models, name, exact):
    res = fw.critical_speed(models[name])
    assert abs(res.c_star - exact) <= 1e-3
    lo, hi = res.bracket
    assert lo <= res.c_star <= hi and hi - lo <= 1e-6
    b = res.bounds
    assert b.lower - 1e-3 <= res.c_star <= b.upper_pointwise + 1e-3
    assert res.c_star >= b.sup_f_over_phi - 1e-3


def test_critical_speed_witness_vanishes(models):
    res = fw.critical_speed(models["fisher"])
    assert res.witness.terminal.kind in ("reached_target_end", "z_hit_zero_at")
    assert abs(res.witness.zeta0) < 1e-3


def test_indicator_brackets_fisher(models):
    m = models["fisher"]
    assert not speed_indicator(m, 1.9).supercritical
    assert speed_indicator(m, 2.1).supercritical


def test_critical_speed_refused_without_derivative(models):
    with pytest.raises(RefusalError):
        fw.critical_speed(models["oscillatory_8_3"])


# ------------------------------------------------------------ beta

def test_beta_remark_6_2_frozen(models):
    entry = baseline("remark_6_2", "beta", 1.0)
    r = fw.beta(models["remark_6_2"], 1.0, c_star=0.0)
    assert abs(r.beta - entry["value"]) <= entry["tolerance"]
    assert r.floor == pytest.approx(-1.5)
    assert r.floor <= r.beta <= r.beta_hat <= 0.0


def test_beta_decreasing_and_unbounded(models):
    m = models["remark_6_2"]
    vals = {c: fw.beta(m, c, c_star=0.0, with_hat=False, extra_samples=0).beta
            for c in (1.0, 2.0, 6.0, 7.0)}
    assert vals[2.0] < vals[1.0]
    assert vals[6.0] < vals[1.0] - 1.0
    assert vals[7.0] < vals[2.0] - 1.0


def test_beta_sample_classes_form_single_threshold(models):
    r = fw.beta(models["remark_6_2"], 1.0, c_star=0.0, extra_samples=20)
    ranks = [CLASS_RANK[k] for _, k in r.samples]
    assert ranks == sorted(ranks)
    for b, k in r.samples:
        if b > r.beta_hat + r.b_tol:
            assert k == "s_plus"
        if b < r.beta - r.b_tol:
            assert k == "failed"


def test_beta_at_critical_speed(models):
    r = fw.beta(models["remark_6_2"], 0.0, c_star=0.0)
    assert r.beta is None and not r.integrable_case
    assert any("unknown" in n for n in r.notes)


def test_beta_refused_below_critical_speed(models):
    with pytest.raises(RefusalError):
        fw.beta(models["fisher"], 1.0, c_star=2.0)


def test_beta_hat_slope_class_near_zero(models):
    m = models["fisher"]
    r = fw.beta_hat(m, 3.0, c_star=2.0)
    assert r.beta_hat < -1e-3
    shot = fw.integrate_backward_from_one(m, 3.0, -1e-3)
    assert classify_slope_at_zero(m, 3.0, shot) == "s_plus"
    entry = baseline("fisher", "beta_hat", 3.0)
    assert abs(r.beta_hat - entry["value"]) <= entry["tolerance"]


def test_degenerate_slopes_flagged(models):
    # at c = 2 both slope roots equal -1; pass c* just below to force the search
    r = fw.beta(models["fisher"], 2.0, c_star=2.0 - 1e-3, extra_samples=0)
    assert r.degenerate
    assert r.beta_hat == r.beta


def test_beta_equals_beta_hat_in_integrable_case():
    # D = phi, g = phi (1 - phi), f = 0: q/phi^2 = 1 - phi integrable, c* > h(0) = 0
    m = fw.build_model(ModelSpec(f_poly=(0.0,), D_poly=(0.0, 1.0), g_poly=(0.0, 1.0, -1.0)))
    cs = fw.critical_speed(m)
    assert cs.c_star > 1e-3
    r = fw.beta(m, cs.c_star + 1.0, c_star=cs.c_star, extra_samples=0)
    assert r.integrable_case
    assert abs(r.beta - r.beta_hat) <= 10 * r.b_tol


# ------------------------------------------------------------ properties

@settings(max_examples=8, deadline=None)
@given(c=st.floats(0.2, 4.0), dc=st.floats(0.1, 2.0))
def test_beta_monotone_in_speed(c, dc):
    m = fw.build_model("remark_6_2")
    b1 = fw.beta(m, c, c_star=0.0, with_hat=False, extra_samples=0)
    b2 = fw.beta(m, c + dc, c_star=0.0, with_hat=False, extra_samples=0)
    assert b2.beta < b1.beta + b1.b_tol + b2.b_tol
    assert b1.beta >= b1.floor - b1.b_tol and b2.beta >= b2.floor - b2.b_tol
