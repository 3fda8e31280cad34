import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import frontwave as fw
from frontwave.errors import ModelError, RefusalError
from frontwave.model import FAILS, HOLDS, ModelSpec


def test_remark_6_2_handle():
    m = fw.build_model("remark_6_2")
    phi = np.linspace(0.0, 1.0, 11)
    np.testing.assert_allclose(m.h(phi), 3 * phi * (phi - 1), atol=1e-15)
    np.testing.assert_allclose(m.q(phi), phi ** 3 * (1 - phi), atol=1e-15)
    assert m.h0 == 0.0
    assert m.dq1 == pytest.approx(-1.0, abs=1e-14)


def test_plain_kpp_handle():
    m = fw.build_model(ModelSpec(f_poly=(0.0,), D_poly=(1.0,), g_poly=(0.0, 1.0, -1.0)))
    assert m.dq0 == pytest.approx(1.0)
    phi = np.linspace(0, 1, 7)
    np.testing.assert_allclose(m.q(phi), phi * (1 - phi), atol=1e-15)


def test_model1_shares_q_with_remark_6_2():
    m1 = fw.build_model("remark_9_3_model1")
    m2 = fw.build_model("remark_9_3_model2")
    phi = np.linspace(0, 1, 13)
    np.testing.assert_allclose(m1.q(phi), phi ** 3 * (1 - phi), atol=1e-15)
    np.testing.assert_allclose(m1.q(phi), m2.q(phi), atol=1e-15)


def test_validate_remark_6_2():
    rep = fw.validate_assumptions(fw.build_model("remark_6_2"))
    assert rep.verdicts["(q)"] == HOLDS
    assert rep.dq0 == 0.0 and rep.dq0_exists
    assert rep.verdicts["int q/s^2 finite"] == HOLDS
    assert rep.ok


def test_validate_oscillatory_8_3_reports_missing_derivative():
    rep = fw.validate_assumptions(fw.build_model("oscillatory_8_3"))
    assert not rep.dq0_exists
    assert rep.dq0 is None


def test_validate_semi_wavefront_pattern():
    rep = fw.validate_assumptions(
        fw.build_model(ModelSpec(f_poly=(0.0,), D_poly=(1.0, 1.0), g_poly=(0.0, 1.0))))
    assert rep.verdicts["(g0)"] == HOLDS
    assert rep.verdicts["(g01)"] == FAILS
    assert rep.scenario == "semi-wavefront"


def test_validate_diffusivity_mismatch_flagged():
    # g(1) = 1 needs D positive at 0; D(0) = 0 here
    rep = fw.validate_assumptions(
        fw.build_model(ModelSpec(f_poly=(0.0,), D_poly=(0.0, 1.0), g_poly=(0.0, 1.0))))
    assert rep.scenario == "semi-wavefront"
    assert not rep.scenario_consistent
    assert not rep.ok


def test_registry_model2():
    p = fw.get_preset("remark_9_3_model2")
    assert p.spec.D_poly == (0.0, 1.0)
    m = fw.build_model(p.spec)
    phi = np.linspace(0, 1, 9)
    np.testing.assert_allclose(m.g(phi), phi ** 2 * (1 - phi), atol=1e-15)
    for xi in (-3.0, 0.0, math.log(3.0), 2.5):
        assert p.exact_profile(xi) == pytest.approx(1 / (1 + math.exp(xi)), rel=1e-15)


def test_registry_counterexample():
    p = fw.get_preset("counterexample_6_2b")
    phi = np.linspace(0, 1, 9)
    np.testing.assert_allclose(p.exact_z(phi), -phi ** 2, atol=1e-15)
    assert p.exact_c_star == 0.0


def test_registry_fisher():
    p = fw.get_preset("fisher")
    assert p.exact_z is None
    assert p.exact_c_star == 2.0
    # both sides of the speed sandwich equal 2: q/phi = 1 - phi has sup and liminf 1 at 0+
    b = fw.analytic_bounds(fw.build_model(p.spec))
    assert b.lower == pytest.approx(2.0, abs=1e-12)
    assert b.upper_pointwise == pytest.approx(2.0, abs=1e-12)


def test_registry_order_and_unknown_name():
    names = fw.preset_names()
    assert names == sorted(names)
    assert {"fisher", "remark_6_2", "counterexample_6_2b", "oscillatory_7_2",
            "oscillatory_8_3", "remark_9_3_model1", "remark_9_3_model2"} <= set(names)
    with pytest.raises(ModelError):
        fw.get_preset("nope")


def test_load_model_roundtrip(tmp_path):
    path = tmp_path / "m.json"
    path.write_text(json.dumps({"f": {"poly": [0, 0, -1.5, 1]}, "D": {"poly": [0, 1, -1]},
                                "g": {"poly": [0, 0, 1]}}))
    m = fw.load_model(str(path))
    ref = fw.build_model("remark_6_2")
    phi = np.linspace(0, 1, 11)
    np.testing.assert_allclose(m.q(phi), ref.q(phi), atol=1e-15)
    np.testing.assert_allclose(m.h(phi), ref.h(phi), atol=1e-14)


@pytest.mark.parametrize("payload", ["{", json.dumps({"f": {"poly": []}, "D": {"poly": [1]},
                                                       "g": {"poly": [0, 1]}}),
                                     json.dumps({"D": {"poly": [1]}})])
def test_load_model_rejects_bad_configs(tmp_path, payload):
    path = tmp_path / "bad.json"
    path.write_text(payload)
    with pytest.raises(ModelError):
        fw.load_model(str(path))


def test_missing_derivative_blocks_downstream(models):
    with pytest.raises(RefusalError):
        fw.s_pm(models["oscillatory_8_3"], 1.0)
    with pytest.raises(RefusalError):
        fw.r_plus(models["oscillatory_7_2"], 1.0)


coef = st.floats(-2.0, 2.0, allow_nan=False)


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-0.9, 2.0), b=coef, d0=st.floats(0.1, 2.0), d1=coef)
def test_flux_factor_and_scenario_consistency(a, b, d0, d1):
    # g = phi (1 - phi)(1 + a phi^2) with a > -1 is positive inside; D = d0 + d1 phi^2 may not be
    g = (0.0, 1.0, -1.0 + a, -a)
    D = (d0, 0.0, d1)
    m = fw.build_model(ModelSpec(f_poly=(0.0, b), D_poly=D, g_poly=g))
    phi = np.linspace(0, 1, 21)
    np.testing.assert_allclose(m.q(phi), m.D(phi) * m.g(phi), atol=1e-13)
    rep = fw.validate_assumptions(m)
    assert rep.verdicts["(g01)"] == HOLDS
    assert rep.scenario == "wavefront"
    if rep.verdicts["(q)"] == HOLDS:
        assert np.all(m.q(phi[1:-1]) > 0)
    assert rep.dq0 == pytest.approx(d0, rel=1e-12)
    if rep.ok:
        assert rep.scenario_consistent and rep.verdicts["(q)"] == HOLDS
