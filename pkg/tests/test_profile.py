import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import frontwave as fw
from frontwave.errors import BelowAdmissibleRange, ModelError, RefusalError
from frontwave.model import ModelSpec
from frontwave.profile import CONF_NUMERIC, CONF_THEORY, CUT_FACTOR


def spec(f, D, g):
    return fw.build_model(ModelSpec(f_poly=f, D_poly=D, g_poly=g))


@pytest.fixture(scope="module")
def pair(models):
    out = {}
    for name in ("remark_9_3_model1", "remark_9_3_model2"):
        m = models[name]
        z = fw.integrate_backward_from_one(m, 0.0, 0.0)
        out[name] = (m, z, fw.build_profile(m, z, c_star=0.0))
    return out


# ------------------------------------------------------------ quadrature

def test_xi_of_phi_logistic(pair):
    m, z, _ = pair["remark_9_3_model2"]
    assert fw.xi_of_phi(m, z, 0.25) == pytest.approx(math.log(3.0), abs=1e-8)
    assert fw.xi_of_phi(m, z, 0.5) == pytest.approx(0.0, abs=1e-14)


def test_xi_of_phi_sharp(pair):
    m, z, _ = pair["remark_9_3_model1"]
    for p in (0.9, 0.5, 0.2, 1e-3):
        assert fw.xi_of_phi(m, z, p) == pytest.approx(math.log(2.0 * (1.0 - p)), abs=1e-7)
    assert fw.xi_of_phi(m, z, 0.0) == pytest.approx(math.log(2.0), abs=1e-6)


def test_xi_of_phi_divergent_ends(pair):
    m, z, _ = pair["remark_9_3_model2"]
    assert fw.xi_of_phi(m, z, 0.0) == math.inf
    assert fw.xi_of_phi(m, z, 1.0) == -math.inf


def test_xi_of_phi_needs_diffusivity(models):
    m = models["oscillatory_8_3"]
    with pytest.raises((ModelError, RefusalError)):
        fw.xi_of_phi(m, None, 0.5)


# ------------------------------------------------------------ profiles

def test_sharp_profile(pair):
    _, _, pr = pair["remark_9_3_model1"]
    assert abs(pr.xi0 - math.log(2.0)) <= 1e-6
    assert pr.a == -math.inf
    assert pr.kind_at_zero == "sharp" and pr.kind_at_one == "classical"
    assert pr.slope_at_xi0 == pytest.approx(-1.0, abs=1e-4)
    xi = np.linspace(-5.0, pr.xi0, 400)
    exact = 1.0 - np.exp(xi) / 2.0
    assert np.max(np.abs(pr.phi_at(xi) - exact)) <= 1e-4


def test_classical_profile(pair):
    _, _, pr = pair["remark_9_3_model2"]
    assert pr.xi0 == math.inf and pr.a == -math.inf
    assert pr.kind_at_zero == "classical" and pr.kind_at_one == "classical"
    xi = np.linspace(-5.0, 5.0, 400)
    assert np.max(np.abs(pr.phi_at(xi) - 1.0 / (1.0 + np.exp(xi)))) <= 1e-4
    assert pr.phi_at(math.log(3.0)) == pytest.approx(0.25, abs=1e-8)


def test_constant_extension_beyond_xi0(pair):
    _, _, pr = pair["remark_9_3_model1"]
    assert pr.phi_at(pr.xi0 + 0.5) == 0.0
    assert pr.phi_vals[-1] == 0.0


def test_semi_wavefront_reaches_one_at_finite_point(models):
    m = models["remark_6_2"]
    z = fw.integrate_backward_from_one(m, 1.0, -0.1)
    pr = fw.build_profile(m, z)
    assert math.isfinite(pr.a)
    assert pr.slope_at_a == -math.inf
    assert pr.phi_vals[0] == 1.0


def test_subcritical_profile_refused(models):
    m = models["fisher"]
    z = fw.integrate_backward_from_one(m, 1.0, 0.0)
    with pytest.raises(BelowAdmissibleRange):
        fw.build_profile(m, z)


@pytest.mark.parametrize("name,c,b", [("remark_9_3_model1", 0.0, 0.0),
                                      ("remark_9_3_model2", 0.0, 0.0),
                                      ("remark_9_3_model2", 1.0, -0.05),
                                      ("remark_6_2", 1.0, -0.1)])
def test_profile_invariants(models, name, c, b):
    m = models[name]
    z = fw.integrate_backward_from_one(m, c, b)
    pr = fw.build_profile(m, z)
    inner = pr.interior()
    phi = pr.phi_vals[inner]
    assert np.all(np.diff(phi) < 0)
    assert np.all(np.diff(pr.xi_grid) > 0)
    # flux identity D(phi) phi' = z(phi) on samples well inside the shot
    sel = inner & (pr.phi_vals > max(z.phi_min, 1e-4)) & (pr.phi_vals < 1 - 1e-4)
    p = pr.phi_vals[sel]
    flux = m.D(p) * pr.dphi_vals[sel]
    zz = z.z_at(p)
    # outside the quadrature range the integrand comes from the fitted power laws
    quad = pr._quad
    resolved = (p >= quad.phi_lo) & (p <= quad.phi_hi)
    assert np.all(np.abs(zz[resolved]) >= CUT_FACTOR * fw.DEFAULT_CONFIG.abs_tol)
    assert np.max(np.abs(flux - zz)[resolved] / np.abs(zz[resolved])) <= 1e-6
    assert np.max(np.abs(flux - zz)) <= 1e-10
    if pr.kind_at_zero == "sharp":
        assert math.isfinite(pr.xi0) and pr.slope_at_xi0 != 0.0


def test_profile_csv(tmp_path, pair):
    _, _, pr = pair["remark_9_3_model2"]
    path = tmp_path / "p.csv"
    pr.to_csv(str(path))
    with open(path) as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["xi", "phi", "dphi"]
    assert len(rows) - 1 == len(pr.xi_grid)
    # 17 significant digits round-trip
    assert float(rows[1][0]) == pr.xi_grid[0]


@settings(max_examples=10, deadline=None)
@given(norm=st.floats(0.05, 0.95), name=st.sampled_from(["remark_9_3_model1",
                                                         "remark_9_3_model2"]))
def test_normalization_shifts_the_profile(pair, norm, name):
    m, z, pr = pair[name]
    other = fw.build_profile(m, z, c_star=0.0, normalization=norm)
    shift = fw.xi_of_phi(m, z, norm)
    xi = np.linspace(-4.0, min(pr.xi0, 4.0) - 0.1, 200)
    assert np.max(np.abs(other.phi_at(xi - shift) - pr.phi_at(xi))) <= 1e-6


# ------------------------------------------------------------ slope at 1

def test_slope_at_one_flat_diffusivity():
    m = spec((0.0,), (1.0, -2.0, 1.0), (0.0, 1.0))
    assert fw.slope_at_one(m, 2.0, 0.0) == pytest.approx(-0.5)


def test_slope_at_one_negative_flux():
    m = spec((0.0,), (1.0, -2.0, 1.0), (0.0, 1.0))
    assert fw.slope_at_one(m, 2.0, -0.3) == -math.inf


def test_slope_at_one_linear_diffusivity():
    m = spec((0.0,), (1.0, -1.0), (0.0, 1.0))
    assert fw.slope_at_one(m, 0.0, 0.0) == pytest.approx(-1.0)


def test_slope_at_one_accepts_shot(pair):
    m, z, _ = pair["remark_9_3_model2"]
    # D(1) > 0: the slope at 1 is z(1) / D(1) = 0
    assert fw.slope_at_one(m, 0.0, z) == 0.0


# ------------------------------------------------------------ classification at 0

def test_classify_tree_sharp():
    m = spec((0.0,), (0.0, 1.0), (0.0, 1.0, -1.0))
    v = fw.classify_at_zero(m, 2.0, 2.0)
    assert v.kind == "sharp" and v.slope == pytest.approx(-2.0)
    assert v.confidence == CONF_THEORY


@pytest.mark.parametrize("name,kind", [("remark_9_3_model1", "sharp"),
                                       ("remark_9_3_model2", "classical")])
def test_classify_indeterminate_resolved(pair, name, kind):
    m, z, pr = pair[name]
    assert fw.classify_at_zero(m, 0.0, 0.0).kind == "indeterminate"
    v = fw.classify_at_zero(m, 0.0, 0.0, z=z)
    assert v.kind == kind and v.confidence == CONF_NUMERIC
    assert pr.kind_at_zero == kind and pr.confidence_zero == CONF_NUMERIC
    if kind == "sharp":
        assert v.slope == pytest.approx(-1.0, abs=1e-4)


def test_classify_positive_diffusivity_classical(models):
    v = fw.classify_at_zero(models["fisher"], 3.0, 2.0, z=0.0, beta_hat=-2.8)
    assert v.kind == "classical"


def test_classify_refused_below_critical(models):
    with pytest.raises(BelowAdmissibleRange):
        fw.classify_at_zero(models["remark_9_3_model2"], -1.0, 0.0)


def test_classify_above_critical_needs_thresholds(models):
    with pytest.raises(RefusalError):
        fw.classify_at_zero(spec((0.0,), (0.0, 1.0), (0.0, 1.0, -1.0)), 3.0, 2.0)
