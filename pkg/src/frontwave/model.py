"""Model functions f, D, g on [0, 1] and their standing-assumption checks.

A model is either three polynomials (coefficients listed constant term
first) or one of a closed set of non-polynomial evaluators registered under
a tag.  Everything downstream only needs

* ``h = f'`` (the convective slope) and
* ``q = D * g`` (the reaction-diffusion product),

together with the one-sided derivatives of ``q`` at 0 and 1.
"""

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from numpy.polynomial import Polynomial

from .errors import ModelError

HOLDS = "holds"
FAILS = "fails"
NOT_APPLICABLE = "not-applicable"

SEMI_WAVEFRONT = "semi-wavefront"
WAVEFRONT = "wavefront"
Q_ONLY = "q-only"

_GRID = np.linspace(0.0, 1.0, 1001)
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class ModelSpec:
    """Input description of a model.

    Parameters
    ----------
    f_poly, D_poly, g_poly : tuple of float, optional
        Coefficients, constant term first.
    special : str, optional
        Tag of a closed-form evaluator; when set the polynomials are ignored.
    name : str, optional
        Display name carried into reports.
    """

    f_poly: Optional[tuple] = None
    D_poly: Optional[tuple] = None
    g_poly: Optional[tuple] = None
    special: Optional[str] = None
    name: Optional[str] = None


@dataclass(frozen=True)
class _ClosedForm:
    h: Callable
    q: Callable
    dq0: Optional[float]
    dq1: Optional[float]
    h0: float
    h1: float
    q_lowest_order: Optional[int]
    verdicts: dict
    notes: tuple


def _osc_logm(phi):
    # log(1 - phi) with the endpoint mapped to a finite dummy (factor vanishes there)
    phi = np.asarray(phi, dtype=float)
    return np.log(np.where(phi < 1.0, 1.0 - phi, 1.0))


def _osc_logp(phi):
    phi = np.asarray(phi, dtype=float)
    return np.log(np.where(phi > 0.0, phi, 1.0))


def _osc1_q(phi):
    L = _osc_logm(phi)
    s = np.sin(L)
    return phi ** 3 * (1.0 - phi) * ((s + 2.0) ** 2 + 2.0 * np.cos(L) + 0.5 * np.sin(2.0 * L))


def _osc1_h(phi):
    L = _osc_logm(phi)
    return phi * (phi - 1.0) * (np.cos(L) + 3.0 * np.sin(L) + 6.0)


def _osc2_q(phi):
    ell = _osc_logp(phi)
    return phi * (1.0 - phi) ** 4 * (2.0 + np.sin(ell)) * (3.0 - np.cos(ell) - np.sin(ell))


def _osc2_h(phi):
    ell = _osc_logp(phi)
    return 2.0 * (2.0 + np.sin(ell)) * (1.0 - phi) * phi - 5.0 * (1.0 - phi) ** 2


def _scalarize(fun):
    def wrapped(x):
        out = fun(x)
        return float(out) if np.ndim(out) == 0 else out
    return wrapped


_OSC_VERDICTS = {
    "(f)": NOT_APPLICABLE, "(D0)": NOT_APPLICABLE, "(D1)": NOT_APPLICABLE,
    "(g0)": NOT_APPLICABLE, "(g01)": NOT_APPLICABLE, "(q)": HOLDS,
    "limsup q/phi finite": HOLDS,
}

CLOSED_FORMS = {
    # q oscillates like (1 - phi) * bounded-oscillating near 1: no derivative there
    "oscillatory_7_2": _ClosedForm(
        h=_scalarize(_osc1_h), q=_scalarize(_osc1_q), dq0=0.0, dq1=None,
        h0=0.0, h1=0.0, q_lowest_order=3,
        verdicts=dict(_OSC_VERDICTS, **{"int q/s^2 finite": HOLDS}),
        notes=("q'(1) does not exist: q/(1-phi) oscillates as phi -> 1",),
    ),
    # q/phi oscillates between two positive values as phi -> 0
    "oscillatory_8_3": _ClosedForm(
        h=_scalarize(_osc2_h), q=_scalarize(_osc2_q), dq0=None, dq1=0.0,
        h0=-5.0, h1=0.0, q_lowest_order=1,
        verdicts=dict(_OSC_VERDICTS, **{"int q/s^2 finite": FAILS}),
        notes=("q'(0) does not exist: liminf q/phi < limsup q/phi at 0",),
    ),
}


def _poly(coef):
    if coef is None:
        return None
    coef = [float(a) for a in coef]
    if len(coef) == 0:
        raise ModelError("empty coefficient vector")
    return Polynomial(coef)


class Model:
    """Validated, immutable model handle.

    Attributes
    ----------
    f, D, g : callable or None
        Model functions; ``None`` when only (h, q) are known.
    h, q : callable
        ``f'`` and ``D * g``; accept scalars or arrays.
    dq0, dq1 : float or None
        One-sided derivatives of ``q`` at 0 and 1, ``None`` when they do not
        exist.
    h_coef, q_coef : tuple of float or None
        Polynomial coefficients handed to the compiled kernel.
    """

    def __init__(self, spec: ModelSpec):
        self.spec = spec
        self.name = spec.name
        self.special = spec.special
        if spec.special is not None:
            if spec.special not in CLOSED_FORMS:
                raise ModelError(f"unknown closed-form tag {spec.special!r}")
            cf = CLOSED_FORMS[spec.special]
            self._cf = cf
            self.f_p = self.D_p = self.g_p = self.h_p = self.q_p = self.dq_p = None
            self.f = self.D = self.g = None
            self.h = cf.h
            self.q = cf.q
            self.dq0, self.dq1 = cf.dq0, cf.dq1
            self.h0, self.h1 = cf.h0, cf.h1
            self.h_coef = self.q_coef = None
            self.q_lowest_order = cf.q_lowest_order
            return
        self._cf = None
        if spec.f_poly is None and spec.D_poly is None and spec.g_poly is None:
            raise ModelError("empty model spec")
        if spec.f_poly is None or spec.D_poly is None or spec.g_poly is None:
            raise ModelError("a polynomial model needs f, D and g")
        self.f_p = _poly(spec.f_poly)
        self.D_p = _poly(spec.D_poly)
        self.g_p = _poly(spec.g_poly)
        self.h_p = self.f_p.deriv()
        self.q_p = (self.D_p * self.g_p).trim(tol=0.0)
        self.dq_p = self.q_p.deriv()
        self.dD_p = self.D_p.deriv()
        self.f = _scalarize(self.f_p)
        self.D = _scalarize(self.D_p)
        self.g = _scalarize(self.g_p)
        self.h = _scalarize(self.h_p)
        self.q = _scalarize(self.q_p)
        self.dq = _scalarize(self.dq_p)
        self.dD = _scalarize(self.dD_p)
        self.dq0 = float(self.dq_p(0.0))
        self.dq1 = float(self.dq_p(1.0))
        self.h0 = float(self.h_p(0.0))
        self.h1 = float(self.h_p(1.0))
        self.h_coef = tuple(float(a) for a in self.h_p.coef)
        self.q_coef = tuple(float(a) for a in self.q_p.coef)
        self.q_lowest_order = _lowest_order(self.q_p.coef)

    @property
    def is_polynomial(self):
        return self._cf is None

    @property
    def has_flux(self):
        return self.f is not None

    @property
    def has_factors(self):
        return self.D is not None

    def __repr__(self):
        return f"Model({self.name or 'custom'})"


def _lowest_order(coef, tol=1e-14):
    scale = max(1.0, float(np.max(np.abs(coef))))
    for k, a in enumerate(coef):
        if abs(a) > tol * scale:
            return k
    return None


def build_model(spec):
    """Return a validated :class:`Model` for a spec, a preset name or a mapping.

    Raises
    ------
    ModelError
        For empty specs and unknown preset tags.
    """
    if isinstance(spec, Model):
        return spec
    if isinstance(spec, str):
        from .presets import get_preset
        return Model(get_preset(spec).spec)
    if isinstance(spec, dict):
        spec = spec_from_config(spec)
    if not isinstance(spec, ModelSpec):
        raise ModelError(f"cannot build a model from {type(spec).__name__}")
    return Model(spec)


def spec_from_config(cfg):
    """Translate a parsed model-config mapping into a :class:`ModelSpec`.

    Accepted shapes are ``{"preset": name}`` and
    ``{"f": {...}, "D": {...}, "g": {...}}`` where each entry is either
    ``{"poly": [c0, c1, ...]}`` or ``{"preset": name}`` (borrow that
    function from a polynomial preset).
    """
    from .presets import get_preset
    if "preset" in cfg:
        return get_preset(cfg["preset"]).spec
    parts = {}
    for key in ("f", "D", "g"):
        if key not in cfg:
            raise ModelError(f"model config lacks {key!r}")
        entry = cfg[key]
        if "poly" in entry:
            coef = entry["poly"]
            if not isinstance(coef, list) or not coef:
                raise ModelError(f"{key}.poly must be a nonempty list")
            parts[key] = tuple(float(a) for a in coef)
        elif "preset" in entry:
            src = get_preset(entry["preset"]).spec
            coef = getattr(src, f"{key}_poly")
            if coef is None:
                raise ModelError(f"preset {entry['preset']!r} has no polynomial {key}")
            parts[key] = coef
        else:
            raise ModelError(f"{key} entry needs 'poly' or 'preset'")
    return ModelSpec(f_poly=parts["f"], D_poly=parts["D"], g_poly=parts["g"],
                     name=cfg.get("name"))


def load_model(path):
    """Read a JSON model config file and build the model."""
    with open(path) as fh:
        try:
            cfg = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ModelError(f"{path}: {exc}") from exc
    spec = spec_from_config(cfg)
    if spec.name is None and "preset" not in cfg:
        spec = ModelSpec(spec.f_poly, spec.D_poly, spec.g_poly, None, str(path))
    return Model(spec)


# ---------------------------------------------------------------- extrema

def _golden_max(fun, a, b, iters=80):
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    f1, f2 = fun(x1), fun(x2)
    for _ in range(iters):
        if f1 < f2:
            a, x1, f1 = x1, x2, f2
            x2 = a + _GOLDEN * (b - a)
            f2 = fun(x2)
        else:
            b, x2, f2 = x2, x1, f1
            x1 = b - _GOLDEN * (b - a)
            f1 = fun(x1)
        if b - a < 1e-15:
            break
    return max(f1, f2)


def sup_on_unit(fun, limit_at_zero):
    """Supremum of ``fun`` over (0, 1].

    A 1e-3 grid scan seeds a golden-section refinement around the best grid
    node; the right limit at 0 is supplied by the caller.
    """
    x = _GRID[1:]
    vals = np.asarray(fun(x), dtype=float)
    k = int(np.argmax(vals))
    best = float(vals[k])
    lo = x[k - 1] if k > 0 else 1e-12
    hi = x[k + 1] if k + 1 < len(x) else 1.0
    refined = _golden_max(lambda t: float(fun(t)), lo, hi)
    best = max(best, refined, float(fun(1.0)))
    if limit_at_zero is not None:
        best = max(best, float(limit_at_zero))
    return best


def sup_ratio(fun, dfun0):
    """sup over (0, 1] of fun(phi)/phi for a function vanishing at 0."""
    return sup_on_unit(lambda t: fun(t) / t, dfun0)


def max_on_closed(fun):
    """Maximum of a continuous function on [0, 1] (grid plus refinement)."""
    vals = np.asarray(fun(_GRID), dtype=float)
    k = int(np.argmax(vals))
    lo = _GRID[max(k - 1, 0)]
    hi = _GRID[min(k + 1, len(_GRID) - 1)]
    return max(float(vals[k]), _golden_max(lambda t: float(fun(t)), lo, hi))


# ------------------------------------------------------------ assumptions

@dataclass
class AssumptionReport:
    """Verdicts on the standing assumptions of a model.

    ``verdicts`` maps an assumption label to ``holds``, ``fails`` or
    ``not-applicable``.  The scenario tag follows the zero pattern of ``g``;
    ``scenario_consistent`` tells whether the diffusivity assumption paired
    with that pattern also holds.
    """

    model: str
    verdicts: dict
    dq0: Optional[float]
    dq0_exists: bool
    dq1: Optional[float]
    dq1_exists: bool
    scenario: str
    scenario_consistent: bool
    notes: list = field(default_factory=list)

    @property
    def ok(self):
        return self.scenario in (SEMI_WAVEFRONT, WAVEFRONT) and self.scenario_consistent

    @property
    def integrable_q_over_s2(self):
        return self.verdicts.get("int q/s^2 finite") == HOLDS

    def to_dict(self):
        return {
            "model": self.model,
            "verdicts": dict(self.verdicts),
            "dq0": self.dq0, "dq0_exists": self.dq0_exists,
            "dq1": self.dq1, "dq1_exists": self.dq1_exists,
            "scenario": self.scenario,
            "scenario_consistent": self.scenario_consistent,
            "notes": list(self.notes),
        }


def _scale(p):
    return max(1.0, float(np.max(np.abs(p.coef))))


def _is_zero_at(p, x):
    return abs(float(p(x))) <= 1e-12 * _scale(p)


def _positive_open(p):
    """p > 0 on (0, 1): grid scan plus real roots strictly inside."""
    vals = p(_GRID[1:-1])
    if np.min(vals) <= 0.0:
        return False
    # negligible leading coefficients make the companion matrix overflow
    p = p.trim(tol=1e-14 * _scale(p))
    if p.degree() >= 1:
        for r in p.roots():
            if abs(r.imag) < 1e-9 and 1e-9 < r.real < 1.0 - 1e-9:
                return False
    return True


def validate_assumptions(model):
    """Check the standing assumptions and return an :class:`AssumptionReport`.

    Polynomial verdicts are decided from exact endpoint values, the lowest
    nonzero coefficients and the real roots inside (0, 1).  Closed-form
    presets carry fixed verdicts.
    """
    name = model.name or "custom"
    if not model.is_polynomial:
        cf = model._cf
        return AssumptionReport(
            model=name, verdicts=dict(cf.verdicts),
            dq0=cf.dq0, dq0_exists=cf.dq0 is not None,
            dq1=cf.dq1, dq1_exists=cf.dq1 is not None,
            scenario=Q_ONLY, scenario_consistent=False, notes=list(cf.notes))

    f, D, g, q = model.f_p, model.D_p, model.g_p, model.q_p
    notes = []
    v = {}
    v["(f)"] = HOLDS if _is_zero_at(f, 0.0) else FAILS
    D_pos = _positive_open(D)
    v["(D0)"] = HOLDS if (D_pos and _is_zero_at(D, 0.0)) else FAILS
    v["(D1)"] = HOLDS if (D_pos and _is_zero_at(D, 1.0)) else FAILS
    g_pos = _positive_open(g)
    g0 = _is_zero_at(g, 0.0)
    g1 = float(g(1.0))
    v["(g0)"] = HOLDS if (g_pos and g0 and g1 > 1e-12 * _scale(g)) else FAILS
    v["(g01)"] = HOLDS if (g_pos and g0 and _is_zero_at(g, 1.0)) else FAILS
    q_pos = _positive_open(q)
    v["(q)"] = HOLDS if (q_pos and _is_zero_at(q, 0.0) and _is_zero_at(q, 1.0)) else FAILS
    low = model.q_lowest_order
    v["limsup q/phi finite"] = HOLDS if (low is not None and low >= 1) else FAILS
    v["int q/s^2 finite"] = HOLDS if (low is not None and low >= 2) else FAILS

    if v["(f)"] == FAILS:
        notes.append("f(0) must vanish")
    if v["(q)"] == FAILS:
        notes.append("q = D*g must vanish at 0 and 1 and be positive in between")
    if v["(g0)"] == HOLDS:
        scenario = SEMI_WAVEFRONT
        consistent = v["(D1)"] == HOLDS
        if not consistent:
            notes.append("g(1) > 0 selects the semi-wavefront setting, which needs D(1) = 0 "
                         "with D > 0 inside")
    elif v["(g01)"] == HOLDS:
        scenario = WAVEFRONT
        consistent = v["(D0)"] == HOLDS
        if not consistent:
            notes.append("g(0) = g(1) = 0 selects the wavefront setting, which needs D(0) = 0 "
                         "with D > 0 inside")
    else:
        scenario = Q_ONLY
        consistent = False
    consistent = consistent and v["(f)"] == HOLDS and v["(q)"] == HOLDS \
        and v["limsup q/phi finite"] == HOLDS
    if scenario != Q_ONLY and not consistent and v["(q)"] == HOLDS:
        notes.append("results stated for the reduced equation in q still apply")

    return AssumptionReport(
        model=name, verdicts=v, dq0=model.dq0, dq0_exists=True,
        dq1=model.dq1, dq1_exists=True, scenario=scenario,
        scenario_consistent=consistent, notes=notes)


def liminf_q_over_phi(model):
    """liminf of q/phi at 0+, or None when only the closed form is known."""
    if model.dq0 is not None:
        return model.dq0
    if model.is_polynomial:
        return model.dq0
    # oscillating case: scan a log-spaced window toward 0
    phi = np.logspace(-12, -4, 4001)
    return float(np.min(model.q(phi) / phi))
