"""Ground truth and cross-checks.

Three layers, none of which trusts the default solver on its own:

* analytic facts attached to the presets (exact solutions, speeds, profiles,
  slopes and nonexistence of endpoint derivatives), each self-checked
  against its defining relation before it is used;
* a reference bisection that reruns the threshold searches at tight
  tolerance with three boundary offsets and only reports a value when they
  agree;
* a property suite over a seeded random corpus of polynomial models that
  checks the comparison and ordering facts every solution must obey.
"""

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from .errors import ConvergenceError, FrontwaveError, RefusalError
from .model import HOLDS, Model, ModelSpec, build_model, max_on_closed, validate_assumptions
from .presets import get_preset, presets
from .profile import build_profile
from .singular_ode import (DEFAULT_CONFIG, IntegratorConfig, integrate_backward_from_one, r_plus,
                           s_pm)
from .thresholds import C_TOL, CriticalSpeedResult, analytic_bounds, beta, critical_speed

TOLERANCES = {"exact_z": 1e-6, "exact_c_star": 1e-3, "exact_profile": 1e-4,
              "exact_slope": 1e-4}
SELF_CHECK_TOL = 1e-12
Z_WINDOW = (1e-4, 1.0 - 1e-4)
PROFILE_WINDOW = (-5.0, 5.0)
REFERENCE_EPS0 = (1e-6, 1e-7, 1e-8)
REFERENCE_RTOL = 1e-13
REFERENCE_ATOL = 1e-14
CORPUS_SEED = 20240601
BASELINE_PATH = os.path.join(os.path.dirname(__file__), "data", "baseline.json")


# ---------------------------------------------------------- analytic facts

@dataclass
class AnalyticFact:
    """A closed-form statement about a preset.

    Attributes
    ----------
    preset : str
    kind : str
        ``exact_z``, ``exact_c_star``, ``exact_profile``, ``exact_slope`` or
        ``nonexistence``.
    evaluator : callable or float
        Closed form (function of phi or xi) or exact number.  For
        ``nonexistence`` a zero-argument callable that must refuse.
    basis : str
        Why the fact holds.
    params : dict
        Speed and boundary value the fact refers to, plus kind-specific keys.
    """

    preset: str
    kind: str
    evaluator: object
    basis: str
    params: dict = field(default_factory=dict)

    @property
    def label(self):
        extra = self.params.get("what")
        return f"{self.preset}:{self.kind}" + (f":{extra}" if extra else "")


@dataclass
class FactCheck:
    """Outcome of comparing a fact with a computed artifact."""

    label: str
    passed: bool
    deviation: Optional[float]
    tolerance: Optional[float]
    detail: str = ""

    def to_dict(self):
        return asdict(self)


def analytic_facts():
    """All facts carried by the preset registry."""
    facts = []
    for p in presets():
        if p.exact_z is not None:
            facts.append(AnalyticFact(p.name, "exact_z", p.exact_z,
                                      "closed-form solution of the reduced equation",
                                      {"c": p.exact_z_speed, "b": p.exact_z_right,
                                       "dz": p.exact_dz}))
        if p.exact_c_star is not None:
            facts.append(AnalyticFact(p.name, "exact_c_star", p.exact_c_star,
                                      p.c_star_basis or "", {}))
        if p.exact_profile is not None:
            facts.append(AnalyticFact(p.name, "exact_profile", p.exact_profile,
                                      "closed-form profile normalized at 1/2",
                                      {"c": p.exact_z_speed, "b": 0.0, "xi0": p.profile_xi0,
                                       "dphi": p.exact_profile_slope}))
            facts.append(AnalyticFact(p.name, "exact_slope", p.profile_slope_at_xi0,
                                      "derivative of the closed-form profile at its zero",
                                      {"c": p.exact_z_speed, "what": "profile_at_xi0"}))
        if p.exact_dz is not None and p.exact_z_right == 0.0 and "dq1" not in p.missing:
            facts.append(AnalyticFact(p.name, "exact_slope", float(p.exact_dz(1.0)),
                                      "derivative of the closed-form z at 1",
                                      {"c": p.exact_z_speed, "what": "z_at_one"}))
        if "dq1" in p.missing:
            m = build_model(p.spec)
            facts.append(AnalyticFact(p.name, "nonexistence",
                                      lambda m=m, c=p.exact_z_speed or 0.0: r_plus(m, c),
                                      "q has no derivative at 1, so neither does z",
                                      {"what": "r_plus"}))
        if "dq0" in p.missing:
            m = build_model(p.spec)
            facts.append(AnalyticFact(p.name, "nonexistence",
                                      lambda m=m, c=p.exact_z_speed or 0.0: s_pm(m, c),
                                      "q/phi oscillates at 0, so z has no slope there",
                                      {"what": "s_pm"}))
    return facts


def self_check(fact):
    """Residual of a fact's defining relation on 10^3 samples.

    Returns
    -------
    FactCheck
        ``deviation`` is the largest scaled residual.
    """
    p = get_preset(fact.preset)
    m = build_model(p.spec)
    if fact.kind == "exact_z":
        phi = np.linspace(1e-3, 1.0 - 1e-3, 1000)
        c = fact.params["c"]
        z = fact.evaluator(phi)
        rhs = m.h(phi) - c - m.q(phi) / z
        scale = 1.0 + np.abs(m.h(phi)) + np.abs(m.q(phi) / z)
        dev = float(np.max(np.abs(fact.params["dz"](phi) - rhs) / scale))
    elif fact.kind == "exact_profile":
        top = min(PROFILE_WINDOW[1], fact.params["xi0"])
        xi = np.linspace(PROFILE_WINDOW[0], top, 1001)[:-1]
        phi = fact.evaluator(xi)
        flux = m.D(phi) * fact.params["dphi"](xi)
        dev = float(np.max(np.abs(flux - p.exact_z(phi))))
    elif fact.kind == "exact_c_star" and fact.preset == "fisher":
        b = analytic_bounds(m)
        dev = max(abs(b.lower - fact.evaluator), abs(b.upper_pointwise - fact.evaluator))
    else:
        return FactCheck(fact.label + ":self", True, None, None, "no defining relation to check")
    return FactCheck(fact.label + ":self", dev < SELF_CHECK_TOL, dev, SELF_CHECK_TOL)


def _rel_dev(value, exact):
    if math.isinf(exact) or math.isinf(value):
        return 0.0 if value == exact else math.inf
    return abs(value - exact) / max(1.0, abs(exact))


def verify_fact(fact, artifact):
    """Compare a fact with a computed artifact.

    Parameters
    ----------
    fact : AnalyticFact
    artifact
        ``ShootingResult`` for ``exact_z``, ``CriticalSpeedResult`` or float
        for ``exact_c_star``, ``FrontProfile`` for ``exact_profile``, float
        for ``exact_slope`` and a zero-argument callable for
        ``nonexistence``.

    Returns
    -------
    FactCheck

    Raises
    ------
    ValueError
        If the artifact does not cover the fact's domain.
    """
    kind = fact.kind
    if kind == "nonexistence":
        try:
            artifact()
        except RefusalError as exc:
            return FactCheck(fact.label, True, None, None, f"refused: {exc}")
        return FactCheck(fact.label, False, None, None, "computed a value instead of refusing")
    tol = TOLERANCES[kind]
    if kind == "exact_z":
        lo = max(Z_WINDOW[0], artifact.phi_min)
        hi = min(Z_WINDOW[1], artifact.phi_max)
        if hi - lo < 0.5:
            raise ValueError(f"shot covers [{artifact.phi_min:g}, {artifact.phi_max:g}] only")
        phi = np.linspace(lo, hi, 4001)
        sel = artifact.phi_grid[(artifact.phi_grid >= lo) & (artifact.phi_grid <= hi)]
        phi = np.concatenate([phi, sel])
        dev = float(np.max(np.abs(artifact.z_at(phi) - fact.evaluator(phi))))
    elif kind == "exact_c_star":
        value = artifact.c_star if isinstance(artifact, CriticalSpeedResult) else float(artifact)
        dev = abs(value - fact.evaluator)
    elif kind == "exact_profile":
        top = min(PROFILE_WINDOW[1], fact.params["xi0"])
        xi = np.linspace(PROFILE_WINDOW[0], top, 4001)
        dev = float(np.max(np.abs(artifact.phi_at(xi) - fact.evaluator(xi))))
        if math.isfinite(fact.params["xi0"]):
            dev = max(dev, abs(artifact.xi0 - fact.params["xi0"]))
    elif kind == "exact_slope":
        dev = _rel_dev(float(artifact), float(fact.evaluator))
    else:
        raise ValueError(f"unknown fact kind {kind!r}")
    return FactCheck(fact.label, dev <= tol, dev, tol)


def compute_artifact(fact, cfg=DEFAULT_CONFIG):
    """Produce the solver output a fact is compared with, or None if none applies."""
    p = get_preset(fact.preset)
    m = build_model(p.spec)
    kind = fact.kind
    if kind == "nonexistence":
        return fact.evaluator
    if kind == "exact_c_star":
        return critical_speed(m, cfg)
    if kind == "exact_z":
        if fact.params["b"] == 0.0 and m.dq1 is None:
            return None
        return integrate_backward_from_one(m, fact.params["c"], fact.params["b"], cfg)
    shot = integrate_backward_from_one(m, fact.params["c"], 0.0, cfg)
    if kind == "exact_profile":
        return build_profile(m, shot, cfg, c_star=p.exact_c_star)
    if fact.params.get("what") == "profile_at_xi0":
        return build_profile(m, shot, cfg, c_star=p.exact_c_star).slope_at_xi0
    if fact.params.get("what") == "z_at_one":
        return shot.slope_at_one_estimate
    return None


def analytic_suite(cfg=DEFAULT_CONFIG):
    """Self-check every fact, then verify it against the solver.

    Returns
    -------
    list of FactCheck
    """
    out = []
    for fact in analytic_facts():
        out.append(self_check(fact))
        art = compute_artifact(fact, cfg)
        if art is None:
            out.append(FactCheck(fact.label, True, None, None,
                                 "no solver output applies; closed form self-checked only"))
            continue
        out.append(verify_fact(fact, art))
    return out


# ----------------------------------------------------- endpoint slopes

@dataclass
class SlopeCheck:
    """Estimated versus predicted endpoint slopes of the shot from z(1) = 0."""

    model: str
    c: float
    predicted_one: float
    estimated_one: float
    predicted_zero: float
    estimated_zero: float
    branch_zero: str
    tol: float = 1e-4

    @staticmethod
    def _ok(est, pred, tol):
        return abs(est - pred) <= tol * max(1.0, abs(pred))

    @property
    def ok_one(self):
        return self._ok(self.estimated_one, self.predicted_one, self.tol)

    @property
    def ok_zero(self):
        return self._ok(self.estimated_zero, self.predicted_zero, self.tol)

    def to_dict(self):
        d = asdict(self)
        d.update(ok_one=self.ok_one, ok_zero=self.ok_zero)
        return d


def endpoint_slopes(model, c, c_star, cfg=DEFAULT_CONFIG, beta_hat=None):
    """Compare the slopes of the shot from z(1) = 0 with the closed forms.

    The branch at 0 is ``s_plus`` above c* when ``0 > beta_hat`` and
    ``s_minus`` otherwise; at c* it is ``s_minus`` (both coincide when
    c* = h(0) and q'(0) = 0).
    """
    shot = integrate_backward_from_one(model, c, 0.0, cfg)
    sm, sp = s_pm(model, c)
    if c > c_star + C_TOL and (beta_hat is None or beta_hat < 0.0):
        branch, pred0 = "s_plus", sp
    else:
        branch, pred0 = "s_minus", sm
    return SlopeCheck(model=model.name or "custom", c=c, predicted_one=r_plus(model, c),
                      estimated_one=shot.slope_at_one_estimate, predicted_zero=pred0,
                      estimated_zero=shot.slope_at_zero_estimate, branch_zero=branch)


# ------------------------------------------------- reference bisection

@dataclass
class ReferenceValue:
    """Tight-tolerance value with its three-offset agreement record."""

    model: str
    quantity: str
    c: Optional[float]
    value: Optional[float]
    values: list
    eps0: list
    spread: float
    tolerance: float
    stable: bool
    cfg_digest: str
    provenance: str

    @property
    def verdict(self):
        return "stable" if self.stable else "unstable"

    def to_dict(self):
        d = asdict(self)
        d["verdict"] = self.verdict
        return d


def reference_config(eps0):
    return IntegratorConfig(rel_tol=REFERENCE_RTOL, abs_tol=REFERENCE_ATOL, eps0=eps0,
                            max_steps=2_000_000)


def reference_bisection(model, quantity, c=None, eps0s=REFERENCE_EPS0, c_tol=C_TOL):
    """Recompute a threshold at tight tolerance for three boundary offsets.

    Parameters
    ----------
    model : Model
    quantity : {"c_star", "beta", "beta_hat"}
    c : float, optional
        Speed, required for ``beta`` and ``beta_hat``.

    Returns
    -------
    ReferenceValue
        ``value`` is ``None`` and ``stable`` is False when the runs disagree
        by more than ten bisection tolerances.
    """
    if quantity not in ("c_star", "beta", "beta_hat"):
        raise ValueError(f"unknown quantity {quantity!r}")
    if quantity != "c_star" and c is None:
        raise ValueError(f"{quantity} needs a speed")
    values, digests = [], []
    tol = 10.0 * c_tol
    for e in eps0s:
        cfg = reference_config(e)
        digests.append(cfg.digest())
        cs = critical_speed(model, cfg, c_tol)
        if quantity == "c_star":
            values.append(cs.c_star)
            continue
        res = beta(model, c, cfg, c_star=cs.c_star, c_tol=c_tol, extra_samples=0,
                   with_hat=(quantity == "beta_hat"))
        tol = 10.0 * res.b_tol
        values.append(res.beta if quantity == "beta" else res.beta_hat)
    if any(v is None for v in values):
        spread, stable = math.inf, False
    else:
        spread = max(values) - min(values)
        stable = spread <= tol
    value = float(np.median(values)) if stable else None
    return ReferenceValue(model=model.name or "custom", quantity=quantity, c=c, value=value,
                          values=values, eps0=list(eps0s), spread=spread, tolerance=tol,
                          stable=stable, cfg_digest="/".join(digests),
                          provenance=f"reference bisection, rel_tol {REFERENCE_RTOL:g}, "
                                     f"abs_tol {REFERENCE_ATOL:g}, eps0 in {list(eps0s)}")


BASELINE_QUERIES = (
    ("remark_6_2", "c_star", None),
    ("counterexample_6_2b", "c_star", None),
    ("fisher", "c_star", None),
    ("remark_6_2", "beta", 1.0),
    ("remark_6_2", "beta", 2.0),
    ("remark_6_2", "beta_hat", 1.0),
    ("fisher", "beta_hat", 3.0),
)


def mint_baseline(path=BASELINE_PATH, queries=BASELINE_QUERIES):
    """Write the regression baseline from stable reference values only."""
    entries = []
    for name, qty, c in queries:
        ref = reference_bisection(build_model(name), qty, c)
        if not ref.stable:
            raise ConvergenceError(f"{name} {qty} at c={c}: reference runs disagree "
                                   f"(spread {ref.spread:.3g})")
        entries.append({"id": name, "quantity": qty, "c": c, "value": ref.value,
                        "tolerance": ref.tolerance, "cfg_hash": ref.cfg_digest,
                        "provenance": ref.provenance})
    os.makedirs(os.path.dirname(path), exist_ok=True)
    with open(path, "w") as fh:
        json.dump(entries, fh, indent=2)
        fh.write("\n")
    return entries


def load_baseline(path=BASELINE_PATH):
    with open(path) as fh:
        return json.load(fh)


def regression_suite(cfg=DEFAULT_CONFIG, path=BASELINE_PATH):
    """Recompute every baseline entry with the production solver.

    Returns
    -------
    list of FactCheck
    """
    out = []
    for e in load_baseline(path):
        m = build_model(e["id"])
        if e["quantity"] == "c_star":
            got = critical_speed(m, cfg).c_star
        else:
            res = beta(m, e["c"], cfg, extra_samples=0, with_hat=e["quantity"] == "beta_hat")
            got = res.beta if e["quantity"] == "beta" else res.beta_hat
        dev = abs(got - e["value"])
        label = f"{e['id']}:{e['quantity']}" + (f"@c={e['c']:g}" if e["c"] is not None else "")
        out.append(FactCheck(label, dev <= e["tolerance"], dev, e["tolerance"],
                             f"computed {got:.12g}, baseline {e['value']:.12g}"))
    return out


# ----------------------------------------------------- property corpus

def _rand_poly(rng, deg):
    """Polynomial with coefficients in [-2, 2] (positivity enforced by rejection)."""
    return list(rng.uniform(-2.0, 2.0, deg + 1))


def _mul(a, b):
    return list(np.polynomial.polynomial.polymul(a, b))


def random_corpus(n, seed=CORPUS_SEED):
    """Seeded random polynomial models that satisfy the positivity of q.

    Wavefront members take ``g = phi (1 - phi) R`` and ``D = P`` or
    ``phi P``; semi-wavefront members take ``g = phi R`` and ``D`` vanishing
    at 1.  ``f`` is a random cubic with ``f(0) = 0``.  All degrees stay at
    most 4 and members failing the positivity of q are rejected.

    Returns
    -------
    list of ModelSpec
    """
    rng = np.random.default_rng(seed)
    out = []
    tries = 0
    while len(out) < n:
        tries += 1
        if tries > 1000 * n:
            raise ConvergenceError("rejection sampling did not fill the corpus")
        f = [0.0] + list(rng.uniform(-2.0, 2.0, 3))
        if rng.random() < 0.5:
            g = _mul([0.0, 1.0, -1.0], _rand_poly(rng, int(rng.integers(0, 3))))
            P = _rand_poly(rng, int(rng.integers(0, 3)))
            D = _mul([0.0, 1.0], P) if rng.random() < 0.5 else P
        else:
            g = _mul([0.0, 1.0], _rand_poly(rng, int(rng.integers(0, 3))))
            P = _rand_poly(rng, int(rng.integers(0, 3)))
            D = _mul([1.0, -1.0], P)
            if rng.random() < 0.5:
                D = _mul([0.0, 1.0], D)
        spec = ModelSpec(f_poly=tuple(float(a) for a in f), D_poly=tuple(float(a) for a in D),
                         g_poly=tuple(float(a) for a in g), name=f"corpus-{len(out):03d}")
        rep = validate_assumptions(Model(spec))
        if rep.verdicts["(q)"] != HOLDS:
            continue
        out.append(spec)
    return out


PROPERTY_CHECKS = ("sandwich", "beta_floor", "order_b", "order_c", "lower_barrier",
                   "clamp", "beta_hat_agreement")


def _ordering_violation(lo_shot, hi_shot, tol_abs=1e-8, tol_rel=1e-7):
    """Largest amount by which lo_shot exceeds hi_shot on their common range."""
    a = max(lo_shot.phi_min, hi_shot.phi_min, 1e-3)
    b = min(lo_shot.phi_max, hi_shot.phi_max, 1.0 - 1e-3)
    if b <= a:
        return 0.0
    phi = np.linspace(a, b, 400)
    z1, z2 = lo_shot.z_at(phi), hi_shot.z_at(phi)
    excess = z1 - z2 - (tol_abs + tol_rel * np.maximum(np.abs(z1), np.abs(z2)))
    return float(max(np.max(excess), 0.0))


def _barrier_violation(model, c, shot, tol_abs=1e-8, tol_rel=1e-7):
    phi = shot.phi_grid
    floor = model.f(phi) - c * phi
    excess = floor - shot.z_vals - (tol_abs + tol_rel * np.abs(floor))
    return float(max(np.max(excess), 0.0))


def check_member(spec, cfg=DEFAULT_CONFIG):
    """Run every property check on one corpus member.

    Returns
    -------
    dict
        ``checks`` maps each check name to None (not applicable), True or
        False; ``details`` records the offending numbers.
    """
    m = Model(spec)
    checks = {k: None for k in PROPERTY_CHECKS}
    details = {}
    try:
        cs = critical_speed(m, cfg)
        c_star, bnd = cs.c_star, cs.bounds
        upper = bnd.upper_pointwise
        if bnd.upper_integral is not None:
            upper = min(upper, bnd.upper_integral)
        checks["sandwich"] = bnd.lower - 1e-3 <= c_star <= upper + 1e-3
        details["c_star"] = c_star
        details["bounds"] = [bnd.lower, bnd.upper_pointwise, bnd.upper_integral]

        c1 = c_star + 1.0
        br = beta(m, c1, cfg, c_star=c_star, extra_samples=0)
        details["beta"] = [br.beta, br.beta_hat, br.floor, br.b_tol]
        checks["beta_floor"] = (br.beta >= br.floor - br.b_tol
                                and br.beta <= br.beta_hat + br.b_tol
                                and br.beta_hat <= 0.0)
        if br.integrable_case:
            checks["beta_hat_agreement"] = abs(br.beta - br.beta_hat) <= 10.0 * br.b_tol

        bs = sorted({br.floor, br.beta + 0.5 * (0.0 - br.beta), br.beta + 0.25 * (0.0 - br.beta),
                     0.0})
        shots = [integrate_backward_from_one(m, c1, b, cfg) for b in bs]
        worst = max(_ordering_violation(s1, s2) for s1, s2 in zip(shots, shots[1:]))
        checks["order_b"] = worst == 0.0
        details["order_b_excess"] = worst

        speeds = [c_star - 0.5, c_star + 0.5, c1]
        zeta = [integrate_backward_from_one(m, c, 0.0, cfg) for c in speeds]
        worst_c = max(_ordering_violation(s1, s2) for s1, s2 in zip(zeta, zeta[1:]))
        checks["order_c"] = worst_c == 0.0
        details["order_c_excess"] = worst_c

        admissible = [(c1, s) for b, s in zip(bs, shots) if b >= br.beta_bracket[1]]
        admissible += [(speeds[1], zeta[1])]
        worst_bar = max(_barrier_violation(m, c, s) for c, s in admissible)
        checks["lower_barrier"] = worst_bar == 0.0
        details["barrier_excess"] = worst_bar

        c0 = speeds[0]
        sub = zeta[0]
        A = max(max_on_closed(m.h) - c0, 0.0) + max_on_closed(m.q)
        z0 = sub.zeta0 if sub.zeta0 is not None else float(sub.z_vals[0])
        checks["clamp"] = z0 >= -1.0 - A - 1e-9
        details["clamp"] = [z0, -1.0 - A]
        error = None
    except FrontwaveError as exc:
        error = f"{type(exc).__name__}: {exc}"
    return {"name": spec.name, "spec": [list(spec.f_poly), list(spec.D_poly), list(spec.g_poly)],
            "checks": checks, "details": details, "error": error}


def _check_member_tuple(args):
    spec, cfg = args
    return check_member(spec, cfg)


@dataclass
class PropertyReport:
    """Aggregated property-suite outcome."""

    seed: int
    members: list
    counts: dict
    violations: list
    errors: list
    runtime: float

    @property
    def ok(self):
        return not self.violations and not self.errors

    def to_dict(self):
        return {"seed": self.seed, "n_members": len(self.members), "counts": self.counts,
                "violations": self.violations, "errors": self.errors,
                "runtime_seconds": self.runtime, "ok": self.ok, "members": self.members}


def property_suite(n=50, seed=CORPUS_SEED, cfg=DEFAULT_CONFIG, jobs=1, specs=None):
    """Run the property checks over a random corpus.

    Parameters
    ----------
    n : int
        Corpus size.
    seed : int
    jobs : int
        Worker processes; 1 runs in-process.
    specs : list of ModelSpec, optional
        Explicit model set replacing the random corpus.

    Returns
    -------
    PropertyReport
    """
    t0 = time.perf_counter()
    specs = random_corpus(n, seed) if specs is None else list(specs)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            members = list(ex.map(_check_member_tuple, [(s, cfg) for s in specs]))
    else:
        members = [check_member(s, cfg) for s in specs]
    counts = {k: {"checked": 0, "violations": 0} for k in PROPERTY_CHECKS}
    violations, errors = [], []
    for mem in members:
        if mem["error"]:
            errors.append({"member": mem["name"], "error": mem["error"]})
        for k, v in mem["checks"].items():
            if v is None:
                continue
            counts[k]["checked"] += 1
            if not v:
                counts[k]["violations"] += 1
                violations.append({"member": mem["name"], "check": k,
                                   "details": mem["details"]})
    return PropertyReport(seed=seed, members=members, counts=counts, violations=violations,
                          errors=errors, runtime=time.perf_counter() - t0)
