"""Critical speed, speed bounds and the boundary-value thresholds beta, beta_hat.

All thresholds are located by bisection on a monotone indicator built from
backward shots:

* speed ``c`` is supercritical iff the shot from ``z(1) = 0`` still vanishes
  at 0;
* boundary value ``b`` is admissible at speed ``c`` iff the shot from
  ``z(1) = b`` vanishes at 0;
* ``b`` lies above ``beta_hat`` iff that shot leaves 0 along the shallower of
  the two candidate slopes.

"Vanishes at 0" is decided by the rule: a shot fails iff
``z(eps0) < (s_minus - delta) * eps0`` with ``delta = 1 + |s_minus|``, and a
shot that runs into the zero guard before ``eps0`` counts as vanishing.
"""

import math
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np
from scipy import integrate

from .errors import BracketError, ConvergenceError, RefusalError
from .model import _golden_max, liminf_q_over_phi, max_on_closed, sup_ratio, validate_assumptions
from .singular_ode import (DEFAULT_CONFIG, HIT_ZERO, REACHED, ShootingResult,
                           integrate_backward_from_one, s_pm)

C_TOL = 1e-6
MAX_BISECTION = 80

CLASS_MINUS = "s_minus"
CLASS_PLUS = "s_plus"
CLASS_FAILED = "failed"

BASIS_CSTAR = "fronts exist exactly for c >= c*; the shot from z(1) = 0 vanishes at 0 iff c >= c*"
BASIS_BOUNDS = ("c* lies between max(sup f/phi, h(0) + 2 sqrt(liminf q/phi)) and "
                "sup f/phi + 2 sqrt(sup q/phi)")
BASIS_BETA = "z(1) = b is attainable with z(0) = 0 iff b >= beta(c), and beta(c) >= f(1) - c"
BASIS_BETA_HAT = ("solutions leave 0 with slope s_plus iff z(1) > beta_hat and with slope "
                  "s_minus for z(1) in [beta, beta_hat]")
BASIS_BETA_AT_CSTAR = "at c = c*, integrable q/phi^2 with c* > h(0) forces beta = 0"


@dataclass
class SpeedBounds:
    """Analytic sandwich for the critical speed.

    ``None`` marks a quantity that cannot be computed for the model (for
    instance every flux-dependent term when only (h, q) are known).
    """

    sup_f_over_phi: Optional[float]
    sup_q_over_phi: float
    liminf_q_over_phi: float
    lower_conv: Optional[float]
    lower_reac: float
    lower: float
    upper_pointwise: Optional[float]
    upper_integral: Optional[float]
    upper_for_bracket: float
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)


def _upper_integral_core(model):
    """sup over (0, 1] of (1/phi) * int_0^phi q(s)/s ds (requires q'(0) = 0)."""
    def qs(s):
        return model.q(s) / s if s > 0.0 else 0.0

    grid = np.linspace(0.0, 1.0, 1001)
    cum = np.zeros_like(grid)
    for i in range(1, len(grid)):
        val, _ = integrate.quad(qs, grid[i - 1], grid[i], epsabs=1e-15, epsrel=1e-13)
        cum[i] = cum[i - 1] + val
    avg = cum[1:] / grid[1:]
    k = int(np.argmax(avg)) + 1

    def running_mean(x):
        val, _ = integrate.quad(qs, 0.0, x, epsabs=1e-15, epsrel=1e-13, limit=200)
        return val / x

    lo = grid[max(k - 1, 1)] if k > 1 else 1e-9
    hi = grid[min(k + 1, len(grid) - 1)]
    refined = _golden_max(running_mean, lo, hi)
    # the running mean tends to q'(0) = 0 at 0+
    return max(float(avg[k - 1]), refined, 0.0)


def analytic_bounds(model):
    """Compute the analytic lower and upper bounds on the critical speed.

    Returns
    -------
    SpeedBounds
    """
    notes = []
    if model.dq0 is not None:
        sup_q = sup_ratio(model.q, model.dq0)
    else:
        # q/phi oscillates at 0; fold in its limsup from a log-spaced scan
        phi = np.logspace(-12, -3, 4001)
        sup_q = max(sup_ratio(model.q, None), float(np.max(model.q(phi) / phi)))
    lim_q = liminf_q_over_phi(model)
    lower_reac = model.h0 + 2.0 * math.sqrt(max(lim_q, 0.0))
    if model.has_flux:
        sup_f = sup_ratio(model.f, model.h0)
        lower_conv = sup_f
        upper_pw = 2.0 * math.sqrt(max(sup_q, 0.0)) + sup_f
        lower = max(lower_conv, lower_reac)
        upper_bracket = upper_pw
    else:
        sup_f = None
        lower_conv = None
        upper_pw = None
        lower = lower_reac
        # f/phi is the running mean of h, so max h dominates it
        upper_bracket = 2.0 * math.sqrt(max(sup_q, 0.0)) + max_on_closed(model.h)
        notes.append("flux not available: convective bounds omitted, bracket uses max h")
    upper_int = None
    if model.dq0 is not None and model.dq0 == 0.0 and model.has_flux:
        upper_int = sup_f + 2.0 * math.sqrt(_upper_integral_core(model))
    elif model.dq0 != 0.0:
        notes.append("integral upper bound needs q'(0) = 0")
    if model.dq0 is not None and model.dq0 > 0.0 and model.has_flux and sup_f is not None \
            and lower_reac > sup_f:
        notes.append("q'(0) > 0: the convective bound sup f/phi is not sharp")
    return SpeedBounds(sup_f_over_phi=sup_f, sup_q_over_phi=sup_q, liminf_q_over_phi=lim_q,
                       lower_conv=lower_conv, lower_reac=lower_reac, lower=lower,
                       upper_pointwise=upper_pw, upper_integral=upper_int,
                       upper_for_bracket=upper_bracket, notes=notes)


# -------------------------------------------------------------- indicators

def failure_threshold(model, c):
    """Slope below which z(eps0)/eps0 signals a shot that misses z(0) = 0."""
    sm, _ = s_pm(model, c)
    return sm - (1.0 + abs(sm))


def shot_vanishes_at_zero(model, c, res):
    """Apply the zero test to a finished backward shot."""
    if res.terminal.kind == HIT_ZERO:
        return True
    if res.terminal.kind != REACHED:
        raise ConvergenceError(f"shot at c={c:.17g} ended with {res.terminal}")
    return res.z_vals[0] >= failure_threshold(model, c) * res.phi_grid[0]


def classify_slope_at_zero(model, c, res):
    """Slope class at 0 of a backward shot: s_minus, s_plus or failed."""
    if not shot_vanishes_at_zero(model, c, res):
        return CLASS_FAILED
    if res.terminal.kind == HIT_ZERO:
        return CLASS_PLUS
    sm, sp = s_pm(model, c)
    u = res.z_vals[0] / res.phi_grid[0]
    return CLASS_MINUS if abs(u - sm) < abs(u - sp) else CLASS_PLUS


@dataclass
class SpeedVerdict:
    c: float
    supercritical: bool
    reason: str
    shot: Optional[ShootingResult] = None


def speed_indicator(model, c, cfg=DEFAULT_CONFIG, bounds=None):
    """Decide whether ``c >= c*``.

    Speeds below the analytic lower bound are subcritical without a shot.
    """
    if bounds is None:
        bounds = analytic_bounds(model)
    if c < bounds.lower:
        return SpeedVerdict(c, False, "below analytic lower bound")
    res = integrate_backward_from_one(model, c, 0.0, cfg)
    ok = shot_vanishes_at_zero(model, c, res)
    return SpeedVerdict(c, ok, "zero test on backward shot", res)


@dataclass
class CriticalSpeedResult:
    """Critical speed with its final bracket, the bounds and a witness shot."""

    c_star: float
    bracket: tuple
    bounds: SpeedBounds
    witness: ShootingResult
    iterations: int
    basis: str = BASIS_CSTAR

    def to_dict(self):
        return {
            "c_star": self.c_star,
            "bracket": list(self.bracket),
            "bounds": self.bounds.to_dict(),
            "iterations": self.iterations,
            "witness": self.witness.to_dict(),
            "basis": self.basis,
            "bounds_basis": BASIS_BOUNDS,
        }


def critical_speed(model, cfg=DEFAULT_CONFIG, c_tol=C_TOL, max_iter=MAX_BISECTION):
    """Locate c* by bisection on the speed indicator.

    Raises
    ------
    RefusalError
        If q'(0) does not exist (the zero test needs the slopes at 0).
    BracketError
        If the indicator does not switch across the initial bracket.
    """
    if model.dq0 is None:
        raise RefusalError(
            f"{model.name or 'model'}: q'(0) does not exist, the critical-speed test "
            "needs the candidate slopes at 0")
    bounds = analytic_bounds(model)
    hi_b = bounds.upper_for_bracket
    margin = 1e-2 * (1.0 + max(abs(bounds.lower), abs(hi_b)))
    lo, hi = bounds.lower - margin, hi_b + margin
    v_lo = speed_indicator(model, lo, cfg, bounds)
    v_hi = speed_indicator(model, hi, cfg, bounds)
    if v_lo.supercritical or not v_hi.supercritical:
        raise BracketError(
            f"indicator not monotone on [{lo:.6g}, {hi:.6g}]: "
            f"{v_lo.supercritical} at lower end, {v_hi.supercritical} at upper end")
    witness = v_hi.shot
    it = 0
    while hi - lo > c_tol and it < max_iter:
        mid = 0.5 * (lo + hi)
        v = speed_indicator(model, mid, cfg, bounds)
        if v.supercritical:
            hi, witness = mid, v.shot
        else:
            lo = mid
        it += 1
    if hi - lo > c_tol:
        raise ConvergenceError(f"critical-speed bisection did not reach width {c_tol}")
    if witness is None:
        witness = integrate_backward_from_one(model, hi, 0.0, cfg)
    c_star = 0.5 * (lo + hi)
    if lo < bounds.lower <= hi:
        # c* never lies below the proven lower bound; keep it inside the bracket
        c_star = max(c_star, bounds.lower)
    return CriticalSpeedResult(c_star=c_star, bracket=(lo, hi), bounds=bounds,
                               witness=witness, iterations=it)


# ---------------------------------------------------------------- beta

@dataclass
class BetaResult:
    """Boundary-value thresholds at one speed.

    ``samples`` lists (b, slope class at 0) for every shot taken.
    """

    c: float
    beta: Optional[float]
    beta_hat: Optional[float]
    floor: Optional[float]
    c_star: float
    b_tol: float
    samples: list = field(default_factory=list)
    beta_bracket: Optional[tuple] = None
    beta_hat_bracket: Optional[tuple] = None
    degenerate: bool = False
    integrable_case: bool = False
    notes: list = field(default_factory=list)
    basis: str = BASIS_BETA

    def to_dict(self):
        return {
            "c": self.c, "beta": self.beta, "beta_hat": self.beta_hat, "floor": self.floor,
            "c_star": self.c_star, "b_tol": self.b_tol,
            "beta_bracket": list(self.beta_bracket) if self.beta_bracket else None,
            "beta_hat_bracket": list(self.beta_hat_bracket) if self.beta_hat_bracket else None,
            "degenerate": self.degenerate, "integrable_case": self.integrable_case,
            "samples": [[b, k] for b, k in self.samples], "notes": list(self.notes),
            "basis": self.basis, "beta_hat_basis": BASIS_BETA_HAT,
        }


def _floor(model, c):
    return float(model.f(1.0)) - c if model.has_flux else None


def _b_tol(model, c):
    fl = _floor(model, c)
    return 1e-6 * (1.0 + abs(fl if fl is not None else 0.0))


def integrable_case(model, c_star, tol=1e-3):
    """Both parts of the integrability condition: int q/s^2 finite and c* > h(0)."""
    rep = validate_assumptions(model)
    return rep.integrable_q_over_s2 and c_star > model.h0 + tol


def _check_speed(model, c, cfg, c_star, c_tol):
    if model.dq0 is None:
        raise RefusalError(f"{model.name or 'model'}: q'(0) does not exist")
    if c_star is None:
        c_star = critical_speed(model, cfg, c_tol).c_star
    if c < c_star - c_tol:
        raise RefusalError(f"c = {c:g} is below c* = {c_star:.9g}: no solutions exist")
    return c_star


def _bisect(pred, lo, hi, tol, samples, label):
    """Shrink [lo, hi] with pred(lo) False and pred(hi) True to width tol."""
    it = 0
    while hi - lo > tol and it < MAX_BISECTION:
        mid = 0.5 * (lo + hi)
        ok, cls = pred(mid)
        samples.append((mid, cls))
        if ok:
            hi = mid
        else:
            lo = mid
        it += 1
    if hi - lo > tol:
        raise ConvergenceError(f"{label} bisection did not converge")
    return lo, hi


def _b_floor_search(model, c, cfg, classify, samples):
    """Bracket start for models without a flux: step down until a shot fails."""
    b = -1.0
    for _ in range(60):
        cls = classify(b)
        samples.append((b, cls))
        if cls == CLASS_FAILED:
            return b
        b *= 2.0
    raise ConvergenceError("no failing boundary value found below 0")


def beta(model, c, cfg=DEFAULT_CONFIG, c_star=None, c_tol=C_TOL, with_hat=True,
         extra_samples=9):
    """Compute beta(c) and, by default, beta_hat(c).

    Parameters
    ----------
    model : Model
    c : float
        Speed; must not lie below c*.
    c_star : float, optional
        Precomputed critical speed.
    with_hat : bool
        Also locate beta_hat.
    extra_samples : int
        Number of evenly spaced boundary values between the floor and 0 that
        are classified in addition to the bisection points.

    Returns
    -------
    BetaResult
    """
    c_star = _check_speed(model, c, cfg, c_star, c_tol)
    fl = _floor(model, c)
    btol = _b_tol(model, c)
    integ = integrable_case(model, c_star)
    if abs(c - c_star) <= c_tol:
        res = BetaResult(c=c, beta=None, beta_hat=None, floor=fl, c_star=c_star, b_tol=btol,
                         integrable_case=integ)
        if integ:
            res.beta = 0.0
            res.beta_hat = 0.0
            res.basis = BASIS_BETA_AT_CSTAR
            res.notes.append("c = c*: beta = 0 by the integrable case")
        else:
            res.notes.append("c = c*: beta unknown without integrable q/phi^2 and c* > h(0)")
        return res

    def classify(b):
        shot = integrate_backward_from_one(model, c, b, cfg)
        return classify_slope_at_zero(model, c, shot)

    samples = []
    lo = fl if fl is not None else _b_floor_search(model, c, cfg, classify, samples)
    hi = -min(btol, 1e-9)
    cls_lo = classify(lo)
    cls_hi = classify(hi)
    samples += [(lo, cls_lo), (hi, cls_hi)]
    res = BetaResult(c=c, beta=None, beta_hat=None, floor=fl, c_star=c_star, b_tol=btol,
                     integrable_case=integ)
    if cls_hi == CLASS_FAILED:
        raise ConvergenceError(f"boundary value {hi:g} fails at c = {c:g} > c*")
    if cls_lo != CLASS_FAILED:
        res.notes.append("floor itself admissible within tolerance")
        res.beta = lo
        res.beta_bracket = (lo, lo)
    else:
        a, b = _bisect(lambda x: (lambda k: (k != CLASS_FAILED, k))(classify(x)), lo, hi, btol,
                       samples, "beta")
        res.beta = 0.5 * (a + b)
        res.beta_bracket = (a, b)
    if with_hat:
        sm, sp = s_pm(model, c)
        if sp - sm <= 1e-12 * max(1.0, abs(sm)):
            res.degenerate = True
            res.beta_hat = res.beta
            res.beta_hat_bracket = res.beta_bracket
            res.notes.append("s_minus = s_plus: slope classes coincide, beta_hat := beta")
        elif cls_lo == CLASS_PLUS:
            res.beta_hat = lo
            res.beta_hat_bracket = (lo, lo)
        elif cls_hi != CLASS_PLUS:
            res.beta_hat = hi
            res.beta_hat_bracket = (hi, hi)
            res.notes.append("no s_plus class found below 0")
        else:
            a0 = res.beta_bracket[0] if res.beta_bracket else lo
            a, b = _bisect(lambda x: (lambda k: (k == CLASS_PLUS, k))(classify(x)), a0, hi,
                           btol, samples, "beta_hat")
            res.beta_hat = 0.5 * (a + b)
            res.beta_hat_bracket = (a, b)
    if extra_samples and fl is not None:
        for b in np.linspace(fl, 0.0, extra_samples + 2)[1:-1]:
            samples.append((float(b), classify(float(b))))
    res.samples = sorted(samples)
    return res


def beta_hat(model, c, cfg=DEFAULT_CONFIG, c_star=None, c_tol=C_TOL):
    """Convenience wrapper returning the full :class:`BetaResult` with beta_hat set."""
    return beta(model, c, cfg, c_star=c_star, c_tol=c_tol, with_hat=True)
