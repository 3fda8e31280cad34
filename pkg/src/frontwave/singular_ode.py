"""Shooting for the singular equation dz/dphi = h(phi) - c - q(phi)/z.

Solutions of interest are negative on (0, 1).  Backward shots start at
phi = 1 (exactly at ``(1, b)`` for ``b < 0``, or a short distance inside
along the closed-form slope when ``b = 0``) and run toward 0; this is the
stable direction.  Forward shots start just right of 0 along one of the two
candidate slopes and run toward 1.

The kernel is compiled when the extension is available and the model is
polynomial; set ``FRONTWAVE_PURE=1`` to force the pure-Python kernel.
"""

import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, replace
from typing import Callable, Optional

import numpy as np

from . import _pykernel
from .errors import BelowAdmissibleRange, ConvergenceError, RefusalError

try:
    if os.environ.get("FRONTWAVE_PURE") == "1":
        raise ImportError("pure-Python kernel requested")
    from . import _kernel as _ckernel
except ImportError:  # pragma: no cover - exercised when the extension is absent
    _ckernel = None

BACKEND = "compiled" if _ckernel is not None else "python"

REACHED = "reached_target_end"
HIT_ZERO = "z_hit_zero_at"
UNDERFLOW = "step_underflow_at"
BUDGET = "step_budget_exhausted_at"
_STATUS = {_pykernel.REACHED: REACHED, _pykernel.HIT_ZERO: HIT_ZERO,
           _pykernel.UNDERFLOW: UNDERFLOW, _pykernel.BUDGET: BUDGET}

S_MINUS = "s_minus"
S_PLUS = "s_plus"


@dataclass(frozen=True)
class IntegratorConfig:
    """Tolerances and collars of a shot.

    Parameters
    ----------
    rel_tol, abs_tol : float
        Mixed per-step error tolerance.
    eps0 : float
        Width of the collars excised at the singular endpoints.
    min_step : float
        Steps below this size end the run.
    max_steps : int
        Step budget per shot.
    """

    rel_tol: float = 1e-10
    abs_tol: float = 1e-12
    eps0: float = 1e-6
    min_step: float = 1e-13
    max_steps: int = 200000

    def __post_init__(self):
        for name in ("rel_tol", "abs_tol", "eps0", "min_step"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"{name} must be positive")
        if self.max_steps <= 0:
            raise ValueError("max_steps must be positive")
        if not self.eps0 > self.min_step:
            raise ValueError("eps0 must exceed min_step")

    @property
    def zero_guard(self):
        """Level below which |z| counts as zero."""
        return 10.0 * self.abs_tol

    def with_(self, **changes):
        return replace(self, **changes)

    def digest(self):
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


DEFAULT_CONFIG = IntegratorConfig()


@dataclass
class Terminal:
    kind: str
    phi: Optional[float]

    def __str__(self):
        return self.kind if self.kind == REACHED else f"{self.kind}({self.phi:.17g})"


class HermiteCurve:
    """Piecewise cubic Hermite interpolant through (x, y, dy/dx) samples."""

    def __init__(self, x, y, dy):
        self.x = np.asarray(x, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.dy = np.asarray(dy, dtype=float)

    def _locate(self, t):
        k = np.searchsorted(self.x, t, side="right") - 1
        return np.clip(k, 0, len(self.x) - 2)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        k = self._locate(t)
        x0, x1 = self.x[k], self.x[k + 1]
        hk = x1 - x0
        s = (t - x0) / hk
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (h00 * self.y[k] + h10 * hk * self.dy[k]
                + h01 * self.y[k + 1] + h11 * hk * self.dy[k + 1])

    def derivative(self, t):
        t = np.asarray(t, dtype=float)
        k = self._locate(t)
        x0, x1 = self.x[k], self.x[k + 1]
        hk = x1 - x0
        s = (t - x0) / hk
        d00 = 6 * s * (s - 1) / hk
        d10 = (1 - s) * (1 - 3 * s)
        d01 = -d00
        d11 = s * (3 * s - 2)
        return (d00 * self.y[k] + d10 * self.dy[k]
                + d01 * self.y[k + 1] + d11 * self.dy[k + 1])


@dataclass
class ShootingResult:
    """Sampled solution of one shot.

    ``phi_grid`` is strictly increasing whatever the integration direction;
    ``dz_vals`` holds the right-hand side at each sample.
    """

    c: float
    direction: str
    phi_grid: np.ndarray
    z_vals: np.ndarray
    dz_vals: np.ndarray
    terminal: Terminal
    z_right: float
    start_phi: float
    start_z: float
    start_shift: float
    eps0: float
    branch: Optional[str] = None
    boundary_value: Optional[float] = None
    slope_at_zero_estimate: Optional[float] = None
    slope_at_one_estimate: Optional[float] = None
    zeta0: Optional[float] = None
    backend: str = BACKEND
    _curve: Optional[HermiteCurve] = None

    @property
    def curve(self):
        if self._curve is None:
            self._curve = HermiteCurve(self.phi_grid, self.z_vals, self.dz_vals)
        return self._curve

    def z_at(self, phi):
        """Hermite interpolation of the samples (no extrapolation)."""
        phi = np.asarray(phi, dtype=float)
        if np.any(phi < self.phi_grid[0] - 1e-15) or np.any(phi > self.phi_grid[-1] + 1e-15):
            raise ValueError("requested phi outside the sampled range")
        return self.curve(phi)

    @property
    def phi_min(self):
        return float(self.phi_grid[0])

    @property
    def phi_max(self):
        return float(self.phi_grid[-1])

    @property
    def succeeded(self):
        return self.terminal.kind in (REACHED, HIT_ZERO)

    def to_dict(self):
        return {
            "c": self.c,
            "direction": self.direction,
            "branch": self.branch,
            "boundary_value": self.boundary_value,
            "terminal": self.terminal.kind,
            "terminal_phi": self.terminal.phi,
            "z_right": self.z_right,
            "zeta0_extrapolated": self.zeta0,
            "start_phi": self.start_phi,
            "start_z": self.start_z,
            "start_shift": self.start_shift,
            "eps0": self.eps0,
            "slope_at_zero_estimate": self.slope_at_zero_estimate,
            "slope_at_one_estimate": self.slope_at_one_estimate,
            "samples": int(len(self.phi_grid)),
            "backend": self.backend,
        }

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("phi,z\n")
            for p, z in zip(self.phi_grid, self.z_vals):
                fh.write(f"{p:.17g},{z:.17g}\n")


# ---------------------------------------------------------------- slopes

def r_plus(model, c):
    """Slope at phi = 1 of the solution vanishing there.

    Raises
    ------
    RefusalError
        If q has no derivative at 1.
    """
    if model.dq1 is None:
        raise RefusalError(
            f"{model.name or 'model'}: q'(1) does not exist, so the slope at 1 of a "
            "solution with z(1) = 0 need not exist either")
    dq1 = model.dq1
    H = model.h1 - c
    if dq1 > 0.0:
        raise RefusalError("q'(1) > 0 is incompatible with q > 0 left of 1")
    if dq1 == 0.0:
        return max(0.0, H)
    return 0.5 * (H + math.sqrt(H * H - 4.0 * dq1))


def s_pm(model, c):
    """Candidate slopes (s_minus, s_plus) at phi = 0.

    Raises
    ------
    RefusalError
        If q has no derivative at 0.
    BelowAdmissibleRange
        If the discriminant is negative (speed below h(0) + 2 sqrt(q'(0))).
    """
    if model.dq0 is None:
        raise RefusalError(
            f"{model.name or 'model'}: q'(0) does not exist (q/phi oscillates at 0), so the "
            "slope at 0 is undefined")
    H = model.h0 - c
    disc = H * H - 4.0 * model.dq0
    if disc < 0.0:
        if disc > -1e-13 * max(1.0, H * H):
            disc = 0.0
        else:
            raise BelowAdmissibleRange(
                f"c = {c:g} lies below h(0) + 2 sqrt(q'(0)) = "
                f"{model.h0 + 2.0 * math.sqrt(model.dq0):.12g}; candidate slopes are complex")
    r = math.sqrt(disc)
    return 0.5 * (H - r), 0.5 * (H + r)


# ----------------------------------------------------------------- kernel

def _run(model, c, x0, y0, x_end, cfg):
    kw = dict(rtol=cfg.rel_tol, atol=cfg.abs_tol, min_step=cfg.min_step,
              max_steps=cfg.max_steps, zero_guard=cfg.zero_guard)
    if model.is_polynomial and _ckernel is not None:
        xs, ys, fs, st, xstop = _ckernel.integrate(model.h_coef, model.q_coef, c, x0, y0,
                                                   x_end, **kw)
        backend = "compiled"
    elif model.is_polynomial:
        xs, ys, fs, st, xstop = _pykernel.integrate(model.h_coef, model.q_coef, c, x0, y0,
                                                    x_end, **kw)
        backend = "python"
    else:
        xs, ys, fs, st, xstop = _pykernel.integrate(None, None, c, x0, y0, x_end,
                                                    h_fun=model.h, q_fun=model.q, **kw)
        backend = "python"
    return (np.asarray(xs, dtype=float), np.asarray(ys, dtype=float),
            np.asarray(fs, dtype=float), _STATUS[st], float(xstop), backend)


def _slow_start(model, c, s):
    """Start value at 1 - s for a solution leaving 1 with zero slope.

    With ``q ~ s^m`` locally the solution behaves like ``z ~ s^k``; writing
    ``dz/dphi = -k z / s`` turns the equation into the quadratic
    ``(k/s) z^2 + (h - c) z - q = 0`` whose negative root is returned.
    """
    qs = float(model.q(1.0 - s))
    q2 = float(model.q(1.0 - 2.0 * s))
    m = math.log(q2 / qs) / math.log(2.0) if qs > 0.0 and q2 > 0.0 else 1.0
    m = min(max(m, 1.0), 10.0)
    if c > model.h1:
        k = m
    elif m <= 3.0:
        k = 0.5 * (m + 1.0)
    else:
        k = m - 1.0
    A = k / s
    B = float(model.h(1.0 - s)) - c
    disc = math.sqrt(B * B + 4.0 * A * qs)
    if B <= 0.0:
        return -2.0 * qs / (disc - B)
    return (-B - disc) / (2.0 * A)


def _start_near_one(model, c, cfg):
    """Desingularized start for the solution with z(1) = 0.

    Returns (phi0, z0, shift).  With a positive slope r at 1 the start is
    (1 - eps0, -r eps0).  A vanishing slope happens when q'(1) = 0 and
    c >= h(1); then the start follows the local power balance of the
    equation and the collar is widened until |z| clears the zero guard.
    """
    r = r_plus(model, c)
    eps = cfg.eps0
    if r > 0.0:
        return 1.0 - eps, -r * eps, eps
    s = eps
    while True:
        z0 = _slow_start(model, c, s)
        if -z0 >= 100.0 * cfg.zero_guard or s >= 1e-2:
            break
        s *= 2.0
    if not z0 < 0.0:
        z0 = -max(s * s, 100.0 * cfg.zero_guard)
    return 1.0 - s, z0, s


def _slope_one_estimate(curve, z1, phi_max):
    delta = min(1e-3, 0.25 * (1.0 - phi_max) + 1e-3)
    if phi_max < 1.0 - delta:
        return None
    s1 = (curve(1.0 - delta) - z1) / (-delta)
    s2 = (curve(1.0 - 0.5 * delta) - z1) / (-0.5 * delta)
    return float(2.0 * s2 - s1)


def integrate_backward_from_one(model, c, b=0.0, cfg=DEFAULT_CONFIG):
    """Shoot from phi = 1 toward 0 with boundary value z(1) = b.

    Parameters
    ----------
    model : Model
    c : float
        Wave speed.
    b : float
        Boundary value, must be <= 0; values inside the zero guard count as
        0.  For ``b = 0`` the start is moved to
        ``1 - eps0`` along the closed-form slope.
    cfg : IntegratorConfig

    Returns
    -------
    ShootingResult
    """
    if b > 0.0:
        raise ValueError("boundary value b must be <= 0")
    if b > -cfg.zero_guard:
        # the kernel cannot start inside the zero guard; such b act as 0
        b = 0.0
    if b == 0.0:
        x0, y0, shift = _start_near_one(model, c, cfg)
    else:
        x0, y0, shift = 1.0, float(b), 0.0
    xs, ys, fs, status, xstop, backend = _run(model, c, x0, y0, cfg.eps0, cfg)
    xs, ys, fs = xs[::-1].copy(), ys[::-1].copy(), fs[::-1].copy()
    term = Terminal(status, None if status == REACHED else xstop)
    res = ShootingResult(c=float(c), direction="backward", phi_grid=xs, z_vals=ys, dz_vals=fs,
                         terminal=term, z_right=float(b), start_phi=x0, start_z=y0,
                         start_shift=shift, eps0=cfg.eps0, boundary_value=float(b),
                         backend=backend)
    if len(xs) >= 2:
        p0, z0 = xs[0], ys[0]
        res.slope_at_zero_estimate = float(z0 / p0)
        if status == REACHED:
            res.zeta0 = float(z0 - p0 * (model.h(p0) - c - model.q(p0) / z0))
        elif status == HIT_ZERO:
            res.zeta0 = 0.0
        res.slope_at_one_estimate = _slope_one_estimate(res.curve, float(b), xs[-1])
    return res


def integrate_forward_from_zero(model, c, branch=S_MINUS, cfg=DEFAULT_CONFIG):
    """Shoot from (eps0, s*eps0) toward phi = 1 along a candidate slope s.

    Parameters
    ----------
    branch : {"s_minus", "s_plus"}
        Which root of the slope quadratic at 0 to follow.

    Raises
    ------
    RefusalError
        If the chosen slope vanishes (the start would sit on the zero set,
        where the forward problem has no locally unique solution) or q'(0)
        does not exist.
    """
    sm, sp = s_pm(model, c)
    if branch == S_MINUS:
        s = sm
    elif branch == S_PLUS:
        s = sp
    else:
        raise ValueError(f"unknown branch {branch!r}")
    if not s < 0.0:
        raise RefusalError(
            f"slope {branch} = {s:g} at 0 is not negative; a forward start on z = 0 is not "
            "locally unique, use a backward shot instead")
    eps = cfg.eps0
    x0, y0 = eps, s * eps
    xs, ys, fs, status, xstop, backend = _run(model, c, x0, y0, 1.0, cfg)
    term = Terminal(status, None if status == REACHED else xstop)
    if status == REACHED:
        z1 = float(ys[-1])
    elif status == HIT_ZERO:
        z1 = 0.0
    else:
        z1 = float("nan")
    res = ShootingResult(c=float(c), direction="forward", phi_grid=xs, z_vals=ys, dz_vals=fs,
                         terminal=term, z_right=z1, start_phi=x0, start_z=y0, start_shift=eps,
                         eps0=eps, branch=branch, backend=backend)
    res.slope_at_zero_estimate = s
    if status == REACHED and len(xs) >= 2:
        res.slope_at_one_estimate = _slope_one_estimate(res.curve, z1, xs[-1])
    return res


# ------------------------------------------------------------ comparison

@dataclass
class ComparisonVerdict:
    """Outcome of an upper/lower-solution check."""

    kind: str
    holds: bool
    strict: bool
    max_defect: float
    min_defect: float
    first_violation: Optional[float]
    interval: tuple

    def to_dict(self):
        return asdict(self)


def check_upper_lower(model, c, candidate, kind="upper", interval=(0.0, 1.0),
                      derivative: Optional[Callable] = None, n=2000, strict=True,
                      margin=1e-12):
    """Test the differential inequality defining an upper or lower solution.

    An upper solution satisfies eta' >= h - c - q/eta (strictly: ">"), a lower
    solution the reverse.  The inequality is checked at the midpoints of a
    uniform grid on ``interval``.

    Parameters
    ----------
    candidate : callable or (phi, values) pair
        The function to test; must be negative on the interval.
    derivative : callable, optional
        Its derivative.  Central differences are used when omitted, and
        local polynomial differentiation for sampled candidates.
    strict : bool
        Require the inequality with a margin of ``margin`` (relative to the
        size of the terms) instead of allowing equality.
    """
    lo, hi = interval
    if isinstance(candidate, tuple):
        px, pv = (np.asarray(a, dtype=float) for a in candidate)
        order = np.argsort(px)
        px, pv = px[order], pv[order]
        dpv = np.gradient(pv, px, edge_order=2)
        curve = HermiteCurve(px, pv, dpv)
        fun = curve
        dfun = curve.derivative
        lo, hi = max(lo, px[0]), min(hi, px[-1])
    else:
        fun = candidate
        if derivative is None:
            def dfun(t, _f=candidate):
                step = 1e-6 * np.maximum(1.0, np.abs(t))
                return (_f(t + step) - _f(t - step)) / (2.0 * step)
        else:
            dfun = derivative
    edges = np.linspace(lo, hi, n + 1)
    mids = 0.5 * (edges[1:] + edges[:-1])
    eta = np.asarray(fun(mids), dtype=float)
    if np.any(eta >= 0.0):
        raise ValueError("candidate must be negative on the open interval")
    rhs = model.h(mids) - c - model.q(mids) / eta
    defect = np.asarray(dfun(mids), dtype=float) - rhs
    if kind == "lower":
        defect = -defect
    elif kind != "upper":
        raise ValueError("kind must be 'upper' or 'lower'")
    scale = margin * (1.0 + np.abs(rhs))
    bad = defect <= scale if strict else defect < -scale
    first = float(mids[np.argmax(bad)]) if np.any(bad) else None
    return ComparisonVerdict(kind=kind, holds=not bool(np.any(bad)), strict=strict,
                             max_defect=float(np.max(defect)), min_defect=float(np.min(defect)),
                             first_violation=first, interval=(float(lo), float(hi)))


def require_success(res, what="shot"):
    """Raise :class:`ConvergenceError` unless a shot ended regularly."""
    if not res.succeeded:
        raise ConvergenceError(f"{what} ended with {res.terminal}")
    return res
