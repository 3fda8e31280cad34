"""Front profiles rebuilt from a solution of the reduced equation.

A solution ``z < 0`` on (0, 1) determines the decreasing profile through
``phi' = z(phi) / D(phi)``.  Inverting, the travel coordinate is

    xi(phi) = int_phi^nu D(s) / (-z(s)) ds,    phi(0) = nu,

so the profile reaches 0 (resp. 1) at a finite coordinate exactly when the
integral converges at that end.  Near each end the integrand is replaced by
a power law ``A s^p`` fitted on the last sampled decade; ``p`` decides
convergence and supplies the closed-form remainder.
"""

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BelowAdmissibleRange, ModelError, RefusalError
from .singular_ode import DEFAULT_CONFIG, HIT_ZERO, REACHED, ShootingResult

CLASSICAL = "classical"
SHARP = "sharp"
INDETERMINATE = "indeterminate"

CONF_THEORY = "theory"
CONF_NUMERIC = "resolved-numerically"
CONF_CONFLICT = "theory-numeric-conflict"

DIVERGENCE_EXPONENT = -0.95
FLAT_EXPONENT = 0.05
CUT_FACTOR = 1e4
MESH_DECADES = 7
MESH_PER_DECADE = 512
MESH_INTERIOR = 512
EXTENSION = 1.0

_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W


class IndeterminateSlope(RefusalError):
    """The slope formula at 1 degenerates to 0/0."""


def _power_integral(A, p, lo, hi):
    """Integral of ``A s^p`` over [lo, hi] with 0 <= lo <= hi."""
    if p <= -1.0 and lo <= 0.0:
        return math.inf
    if abs(p + 1.0) < 1e-12:
        return A * math.log(hi / lo)
    return A * (hi ** (p + 1.0) - lo ** (p + 1.0)) / (p + 1.0)


@dataclass
class TailFit:
    """Power law ``A s^p`` for the integrand near one end.

    ``s`` is the distance to the end; ``cut`` is where the sampled integrand
    hands over to the fit.
    """

    A: float
    p: float
    cut: float
    flat_limit: Optional[float] = None

    @property
    def converges(self):
        return self.p > DIVERGENCE_EXPONENT

    def integral(self, lo, hi):
        return _power_integral(self.A, self.p, lo, hi)

    def integrand(self, s):
        return self.A * np.power(s, self.p)

    def slope_limit(self):
        """Limit of ``phi' = -1 / integrand`` at the end."""
        if self.p > FLAT_EXPONENT:
            return -math.inf
        if self.p < -FLAT_EXPONENT:
            return 0.0
        return self.flat_limit


class ProfileQuadrature:
    """Cumulative integral of ``D / (-z)`` over the sampled range plus tails.

    Parameters
    ----------
    model : Model
        Needs the diffusivity ``D``.
    z : ShootingResult
        Solution negative on its sampled range.
    cfg : IntegratorConfig
        Supplies the absolute tolerance that sets the tail cut.
    """

    def __init__(self, model, z, cfg=DEFAULT_CONFIG):
        if not model.has_factors:
            raise ModelError("profile reconstruction needs the diffusivity D")
        if z.terminal.kind not in (REACHED, HIT_ZERO):
            raise RefusalError(f"shot ended with {z.terminal}; no profile to rebuild")
        if model.dq0 is not None and z.direction == "backward":
            from .thresholds import shot_vanishes_at_zero
            if not shot_vanishes_at_zero(model, z.c, z):
                raise BelowAdmissibleRange(
                    f"the shot at c = {z.c:g} stays away from 0 at phi = {z.phi_min:g}; "
                    "no front at this speed and boundary value")
        self.model = model
        self.z = z
        self.cfg = cfg
        x = z.phi_grid
        y = z.z_vals
        thr = CUT_FACTOR * cfg.abs_tol
        if np.any(y[1:-1] >= 0.0):
            raise RefusalError("z changes sign inside the sampled range; not a front")
        big = np.abs(y) >= thr
        # left cut: first sample from which |z| stays above the threshold up to 1/2
        mid = int(np.searchsorted(x, 0.5))
        lo = 0
        small_left = np.nonzero(~big[:mid])[0]
        if small_left.size:
            lo = int(small_left[-1]) + 1
        small_right = np.nonzero(~big[mid:])[0]
        hi = len(x) - 1
        if small_right.size:
            hi = mid + int(small_right[0]) - 1
        if lo >= hi or x[lo] > 0.1:
            raise BelowAdmissibleRange(
                f"the solution does not approach 0 (|z| small only above phi = {x[lo]:.3g}); "
                "no front at this speed")
        if x[hi] < 1.0 - 1e-3:
            raise RefusalError(f"the solution does not extend to 1 (stops at {x[hi]:.6g})")
        self.lo_idx, self.hi_idx = lo, hi
        self.phi_lo, self.phi_hi = float(x[lo]), float(x[hi])
        self.exact_right = (self.phi_hi == 1.0 and abs(y[hi]) >= thr)
        xs = x[lo:hi + 1]
        a, b = xs[:-1], xs[1:]
        nodes = a[:, None] + (b - a)[:, None] * _GL_X[None, :]
        vals = self.integrand(nodes)
        seg = (b - a) * (vals @ _GL_W)
        self._x = xs
        self._cum = np.concatenate([[0.0], np.cumsum(seg)])
        self.left = self._fit_tail(side="left")
        self.right = None if self.exact_right else self._fit_tail(side="right")

    # ------------------------------------------------------------ pieces

    def integrand(self, phi):
        phi = np.asarray(phi, dtype=float)
        return np.asarray(self.model.D(phi), dtype=float) / (-self.z.curve(phi))

    def _fit_tail(self, side):
        if side == "left":
            cut = self.phi_lo
            top = min(10.0 * cut, 0.5)
            s = np.geomspace(cut, top, 17)
            G = self.integrand(s)
        else:
            cut = 1.0 - self.phi_hi
            top = min(10.0 * cut, 0.5)
            s = np.geomspace(cut, top, 17)
            G = self.integrand(1.0 - s)
        if np.any(G <= 0.0) or not np.all(np.isfinite(G)):
            raise RefusalError(f"integrand not positive near the {side} end")
        p, logA = np.polyfit(np.log(s), np.log(G), 1)
        # slope limit for a flat integrand: cubic extrapolation of -1/G from
        # levels where z is resolved well above the absolute tolerance
        lo = max(cut, min(30.0 * cut, 1e-3))
        sf = np.geomspace(lo, max(5.0 * lo, 0.05), 24)
        Gf = self.integrand(sf if side == "left" else 1.0 - sf)
        flat = float(np.polyval(np.polyfit(sf, -1.0 / Gf, 3), 0.0))
        return TailFit(A=float(math.exp(logA)), p=float(p), cut=float(cut), flat_limit=flat)

    def cumulative(self, phi):
        """``T(phi) = int_{phi_lo}^{phi} D/(-z)``; ``-inf``/``+inf`` at divergent ends."""
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        out = np.empty_like(phi)
        inside = (phi >= self.phi_lo) & (phi <= self.phi_hi)
        if np.any(inside):
            t = phi[inside]
            k = np.clip(np.searchsorted(self._x, t, side="right") - 1, 0, len(self._x) - 2)
            a = self._x[k]
            nodes = a[:, None] + (t - a)[:, None] * _GL_X[None, :]
            part = (t - a) * (self.integrand(nodes) @ _GL_W)
            out[inside] = self._cum[k] + part
        below = phi < self.phi_lo
        for i in np.nonzero(below)[0]:
            out[i] = -self.left.integral(max(phi[i], 0.0), self.phi_lo)
        above = phi > self.phi_hi
        top = self._cum[-1]
        for i in np.nonzero(above)[0]:
            if self.right is None:
                out[i] = top
            else:
                out[i] = top + self.right.integral(max(1.0 - phi[i], 0.0), 1.0 - self.phi_hi)
        return out

    def integrand_any(self, phi):
        """Integrand on (0, 1), switching to the tail fits outside the cut."""
        phi = np.atleast_1d(np.asarray(phi, dtype=float))
        out = np.empty_like(phi)
        inside = (phi >= self.phi_lo) & (phi <= self.phi_hi)
        out[inside] = self.integrand(phi[inside])
        below = phi < self.phi_lo
        out[below] = self.left.integrand(phi[below])
        above = phi > self.phi_hi
        if np.any(above):
            if self.right is None:
                out[above] = self.integrand(phi[above])
            else:
                out[above] = self.right.integrand(1.0 - phi[above])
        return out

    def xi(self, phi, normalization=0.5):
        """Travel coordinate of ``phi`` with ``xi(normalization) = 0``."""
        ref = self.cumulative([normalization])[0]
        return ref - self.cumulative(phi)

    def xi0(self, normalization=0.5):
        """Coordinate where the profile reaches 0, ``inf`` if never."""
        if not self.left.converges:
            return math.inf
        return float(self.xi([0.0], normalization)[0])

    def a(self, normalization=0.5):
        """Coordinate where the profile leaves 1, ``-inf`` if never."""
        if self.right is not None and not self.right.converges:
            return -math.inf
        return float(self.xi([1.0], normalization)[0])


def xi_of_phi(model, z, phi, normalization=0.5, cfg=DEFAULT_CONFIG):
    """Travel coordinate at profile level ``phi``.

    Parameters
    ----------
    model : Model
    z : ShootingResult
    phi : float or array_like
        Levels in [0, 1].
    normalization : float
        Level placed at ``xi = 0``.

    Returns
    -------
    float or ndarray
        ``+inf`` at 0 or ``-inf`` at 1 when the integral diverges there.
    """
    quad = ProfileQuadrature(model, z, cfg)
    arr = np.atleast_1d(np.asarray(phi, dtype=float))
    out = quad.xi(arr, normalization)
    if quad.left is not None and not quad.left.converges:
        out[arr <= 0.0] = math.inf
    if quad.right is not None and not quad.right.converges:
        out[arr >= 1.0] = -math.inf
    return float(out[0]) if np.ndim(phi) == 0 else out


# ---------------------------------------------------------------- slopes

def _z_right(z):
    return float(z.z_right) if hasattr(z, "z_right") else float(z)


def slope_at_one(model, c, z):
    """Limit of ``phi'`` where the profile leaves 1.

    Parameters
    ----------
    model : Model
    c : float
    z : ShootingResult or float
        The solution or just its value at 1.

    Returns
    -------
    float
        Negative number, 0, or ``-inf``.

    Raises
    ------
    IndeterminateSlope
        When ``z(1) = 0``, ``D'(1) = 0`` and ``g(1) = 0`` (a 0/0 limit).
    """
    if not model.has_factors:
        raise RefusalError("the slope at 1 needs D and g separately")
    z1 = _z_right(z)
    D1 = float(model.D(1.0))
    if z1 < 0.0:
        return z1 / D1 if D1 > 0.0 else -math.inf
    if D1 > 0.0:
        return 0.0
    g1 = float(model.g(1.0))
    dD1 = float(model.dD(1.0))
    H = model.h1 - c
    if dD1 < 0.0:
        return 2.0 * g1 / (H - math.sqrt(H * H - 4.0 * dD1 * g1))
    if g1 == 0.0:
        raise IndeterminateSlope("z(1) = 0 with D'(1) = 0 and g(1) = 0: the slope at 1 is 0/0")
    if c > model.h1:
        return g1 / (model.h1 - c)
    return -math.inf


@dataclass
class ZeroVerdict:
    """Behaviour of the profile where it reaches 0.

    ``xi0_finite`` is ``True``/``False`` when theory decides it and ``None``
    otherwise.
    """

    kind: str
    slope: Optional[float]
    xi0_finite: Optional[bool]
    basis: str
    confidence: str = CONF_THEORY

    def to_dict(self):
        return {"kind": self.kind, "slope": _jsonable(self.slope),
                "xi0_finite": self.xi0_finite, "basis": self.basis,
                "confidence": self.confidence}


def _sharp_slope(model, c):
    dD0 = float(model.dD(0.0))
    return (model.h0 - c) / dD0 if dD0 > 0.0 else -math.inf


def classify_at_zero(model, c, c_star, z=None, beta_hat=None, c_tol=1e-5, b_tol=1e-6,
                     cfg=DEFAULT_CONFIG):
    """Classical or sharp at 0, decided from the speed and ``z(1)``.

    Parameters
    ----------
    model : Model
    c, c_star : float
        Speed and critical speed.
    z : ShootingResult or float, optional
        The solution (or its value at 1); needed only when ``c > c_star``.
        A sampled solution also settles the cases theory leaves open, through
        the tail of the profile integral at 0.
    beta_hat : float, optional
        Smoothness threshold at speed ``c``; needed only when ``c > c_star``.
    c_tol, b_tol : float
        Tolerances for ``c == c_star`` and for comparing ``z(1)`` with
        ``beta_hat``.
    cfg : IntegratorConfig
        Tolerances of the profile quadrature.

    Returns
    -------
    ZeroVerdict
        ``kind`` is ``indeterminate`` only when theory does not decide and no
        sampled solution is given.
    """
    verdict = _classify_theory(model, c, c_star, z, beta_hat, c_tol, b_tol)
    if verdict.kind != INDETERMINATE or not isinstance(z, ShootingResult):
        return verdict
    kind, slope, finite = _numeric_zero(ProfileQuadrature(model, z, cfg))
    return ZeroVerdict(kind, slope, finite,
                       verdict.basis + "; decided by the tail of the profile integral",
                       CONF_NUMERIC)


def _classify_theory(model, c, c_star, z, beta_hat, c_tol, b_tol):
    if model.dq0 is None:
        raise RefusalError("q'(0) does not exist; the behaviour at 0 is not classified")
    if not model.has_factors:
        raise RefusalError("classification at 0 needs D and g separately")
    if c < c_star - c_tol:
        raise BelowAdmissibleRange(f"c = {c:g} is below the critical speed {c_star:.12g}")
    if float(model.D(0.0)) > 0.0:
        return ZeroVerdict(CLASSICAL, 0.0, False,
                           "D(0) > 0 makes the integrand non-integrable at 0")
    at_critical = abs(c - c_star) <= c_tol
    above_h0 = c_star > model.h0 + c_tol
    if at_critical:
        if above_h0:
            return ZeroVerdict(SHARP, _sharp_slope(model, c), True,
                               "D(0) = 0 and c = c* > h(0): z leaves 0 with slope h(0) - c")
        return ZeroVerdict(INDETERMINATE, None, None,
                           "c = c* = h(0): both behaviours occur")
    if z is None or beta_hat is None:
        raise RefusalError("above c*, classification at 0 needs z(1) and beta_hat")
    z1 = _z_right(z)
    if z1 > beta_hat + b_tol:
        g_ratio = float(model.g_p.deriv()(0.0))
        no_reach = c > model.h0 + g_ratio
        return ZeroVerdict(CLASSICAL, 0.0, False if no_reach else None,
                           "z(1) > beta_hat: z leaves 0 with slope 0"
                           + ("; c > h(0) + g'(0) keeps the profile positive" if no_reach else ""))
    if z1 < beta_hat - b_tol and above_h0:
        return ZeroVerdict(SHARP, _sharp_slope(model, c), True,
                           "z(1) <= beta_hat with c* > h(0): z leaves 0 with slope h(0) - c")
    return ZeroVerdict(INDETERMINATE, None, None,
                       "z(1) within tolerance of beta_hat or c* = h(0)")


# --------------------------------------------------------------- profile

def _jsonable(x):
    if x is None:
        return None
    x = float(x)
    if math.isinf(x):
        return "+inf" if x > 0 else "-inf"
    return x


@dataclass
class FrontProfile:
    """Sampled decreasing profile with its endpoint data.

    ``xi_grid`` is increasing and ``phi_vals`` decreasing.  Points beyond a
    finite endpoint carry the constant extension.
    """

    xi_grid: np.ndarray
    phi_vals: np.ndarray
    dphi_vals: np.ndarray
    a: float
    xi0: float
    slope_at_a: Optional[float]
    slope_at_xi0: Optional[float]
    kind_at_zero: str
    kind_at_one: str
    c: float
    normalization: float = 0.5
    confidence_zero: str = CONF_NUMERIC
    confidence_one: str = CONF_NUMERIC
    tail_exponents: dict = field(default_factory=dict)
    notes: list = field(default_factory=list)
    _quad: Optional[ProfileQuadrature] = None

    def interior(self):
        """Mask of samples with 0 < phi < 1."""
        return (self.phi_vals > 0.0) & (self.phi_vals < 1.0)

    def phi_at(self, xi):
        """Profile value at ``xi`` (inverse of the quadrature, Hermite in xi)."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        m = self.interior() & np.isfinite(self.dphi_vals)
        X, P, dP = self.xi_grid[m], self.phi_vals[m], self.dphi_vals[m]
        out = np.empty_like(xi)
        k = np.clip(np.searchsorted(X, xi, side="right") - 1, 0, len(X) - 2)
        h = X[k + 1] - X[k]
        s = (xi - X[k]) / h
        out[:] = ((1 + 2 * s) * (1 - s) ** 2 * P[k] + s * (1 - s) ** 2 * h * dP[k]
                  + s * s * (3 - 2 * s) * P[k + 1] + s * s * (s - 1) * h * dP[k + 1])
        if self._quad is not None:
            # beyond the sampled levels invert the quadrature exactly
            for i in np.nonzero((xi < X[0]) | (xi > X[-1]))[0]:
                out[i] = self._invert(xi[i])
        return out

    def _invert(self, x):
        if x >= self.xi0:
            return 0.0
        if x <= self.a:
            return 1.0
        from scipy.optimize import brentq

        def fn(p):
            return self._quad.xi([p], self.normalization)[0] - x
        lo, hi = 1e-300, 1.0 - 1e-16
        flo, fhi = fn(lo), fn(hi)
        if not flo > 0.0:
            return 0.0
        if not fhi < 0.0:
            return 1.0
        return brentq(fn, lo, hi, xtol=1e-300, rtol=4e-16)

    def classification(self):
        return {
            "kind_at_zero": self.kind_at_zero,
            "kind_at_one": self.kind_at_one,
            "slopes": {"at_a": _jsonable(self.slope_at_a),
                       "at_xi0": _jsonable(self.slope_at_xi0)},
            "endpoints": {"a": _jsonable(self.a), "xi0": _jsonable(self.xi0)},
            "confidence": {"zero": self.confidence_zero, "one": self.confidence_one},
            "c": self.c,
            "normalization": self.normalization,
            "tail_exponents": self.tail_exponents,
            "notes": list(self.notes),
        }

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("xi,phi,dphi\n")
            for x, p, d in zip(self.xi_grid, self.phi_vals, self.dphi_vals):
                fh.write(f"{x:.17g},{p:.17g},{d:.17g}\n")


def _mesh():
    ends = np.geomspace(10.0 ** -(MESH_DECADES + 1), 1e-1, MESH_DECADES * MESH_PER_DECADE)
    interior = np.linspace(0.1, 0.9, MESH_INTERIOR)
    return np.unique(np.concatenate([ends, interior, 1.0 - ends]))


def _numeric_zero(quad):
    fin = quad.left.converges
    slope = quad.left.slope_limit() if fin else 0.0
    kind = SHARP if fin and slope != 0.0 and abs(slope) > 1e-6 else CLASSICAL
    return kind, slope, fin


def build_profile(model, z, cfg=DEFAULT_CONFIG, c_star=None, beta_hat=None,
                  normalization=0.5):
    """Rebuild the profile of ``z`` and classify both ends.

    Parameters
    ----------
    model : Model
    z : ShootingResult
        Solution covering (0, 1).
    cfg : IntegratorConfig
    c_star, beta_hat : float, optional
        Enable the theoretical classification at 0; without them the verdict
        comes from the tail test alone.
    normalization : float
        Level placed at ``xi = 0``.

    Returns
    -------
    FrontProfile
    """
    if not 0.0 < normalization < 1.0:
        raise ValueError("normalization must lie in (0, 1)")
    quad = ProfileQuadrature(model, z, cfg)
    c = z.c
    notes = []

    # ---- end at 0
    num_kind, num_slope, num_fin = _numeric_zero(quad)
    verdict = None
    if c_star is not None:
        try:
            verdict = _classify_theory(model, c, c_star, z, beta_hat, 1e-5, 1e-6)
        except RefusalError as exc:
            notes.append(f"classification at 0 unavailable: {exc}")
    if verdict is None or verdict.kind == INDETERMINATE:
        kind0, slope0, conf0 = num_kind, num_slope, CONF_NUMERIC
        if verdict is not None:
            notes.append(verdict.basis)
    else:
        kind0, conf0 = verdict.kind, CONF_THEORY
        slope0 = verdict.slope if kind0 == SHARP else num_slope if num_fin else 0.0
        if verdict.xi0_finite is not None and verdict.xi0_finite != num_fin:
            conf0 = CONF_CONFLICT
            notes.append(f"tail exponent {quad.left.p:.4g} disagrees with the theory on xi0")
        if kind0 == CLASSICAL and num_kind == SHARP:
            conf0 = CONF_CONFLICT
            notes.append("tail fit suggests a nonzero slope at 0")
        notes.append(verdict.basis)
    xi0 = quad.xi0(normalization) if num_fin else math.inf

    # ---- end at 1
    z1 = float(z.z_right)
    conf1 = CONF_THEORY
    try:
        slope1 = slope_at_one(model, c, z)
    except IndeterminateSlope:
        slope1 = quad.right.slope_limit() if quad.right is not None else None
        conf1 = CONF_NUMERIC
    a = quad.a(normalization)
    if math.isinf(a):
        kind1 = CLASSICAL
        slope1 = 0.0 if slope1 is None else slope1
    else:
        kind1 = SHARP if slope1 is None or slope1 != 0.0 else CLASSICAL

    # ---- samples
    mesh = _mesh()
    xi = quad.xi(mesh, normalization)
    G = quad.integrand_any(mesh)
    dphi = -1.0 / G
    order = np.argsort(xi)
    xi, phi, dphi = xi[order], mesh[order], dphi[order]
    keep = np.concatenate([[True], np.diff(xi) > 0.0]) & np.isfinite(xi)
    xi, phi, dphi = xi[keep], phi[keep], dphi[keep]
    if math.isfinite(xi0):
        xi = np.concatenate([xi, [xi0, xi0 + EXTENSION]])
        phi = np.concatenate([phi, [0.0, 0.0]])
        dphi = np.concatenate([dphi, [slope0, 0.0]])
    if math.isfinite(a):
        equilibrium = z1 == 0.0 and model.g is not None and float(model.g(1.0)) == 0.0
        # samples that round onto a carry no information beyond the endpoint
        inside = xi > a
        xi, phi, dphi = xi[inside], phi[inside], dphi[inside]
        head_x, head_p, head_d = [a], [1.0], [slope1 if slope1 is not None else math.nan]
        if equilibrium:
            head_x, head_p, head_d = [a - EXTENSION] + head_x, [1.0] + head_p, [0.0] + head_d
        xi = np.concatenate([head_x, xi])
        phi = np.concatenate([head_p, phi])
        dphi = np.concatenate([head_d, dphi])

    tails = {"zero": quad.left.p}
    if quad.right is not None:
        tails["one"] = quad.right.p
    return FrontProfile(xi_grid=xi, phi_vals=phi, dphi_vals=dphi, a=a, xi0=xi0,
                        slope_at_a=slope1, slope_at_xi0=slope0, kind_at_zero=kind0,
                        kind_at_one=kind1, c=c, normalization=normalization,
                        confidence_zero=conf0, confidence_one=conf1,
                        tail_exponents=tails, notes=notes, _quad=quad)
