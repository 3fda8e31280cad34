"""Pure-Python shooting kernel for the scalar equation dz/dphi = H(phi) - q(phi)/z.

This module is the reference implementation and the fallback used when the
compiled extension is unavailable.  The compiled twin in ``_kernel.pyx``
follows it line for line, restricted to polynomial coefficients.

The integrator combines two embedded Runge--Kutta pairs:

* Dormand--Prince 5(4) with PI step control on the non-stiff part;
* a five-stage, L-stable, stiffly accurate SDIRK method of order 4 with an
  embedded order-3 estimate, switched on when ``h * q / z**2 < -STIFF_SWITCH``.

Because the equation is scalar and the right-hand side is affine in ``1/z``,
each implicit stage reduces to a quadratic whose negative root is the
stage value, so the implicit step costs no Newton iterations.
"""

import math

REACHED = 0
HIT_ZERO = 1
UNDERFLOW = 2
BUDGET = 3

STIFF_SWITCH = 3.0

# Dormand--Prince 5(4)
_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = (19372.0 / 6561.0, -25360.0 / 2187.0,
                          64448.0 / 6561.0, -212.0 / 729.0)
_A61, _A62, _A63, _A64, _A65 = (9017.0 / 3168.0, -355.0 / 33.0,
                                46732.0 / 5247.0, 49.0 / 176.0,
                                -5103.0 / 18656.0)
_A71, _A73, _A74, _A75, _A76 = (35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0,
                                -2187.0 / 6784.0, 11.0 / 84.0)
_E1, _E3, _E4, _E5, _E6, _E7 = (71.0 / 57600.0, -71.0 / 16695.0,
                                71.0 / 1920.0, -17253.0 / 339200.0,
                                22.0 / 525.0, -1.0 / 40.0)

# SDIRK4 (gamma = 1/4), stiffly accurate, embedded order 3
SDIRK_GAMMA = 0.25
SDIRK_C = (0.25, 0.75, 11.0 / 20.0, 0.5, 1.0)
SDIRK_A = (
    (),
    (0.5,),
    (17.0 / 50.0, -1.0 / 25.0),
    (371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0),
    (25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0),
)
SDIRK_B = (25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25)
SDIRK_BHAT = (59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0)


def _horner(rev, x):
    acc = 0.0
    for a in rev:
        acc = acc * x + a
    return acc


class _Field:
    """Right-hand side H(x) - q(x)/y with H = h - c."""

    def __init__(self, h_coef, q_coef, c, h_fun, q_fun):
        self.c = c
        if h_fun is None:
            hr = tuple(float(a) for a in reversed(h_coef))
            self.hval = lambda x: _horner(hr, x) - c
        else:
            self.hval = lambda x: h_fun(x) - c
        if q_fun is None:
            qr = tuple(float(a) for a in reversed(q_coef))
            self.qval = lambda x: _horner(qr, x)
        else:
            self.qval = q_fun

    def __call__(self, x, y):
        return self.hval(x) - self.qval(x) / y


def _dp_step(F, x, y, f0, h, rtol, atol):
    """One Dormand--Prince step.  Returns (ok, ynew, fnew, err)."""
    y2 = y + h * _A21 * f0
    if y2 >= 0.0:
        return False, 0.0, 0.0, 0.0
    k2 = F(x + _C2 * h, y2)
    y3 = y + h * (_A31 * f0 + _A32 * k2)
    if y3 >= 0.0:
        return False, 0.0, 0.0, 0.0
    k3 = F(x + _C3 * h, y3)
    y4 = y + h * (_A41 * f0 + _A42 * k2 + _A43 * k3)
    if y4 >= 0.0:
        return False, 0.0, 0.0, 0.0
    k4 = F(x + _C4 * h, y4)
    y5 = y + h * (_A51 * f0 + _A52 * k2 + _A53 * k3 + _A54 * k4)
    if y5 >= 0.0:
        return False, 0.0, 0.0, 0.0
    k5 = F(x + _C5 * h, y5)
    y6 = y + h * (_A61 * f0 + _A62 * k2 + _A63 * k3 + _A64 * k4 + _A65 * k5)
    if y6 >= 0.0:
        return False, 0.0, 0.0, 0.0
    k6 = F(x + h, y6)
    ynew = y + h * (_A71 * f0 + _A73 * k3 + _A74 * k4 + _A75 * k5 + _A76 * k6)
    if ynew >= 0.0:
        return False, 0.0, 0.0, 0.0
    k7 = F(x + h, ynew)
    e = h * (_E1 * f0 + _E3 * k3 + _E4 * k4 + _E5 * k5 + _E6 * k6 + _E7 * k7)
    sc = atol + rtol * max(abs(y), abs(ynew))
    return True, ynew, k7, abs(e) / sc


def _sdirk_step(F, x, y, h, rtol, atol):
    """One SDIRK4 step with exact stage solves.  Returns (ok, ynew, fnew, err).

    Stage i solves Y = base + h*gamma*(H(x_i) - q(x_i)/Y).  Multiplying by Y
    gives Y**2 - B*Y + h*gamma*q = 0 with B = base + h*gamma*H(x_i); the
    branch continuous with the negative solution is the root of smaller
    magnitude when h < 0 and the negative root in general.
    """
    hg = h * SDIRK_GAMMA
    ks = [0.0] * 5
    for i in range(5):
        xi = x + SDIRK_C[i] * h
        base = y
        row = SDIRK_A[i]
        for j in range(i):
            base += h * row[j] * ks[j]
        Hx = F.hval(xi)
        qx = F.qval(xi)
        B = base + hg * Hx
        P = hg * qx
        disc = B * B - 4.0 * P
        if disc < 0.0:
            return False, 0.0, 0.0, 0.0
        sq = math.sqrt(disc)
        # negative root of Y**2 - B*Y + P = 0, computed without cancellation
        if B <= 0.0:
            Y = 0.5 * (B - sq)
        else:
            if P >= 0.0:
                return False, 0.0, 0.0, 0.0
            Y = 2.0 * P / (B + sq)
        if not Y < 0.0:
            return False, 0.0, 0.0, 0.0
        ks[i] = Hx - qx / Y
    ynew = y
    yhat = y
    for i in range(5):
        ynew += h * SDIRK_B[i] * ks[i]
        yhat += h * SDIRK_BHAT[i] * ks[i]
    if ynew >= 0.0:
        return False, 0.0, 0.0, 0.0
    sc = atol + rtol * max(abs(y), abs(ynew))
    return True, ynew, ks[4], abs(ynew - yhat) / sc


def _initial_step(F, x0, y0, f0, span, rtol, atol):
    sc = atol + rtol * abs(y0)
    d0 = abs(y0) / sc
    d1 = abs(f0) / sc
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    h0 = min(h0, abs(span))
    if f0 != 0.0:
        h0 = min(h0, 0.5 * abs(y0) / abs(f0))
    sgn = 1.0 if span > 0 else -1.0
    y1 = y0 + sgn * h0 * f0
    if y1 >= 0.0:
        return sgn * h0 * 1e-3
    f1 = F(x0 + sgn * h0, y1)
    d2 = abs(f1 - f0) / sc / h0
    m = max(d1, d2)
    if m <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / m) ** 0.2
    return sgn * min(100.0 * h0, h1, abs(span))


def integrate(h_coef, q_coef, c, x0, y0, x_end, rtol=1e-10, atol=1e-12,
              min_step=1e-13, max_steps=200000, zero_guard=1e-11,
              h_fun=None, q_fun=None):
    """Integrate dz/dphi = h(phi) - c - q(phi)/z from (x0, y0) toward x_end.

    Parameters
    ----------
    h_coef, q_coef : sequence of float
        Polynomial coefficients, constant term first.  Ignored when the
        matching callable is given.
    c : float
        Wave speed.
    x0, y0 : float
        Start point; ``y0`` must be negative.
    x_end : float
        Target abscissa, on either side of ``x0``.
    rtol, atol : float
        Mixed error tolerance per step.
    min_step : float
        Smallest admissible step magnitude.
    max_steps : int
        Step budget (accepted plus rejected).
    zero_guard : float
        The run stops once z would rise above ``-zero_guard``.
    h_fun, q_fun : callable, optional
        Scalar evaluators overriding the coefficients.

    Returns
    -------
    xs, ys, fs : list of float
        Accepted points, solution values and slopes, in integration order.
    status : int
        One of ``REACHED``, ``HIT_ZERO``, ``UNDERFLOW``, ``BUDGET``.
    x_stop : float
        Abscissa where the run ended.
    """
    F = _Field(h_coef, q_coef, c, h_fun, q_fun)
    x = float(x0)
    y = float(y0)
    span = x_end - x
    f = F(x, y)
    xs, ys, fs = [x], [y], [f]
    if span == 0.0:
        return xs, ys, fs, REACHED, x
    sgn = 1.0 if span > 0 else -1.0
    h = _initial_step(F, x, y, f, span, rtol, atol)
    errold = 1e-4
    last_rejected = False
    steps = 0
    end_tol = 4.0 * 2.220446049250313e-16 * max(1.0, abs(x_end))
    while True:
        remaining = x_end - x
        if sgn * remaining <= end_tol:
            return xs, ys, fs, REACHED, x
        if steps >= max_steps:
            return xs, ys, fs, BUDGET, x
        # never let one step change z by more than half its size
        if f != 0.0:
            cap = 0.5 * abs(y) / abs(f)
            if abs(h) > cap:
                h = sgn * cap
        if abs(h) < min_step:
            if abs(y) / max(abs(f), 1e-300) < 100.0 * min_step \
                    or abs(y) < 1e3 * zero_guard:
                return xs, ys, fs, HIT_ZERO, x
            return xs, ys, fs, UNDERFLOW, x
        final = False
        if sgn * (x + h - x_end) >= 0.0:
            h = remaining
            final = True
        steps += 1
        stiff = h * F.qval(x) / (y * y) < -STIFF_SWITCH
        if stiff:
            ok, ynew, fnew, err = _sdirk_step(F, x, y, h, rtol, atol)
        else:
            ok, ynew, fnew, err = _dp_step(F, x, y, f, h, rtol, atol)
        if not ok:
            h *= 0.25
            last_rejected = True
            continue
        if err > 1.0:
            if stiff:
                fac = max(0.2, 0.9 * err ** -0.25)
            else:
                fac = max(0.2, 0.9 * err ** -0.2)
            h *= fac
            last_rejected = True
            continue
        if ynew > -zero_guard:
            # locate the crossing of -zero_guard by bisection on the step fraction
            lo, hi = 0.0, 1.0
            best = None
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if stiff:
                    okm, ym, fm, em = _sdirk_step(F, x, y, mid * h, rtol, atol)
                else:
                    okm, ym, fm, em = _dp_step(F, x, y, f, mid * h, rtol, atol)
                if okm and ym <= -zero_guard:
                    lo = mid
                    best = (x + mid * h, ym, fm)
                else:
                    hi = mid
                if (hi - lo) * abs(h) < 1e-15 * max(1.0, abs(x)):
                    break
            if best is not None:
                xs.append(best[0])
                ys.append(best[1])
                fs.append(best[2])
                return xs, ys, fs, HIT_ZERO, best[0]
            return xs, ys, fs, HIT_ZERO, x
        x = x_end if final else x + h
        y = ynew
        f = fnew
        xs.append(x)
        ys.append(y)
        fs.append(f)
        if stiff:
            fac = min(5.0, max(0.2, 0.9 * max(err, 1e-10) ** -0.25))
        else:
            e = max(err, 1e-10)
            fac = 0.9 * e ** -0.17 * errold ** 0.04
            fac = min(5.0, max(0.2, fac))
            errold = max(err, 1e-4)
        if last_rejected:
            fac = min(fac, 1.0)
        last_rejected = False
        h *= fac
