# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled shooting kernel for polynomial right-hand sides.

Mirrors :func:`frontwave._pykernel.integrate` step for step; see that module
for the method description.  Only polynomial ``h`` and ``q`` are supported
here, closed-form presets go through the pure-Python path.
"""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, sqrt, pow
from libc.stdlib cimport malloc, realloc, free

cnp.import_array()

cdef enum:
    REACHED = 0
    HIT_ZERO = 1
    UNDERFLOW = 2
    BUDGET = 3

cdef double STIFF_SWITCH = 3.0

cdef double C2 = 1.0 / 5.0, C3 = 3.0 / 10.0, C4 = 4.0 / 5.0, C5 = 8.0 / 9.0
cdef double A21 = 1.0 / 5.0
cdef double A31 = 3.0 / 40.0, A32 = 9.0 / 40.0
cdef double A41 = 44.0 / 45.0, A42 = -56.0 / 15.0, A43 = 32.0 / 9.0
cdef double A51 = 19372.0 / 6561.0, A52 = -25360.0 / 2187.0
cdef double A53 = 64448.0 / 6561.0, A54 = -212.0 / 729.0
cdef double A61 = 9017.0 / 3168.0, A62 = -355.0 / 33.0, A63 = 46732.0 / 5247.0
cdef double A64 = 49.0 / 176.0, A65 = -5103.0 / 18656.0
cdef double A71 = 35.0 / 384.0, A73 = 500.0 / 1113.0, A74 = 125.0 / 192.0
cdef double A75 = -2187.0 / 6784.0, A76 = 11.0 / 84.0
cdef double E1 = 71.0 / 57600.0, E3 = -71.0 / 16695.0, E4 = 71.0 / 1920.0
cdef double E5 = -17253.0 / 339200.0, E6 = 22.0 / 525.0, E7 = -1.0 / 40.0

cdef double SG = 0.25
cdef double SC[5]
cdef double SA[5][5]
cdef double SB[5]
cdef double SBH[5]
SC[:] = [0.25, 0.75, 11.0 / 20.0, 0.5, 1.0]
SA[0][:] = [0.0, 0.0, 0.0, 0.0, 0.0]
SA[1][:] = [0.5, 0.0, 0.0, 0.0, 0.0]
SA[2][:] = [17.0 / 50.0, -1.0 / 25.0, 0.0, 0.0, 0.0]
SA[3][:] = [371.0 / 1360.0, -137.0 / 2720.0, 15.0 / 544.0, 0.0, 0.0]
SA[4][:] = [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.0]
SB[:] = [25.0 / 24.0, -49.0 / 48.0, 125.0 / 16.0, -85.0 / 12.0, 0.25]
SBH[:] = [59.0 / 48.0, -17.0 / 96.0, 225.0 / 32.0, -85.0 / 12.0, 0.0]


cdef struct Poly:
    double *coef
    int n
    double c


cdef inline double horner(double *coef, int n, double x) nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(n - 1, -1, -1):
        acc = acc * x + coef[i]
    return acc


cdef inline double hval(Poly *hp, double x) nogil:
    return horner(hp.coef, hp.n, x) - hp.c


cdef inline double qval(Poly *qp, double x) nogil:
    return horner(qp.coef, qp.n, x)


cdef inline double rhs(Poly *hp, Poly *qp, double x, double y) nogil:
    return hval(hp, x) - qval(qp, x) / y


cdef int dp_step(Poly *hp, Poly *qp, double x, double y, double f0, double h,
                 double rtol, double atol, double *out) nogil:
    cdef double y2, y3, y4, y5, y6, ynew, k2, k3, k4, k5, k6, k7, e, sc
    y2 = y + h * A21 * f0
    if y2 >= 0.0:
        return 0
    k2 = rhs(hp, qp, x + C2 * h, y2)
    y3 = y + h * (A31 * f0 + A32 * k2)
    if y3 >= 0.0:
        return 0
    k3 = rhs(hp, qp, x + C3 * h, y3)
    y4 = y + h * (A41 * f0 + A42 * k2 + A43 * k3)
    if y4 >= 0.0:
        return 0
    k4 = rhs(hp, qp, x + C4 * h, y4)
    y5 = y + h * (A51 * f0 + A52 * k2 + A53 * k3 + A54 * k4)
    if y5 >= 0.0:
        return 0
    k5 = rhs(hp, qp, x + C5 * h, y5)
    y6 = y + h * (A61 * f0 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5)
    if y6 >= 0.0:
        return 0
    k6 = rhs(hp, qp, x + h, y6)
    ynew = y + h * (A71 * f0 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6)
    if ynew >= 0.0:
        return 0
    k7 = rhs(hp, qp, x + h, ynew)
    e = h * (E1 * f0 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7)
    sc = atol + rtol * (fabs(y) if fabs(y) > fabs(ynew) else fabs(ynew))
    out[0] = ynew
    out[1] = k7
    out[2] = fabs(e) / sc
    return 1


cdef int sdirk_step(Poly *hp, Poly *qp, double x, double y, double h,
                    double rtol, double atol, double *out) nogil:
    cdef double ks[5]
    cdef double hg = h * SG
    cdef double xi, base, Hx, qx, B, P, disc, sq, Y, ynew, yhat, sc
    cdef int i, j
    for i in range(5):
        xi = x + SC[i] * h
        base = y
        for j in range(i):
            base += h * SA[i][j] * ks[j]
        Hx = hval(hp, xi)
        qx = qval(qp, xi)
        B = base + hg * Hx
        P = hg * qx
        disc = B * B - 4.0 * P
        if disc < 0.0:
            return 0
        sq = sqrt(disc)
        if B <= 0.0:
            Y = 0.5 * (B - sq)
        else:
            if P >= 0.0:
                return 0
            Y = 2.0 * P / (B + sq)
        if not Y < 0.0:
            return 0
        ks[i] = Hx - qx / Y
    ynew = y
    yhat = y
    for i in range(5):
        ynew += h * SB[i] * ks[i]
        yhat += h * SBH[i] * ks[i]
    if ynew >= 0.0:
        return 0
    sc = atol + rtol * (fabs(y) if fabs(y) > fabs(ynew) else fabs(ynew))
    out[0] = ynew
    out[1] = ks[4]
    out[2] = fabs(ynew - yhat) / sc
    return 1


cdef double initial_step(Poly *hp, Poly *qp, double x0, double y0, double f0,
                         double span, double rtol, double atol) nogil:
    cdef double sc = atol + rtol * fabs(y0)
    cdef double d0 = fabs(y0) / sc
    cdef double d1 = fabs(f0) / sc
    cdef double h0, h1, y1, f1, d2, m, sgn
    if d0 < 1e-5 or d1 < 1e-5:
        h0 = 1e-6
    else:
        h0 = 0.01 * d0 / d1
    if h0 > fabs(span):
        h0 = fabs(span)
    if f0 != 0.0 and h0 > 0.5 * fabs(y0) / fabs(f0):
        h0 = 0.5 * fabs(y0) / fabs(f0)
    sgn = 1.0 if span > 0 else -1.0
    y1 = y0 + sgn * h0 * f0
    if y1 >= 0.0:
        return sgn * h0 * 1e-3
    f1 = rhs(hp, qp, x0 + sgn * h0, y1)
    d2 = fabs(f1 - f0) / sc / h0
    m = d1 if d1 > d2 else d2
    if m <= 1e-15:
        h1 = h0 * 1e-3
        if h1 < 1e-6:
            h1 = 1e-6
    else:
        h1 = pow(0.01 / m, 0.2)
    if h1 > 100.0 * h0:
        h1 = 100.0 * h0
    if h1 > fabs(span):
        h1 = fabs(span)
    return sgn * h1


cdef class _Buffer:
    cdef double *x
    cdef double *y
    cdef double *f
    cdef Py_ssize_t n, cap

    def __cinit__(self):
        self.cap = 1024
        self.n = 0
        self.x = <double *> malloc(self.cap * sizeof(double))
        self.y = <double *> malloc(self.cap * sizeof(double))
        self.f = <double *> malloc(self.cap * sizeof(double))
        if self.x == NULL or self.y == NULL or self.f == NULL:
            raise MemoryError()

    def __dealloc__(self):
        free(self.x)
        free(self.y)
        free(self.f)

    cdef int push(self, double x, double y, double f) except -1:
        if self.n == self.cap:
            self.cap *= 2
            self.x = <double *> realloc(self.x, self.cap * sizeof(double))
            self.y = <double *> realloc(self.y, self.cap * sizeof(double))
            self.f = <double *> realloc(self.f, self.cap * sizeof(double))
            if self.x == NULL or self.y == NULL or self.f == NULL:
                raise MemoryError()
        self.x[self.n] = x
        self.y[self.n] = y
        self.f[self.n] = f
        self.n += 1
        return 0

    cdef object arrays(self):
        cdef Py_ssize_t i
        xs = np.empty(self.n)
        ys = np.empty(self.n)
        fs = np.empty(self.n)
        cdef double[::1] xv = xs, yv = ys, fv = fs
        for i in range(self.n):
            xv[i] = self.x[i]
            yv[i] = self.y[i]
            fv[i] = self.f[i]
        return xs, ys, fs


def integrate(h_coef, q_coef, double c, double x0, double y0, double x_end,
              double rtol=1e-10, double atol=1e-12, double min_step=1e-13,
              long max_steps=200000, double zero_guard=1e-11):
    """Integrate dz/dphi = h(phi) - c - q(phi)/z for polynomial h and q.

    Same contract as :func:`frontwave._pykernel.integrate` except that the
    sample arrays are returned as numpy arrays.
    """
    cdef double[::1] hc = np.ascontiguousarray(h_coef, dtype=np.float64)
    cdef double[::1] qc = np.ascontiguousarray(q_coef, dtype=np.float64)
    cdef Poly hp, qp
    hp.coef = &hc[0]
    hp.n = hc.shape[0]
    hp.c = c
    qp.coef = &qc[0]
    qp.n = qc.shape[0]
    qp.c = 0.0
    cdef _Buffer buf = _Buffer()
    cdef double x = x0, y = y0, span = x_end - x0
    cdef double f = rhs(&hp, &qp, x, y)
    cdef double h, sgn, remaining, cap, errold = 1e-4, fac, e, lo, hi, mid
    cdef double out[3]
    cdef double best[3]
    cdef int ok, okm, stiff, final, last_rejected = 0, have_best, it
    cdef long steps = 0
    cdef double end_tol = 4.0 * 2.220446049250313e-16 * (fabs(x_end) if fabs(x_end) > 1.0 else 1.0)
    buf.push(x, y, f)
    if span == 0.0:
        return buf.arrays() + (REACHED, x)
    sgn = 1.0 if span > 0 else -1.0
    h = initial_step(&hp, &qp, x, y, f, span, rtol, atol)
    while True:
        remaining = x_end - x
        if sgn * remaining <= end_tol:
            return buf.arrays() + (REACHED, x)
        if steps >= max_steps:
            return buf.arrays() + (BUDGET, x)
        if f != 0.0:
            cap = 0.5 * fabs(y) / fabs(f)
            if fabs(h) > cap:
                h = sgn * cap
        if fabs(h) < min_step:
            if fabs(y) / (fabs(f) if fabs(f) > 1e-300 else 1e-300) < 100.0 * min_step \
                    or fabs(y) < 1e3 * zero_guard:
                return buf.arrays() + (HIT_ZERO, x)
            return buf.arrays() + (UNDERFLOW, x)
        final = 0
        if sgn * (x + h - x_end) >= 0.0:
            h = remaining
            final = 1
        steps += 1
        stiff = h * qval(&qp, x) / (y * y) < -STIFF_SWITCH
        if stiff:
            ok = sdirk_step(&hp, &qp, x, y, h, rtol, atol, out)
        else:
            ok = dp_step(&hp, &qp, x, y, f, h, rtol, atol, out)
        if not ok:
            h *= 0.25
            last_rejected = 1
            continue
        if out[2] > 1.0:
            if stiff:
                fac = 0.9 * pow(out[2], -0.25)
            else:
                fac = 0.9 * pow(out[2], -0.2)
            if fac < 0.2:
                fac = 0.2
            h *= fac
            last_rejected = 1
            continue
        if out[0] > -zero_guard:
            lo = 0.0
            hi = 1.0
            have_best = 0
            for it in range(60):
                mid = 0.5 * (lo + hi)
                if stiff:
                    okm = sdirk_step(&hp, &qp, x, y, mid * h, rtol, atol, best)
                else:
                    okm = dp_step(&hp, &qp, x, y, f, mid * h, rtol, atol, best)
                if okm and best[0] <= -zero_guard:
                    lo = mid
                    have_best = 1
                    out[0] = best[0]
                    out[1] = best[1]
                else:
                    hi = mid
                if (hi - lo) * fabs(h) < 1e-15 * (fabs(x) if fabs(x) > 1.0 else 1.0):
                    break
            if have_best:
                buf.push(x + lo * h, out[0], out[1])
                return buf.arrays() + (HIT_ZERO, x + lo * h)
            return buf.arrays() + (HIT_ZERO, x)
        x = x_end if final else x + h
        y = out[0]
        f = out[1]
        buf.push(x, y, f)
        e = out[2] if out[2] > 1e-10 else 1e-10
        if stiff:
            fac = 0.9 * pow(e, -0.25)
        else:
            fac = 0.9 * pow(e, -0.17) * pow(errold, 0.04)
            errold = out[2] if out[2] > 1e-4 else 1e-4
        if fac > 5.0:
            fac = 5.0
        if fac < 0.2:
            fac = 0.2
        if last_rejected and fac > 1.0:
            fac = 1.0
        last_rejected = 0
        h *= fac
