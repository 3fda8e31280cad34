import os
import subprocess
import sys
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from frontwave import _pykernel as pk
from frontwave import singular_ode as so

try:
    from frontwave import _kernel as ck
except ImportError:
    ck = None

needs_compiled = pytest.mark.skipif(ck is None, reason="compiled kernel not built")


def _sdirk_exact():
    a = [[Fraction(0)] * 5 for _ in range(5)]
    rows = [(), (Fraction(1, 2),), (Fraction(17, 50), Fraction(-1, 25)),
            (Fraction(371, 1360), Fraction(-137, 2720), Fraction(15, 544)),
            (Fraction(25, 24), Fraction(-49, 48), Fraction(125, 16), Fraction(-85, 12))]
    for i, row in enumerate(rows):
        for j, v in enumerate(row):
            a[i][j] = v
        a[i][i] = Fraction(1, 4)
    b = [Fraction(25, 24), Fraction(-49, 48), Fraction(125, 16), Fraction(-85, 12), Fraction(1, 4)]
    return a, b


def test_sdirk_tableau_matches_rationals():
    a, b = _sdirk_exact()
    for i, row in enumerate(pk.SDIRK_A):
        for j, v in enumerate(row):
            assert v == float(a[i][j])
    assert tuple(float(x) for x in b) == pk.SDIRK_B
    assert pk.SDIRK_GAMMA == 0.25


def test_sdirk_fourth_order_conditions():
    a, b = _sdirk_exact()
    c = [sum(row) for row in a]
    assert [float(x) for x in c] == list(pk.SDIRK_C)
    n = range(5)
    ac = [sum(a[i][j] * c[j] for j in n) for i in n]
    assert sum(b) == 1
    assert sum(b[i] * c[i] for i in n) == Fraction(1, 2)
    assert sum(b[i] * c[i] ** 2 for i in n) == Fraction(1, 3)
    assert sum(b[i] * ac[i] for i in n) == Fraction(1, 6)
    assert sum(b[i] * c[i] ** 3 for i in n) == Fraction(1, 4)
    assert sum(b[i] * c[i] * ac[i] for i in n) == Fraction(1, 8)
    assert sum(b[i] * a[i][j] * c[j] ** 2 for i in n for j in n) == Fraction(1, 12)
    assert sum(b[i] * a[i][j] * ac[j] for i in n for j in n) == Fraction(1, 24)


def test_sdirk_stiffly_accurate_and_embedded_third_order():
    assert pk.SDIRK_A[4] + (pk.SDIRK_GAMMA,) == pk.SDIRK_B
    bh = pk.SDIRK_BHAT
    c = pk.SDIRK_C
    assert sum(bh) == pytest.approx(1.0, abs=1e-15)
    assert sum(x * y for x, y in zip(bh, c)) == pytest.approx(0.5, abs=1e-15)
    assert sum(x * y * y for x, y in zip(bh, c)) == pytest.approx(1 / 3, abs=1e-15)


def test_dormand_prince_consistency():
    b = (pk._A71, 0.0, pk._A73, pk._A74, pk._A75, pk._A76)
    c = (0.0, pk._C2, pk._C3, pk._C4, pk._C5, 1.0)
    assert sum(b) == pytest.approx(1.0, abs=1e-15)
    assert sum(x * y for x, y in zip(b, c)) == pytest.approx(0.5, abs=1e-15)
    assert sum(x * y ** 4 for x, y in zip(b, c)) == pytest.approx(0.2, abs=1e-15)
    err = (pk._E1, pk._E3, pk._E4, pk._E5, pk._E6, pk._E7)
    assert sum(err) == pytest.approx(0.0, abs=1e-15)


def test_exact_solution_recovered_by_python_kernel():
    # z = -phi^2 solves z' = h - q/z with h = -2 phi - phi^2 and q = phi^4
    xs, ys, _, status, _ = pk.integrate((0.0, -2.0, -1.0), (0.0, 0.0, 0.0, 0.0, 1.0),
                                        0.0, 0.9, -0.81, 0.1)
    x, y = np.asarray(xs), np.asarray(ys)
    assert status == pk.REACHED
    np.testing.assert_allclose(y, -x ** 2, rtol=1e-8)


def test_zero_event_reported():
    # z' = 1 run forward from z(0.5) = -0.1 reaches zero at phi = 0.6
    xs, _, _, status, x_stop = pk.integrate((1.0,), (0.0,), 0.0, 0.5, -0.1, 1.0)
    assert status == pk.HIT_ZERO
    assert x_stop == pytest.approx(0.6, abs=1e-8)


@needs_compiled
@settings(max_examples=25, deadline=None)
@given(c=st.floats(0.0, 3.0), b=st.floats(-2.0, 0.0))
def test_compiled_and_python_kernels_bit_identical(c, b):
    h = (0.0, -3.0, 3.0)
    q = (0.0, 0.0, 0.0, 1.0, -1.0)
    x0 = 1.0 - 1e-6
    y0 = b - 1e-6 if b < 0 else -1e-6
    rp = pk.integrate(h, q, c, x0, y0, 1e-6)
    rc = ck.integrate(h, q, c, x0, y0, 1e-6)
    assert rp[3] == rc[3] and rp[4] == rc[4]
    for k in range(3):
        assert np.array_equal(np.asarray(rp[k]), np.asarray(rc[k]))


def test_backend_selection_honours_pure_flag():
    env = dict(os.environ, FRONTWAVE_PURE="1")
    out = subprocess.run([sys.executable, "-c", "import frontwave; print(frontwave.BACKEND)"],
                         env=env, capture_output=True, text=True, cwd="/", check=True)
    assert out.stdout.strip() == "python"
    assert so.BACKEND in ("compiled", "python")
