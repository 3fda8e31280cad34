import sys

import numpy as np
import pytest

import frontwave as fw


@pytest.fixture(scope="session")
def models():
    """Every registry entry built once per session."""
    return {name: fw.build_model(name) for name in fw.preset_names()}


@pytest.fixture(scope="session")
def fisher_c_star(models):
    return fw.critical_speed(models["fisher"]).c_star


def local_derivative(x, y, half_width=4, degree=8):
    """Differentiate samples by least-squares polynomial fits on sliding windows.

    Returns midpoints of consecutive samples and the fitted derivative there.
    """
    mids, slopes = [], []
    for i in range(half_width, len(x) - half_width - 1):
        xs = x[i - half_width:i + half_width + 2]
        ys = y[i - half_width:i + half_width + 2]
        m = 0.5 * (x[i] + x[i + 1])
        scale = xs[-1] - xs[0]
        V = np.vander((xs - m) / scale, degree + 1, increasing=True)
        coef = np.linalg.lstsq(V, ys, rcond=None)[0]
        mids.append(m)
        slopes.append(coef[1] / scale)
    return np.array(mids), np.array(slopes)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
