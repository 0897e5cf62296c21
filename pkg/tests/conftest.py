import numpy as np
import pytest
from scipy.special import sph_harm_y


@pytest.fixture(scope="session")
def theta_table():
    """Normalized Theta_lm(theta) at Gauss-Legendre nodes, l <= 62."""
    x, w = np.polynomial.legendre.leggauss(160)
    theta = np.arccos(x)
    table = {}
    for l in range(63):
        for m in range(-l, l + 1):
            # phi = 0 makes Y_lm real; the 1/sqrt(2 pi) goes into the phi integral
            table[l, m] = np.sqrt(2 * np.pi) * sph_harm_y(l, m, theta, 0.0).real
    return x, w, table


def quadrature_element(theta_table, l, m, lp, mp):
    """<l,m| -sin^2 cos^2(phi - phi_d) |lp,mp> with exp(i dm phi_d) dropped."""
    x, w, table = theta_table
    dm = mp - m
    weight = {0: 0.5, 2: 0.25, -2: 0.25}.get(dm)
    if weight is None or (lp, mp) not in table or (l, m) not in table:
        return 0.0
    return -weight * float(np.sum(w * (1 - x * x) * table[l, m] * table[lp, mp]))


ACCEPTANCE_LINES = {}


@pytest.fixture
def criterion(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert it."""

    def check(number, title, ok, detail):
        ACCEPTANCE_LINES[number] = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        print(ACCEPTANCE_LINES[number])
        assert ok, detail

    return check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
