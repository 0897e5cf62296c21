import math

import numpy as np
import pytest
from numba import njit

from centrifuge._ode import METHODS, make_driver


@njit
def _rotation(t, y, out, args):
    (omega,) = args
    for k in range(y.shape[1]):
        out[0, k] = -1j * omega * y[0, k]
    return True


@njit
def _decay(t, y, out, args):
    rate, t_bad = args
    if t > t_bad:
        return False
    for k in range(y.shape[1]):
        out[0, k] = -rate * t * y[0, k]
    return True


@pytest.mark.parametrize("method", METHODS)
def test_phase_rotation(method):
    drive = make_driver(_rotation, method)
    y0 = np.ones((1, 2), dtype=np.complex128)
    y0[0, 1] = 0.5j
    times = np.array([0.0, 1.0, 7.5])
    out, status, t, n_acc, n_rej = drive(y0, 0.0, times, (3.0,), 1e-10, 1e-12, math.inf, 1e-3, 10**6, 0.0)
    assert status == 0 and t == 7.5 and n_acc > 0
    for i, tau in enumerate(times):
        np.testing.assert_allclose(out[i], y0 * np.exp(-3j * tau), atol=1e-8)


@pytest.mark.parametrize("method", METHODS)
def test_gaussian_decay(method):
    drive = make_driver(_decay, method)
    y0 = np.ones((1, 1))
    out, status, *_ = drive(y0, 0.0, np.array([0.0, 2.0]), (1.5, 1e9), 1e-10, 1e-12, math.inf, 1e-3, 10**6, 0.0)
    assert status == 0
    assert out[-1, 0, 0] == pytest.approx(math.exp(-0.75 * 4.0), rel=1e-8)


def test_step_budget_reported():
    drive = make_driver(_rotation, "dop853")
    y0 = np.ones((1, 1), dtype=np.complex128)
    out, status, *_ = drive(y0, 0.0, np.array([0.0, 100.0]), (50.0,), 1e-10, 1e-12, math.inf, 1e-3, 10, 0.0)
    assert status == 2


def test_rejected_rhs_underflows():
    drive = make_driver(_decay, "dopri5")
    out, status, t, *_ = drive(np.ones((1, 1)), 0.0, np.array([0.0, 2.0]), (1.0, 1.0), 1e-8, 1e-10, math.inf, 1e-3, 10**6, 0.0)
    assert status == 1
    assert t == pytest.approx(1.0, abs=1e-6)


def test_phase_cap_limits_step():
    drive = make_driver(_rotation, "dop853")
    y0 = np.ones((1, 1), dtype=np.complex128)
    args = (0.0,)
    _, _, _, free, _ = drive(y0, 0.0, np.array([0.0, 100.0]), args, 1e-8, 1e-10, math.inf, 1e-3, 10**6, 0.0)
    _, _, _, capped, _ = drive(y0, 0.0, np.array([0.0, 100.0]), args, 1e-8, 1e-10, math.inf, 1e-3, 10**6, math.pi)
    # h <= pi / t gives about t^2 / (2 pi) steps
    assert capped > 100.0**2 / (2 * math.pi) * 0.9
    assert free < capped
