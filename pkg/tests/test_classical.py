import math

import numpy as np
import pytest
from scipy.integrate import cumulative_simpson, solve_ivp

from centrifuge.classical import (
    ClassicalEnsembleSpec,
    ClassicalState,
    PoleError,
    classical_derivatives,
    classical_energy,
    classical_params,
    integrate_classical,
    mc_efficiency,
    sample_thermal_arrays,
    sample_thermal_classical,
)
from centrifuge.errors import InvalidInputError
from centrifuge.params import DrivePulse, PhysicalParams, thermal_lc

STATE = ClassicalState(1.1, 0.3, 0.4, 1.7)


def test_state_validation():
    with pytest.raises(InvalidInputError):
        ClassicalState(0.0, 0.0, 0.0, 0.0)
    with pytest.raises(InvalidInputError):
        ClassicalState(1.0, 0.0, math.inf, 0.0)
    assert STATE.Lz == 1.7
    assert STATE.L == pytest.approx(math.hypot(0.4, 1.7 / math.sin(1.1)))


def test_pole_raises():
    with pytest.raises(PoleError):
        classical_derivatives([1e-12, 0.0, 0.0, 0.0], 0.0, 1.0)


def test_free_rotor_conserves_lz_and_l():
    times = np.linspace(0.0, 30.0, 7)
    traj = integrate_classical(STATE, times, 0.0, 1.0)
    np.testing.assert_allclose(traj[:, 3], STATE.pi_phi, rtol=0, atol=1e-12)
    L = np.hypot(traj[:, 2], traj[:, 3] / np.sin(traj[:, 0]))
    np.testing.assert_allclose(L, STATE.L, rtol=1e-8)


def test_planar_motion_stays_planar():
    d = classical_derivatives([math.pi / 2, 0.2, 0.0, 3.0], 5.0, 2.0)
    assert d[2] == pytest.approx(0.0, abs=1e-15)
    traj = integrate_classical([math.pi / 2, 0.2, 0.0, 3.0], np.linspace(0, 20, 5), 4.0, 0.5)
    np.testing.assert_allclose(traj[:, 0], math.pi / 2, atol=1e-9)
    np.testing.assert_allclose(traj[:, 2], 0.0, atol=1e-9)


def test_kernel_matches_numpy_derivatives():
    p1, p2 = 3.0, 0.4
    pulse = DrivePulse.gaussian(p1, 15.0)
    times = np.linspace(0.0, 12.0, 4)
    fast = integrate_classical(STATE, times, p1, p2, pulse, rtol=1e-11, atol=1e-13)
    ref = solve_ivp(
        lambda t, y: classical_derivatives(y, t, p1 * p2, pulse),
        (0.0, 12.0), STATE.as_array(), method="DOP853", t_eval=times, rtol=1e-11, atol=1e-13,
    )
    np.testing.assert_allclose(fast, ref.y.T, atol=1e-7)


def test_energy_audit():
    # dH/dtau along a trajectory equals the explicit time derivative from the moving drive
    p1p2 = 1.5
    times = np.linspace(0.0, 10.0, 4001)
    traj = integrate_classical(STATE, times, p1p2, 1.0, rtol=1e-12, atol=1e-14)
    h = np.array([classical_energy(y, t, p1p2) for y, t in zip(traj, times)])
    eps = 1e-6
    explicit = np.array(
        [(classical_energy(y, t + eps, p1p2) - classical_energy(y, t - eps, p1p2)) / (2 * eps) for y, t in zip(traj, times)]
    )
    gained = cumulative_simpson(explicit, x=times, initial=0.0)
    np.testing.assert_allclose(h - h[0], gained, atol=1e-6)


def test_frozen_drive_conserves_energy():
    p1p2, phi_d = 2.0, 0.7
    sol = solve_ivp(
        lambda t, y: classical_derivatives(y, t, p1p2, phi_d=phi_d),
        (0.0, 25.0), STATE.as_array(), method="DOP853", rtol=1e-12, atol=1e-12, dense_output=True,
    )
    e = [classical_energy(sol.sol(t), t, p1p2, phi_d=phi_d) for t in np.linspace(0, 25, 11)]
    np.testing.assert_allclose(e, e[0], atol=1e-9)


def test_zero_temperature_samples():
    arr = sample_thermal_arrays(ClassicalEnsembleSpec(50, 0.0, 3))
    assert np.all(arr[2:] == 0.0)
    assert np.all((arr[0] > 0) & (arr[0] < math.pi))


def test_sample_moments():
    p2_cl = 1.3
    arr = sample_thermal_arrays(ClassicalEnsembleSpec(100_000, p2_cl, 7))
    pth2 = arr[2] ** 2
    assert abs(pth2.mean() - p2_cl**2) < 3 * pth2.std() / math.sqrt(pth2.size)
    L2 = arr[2] ** 2 + (arr[3] / np.sin(arr[0])) ** 2
    assert abs(L2.mean() - 2 * p2_cl**2) < 3 * L2.std() / math.sqrt(L2.size)
    assert abs(np.cos(arr[0]).mean()) < 3 / math.sqrt(3 * arr.shape[1])


def test_sampling_reproducible_and_sliceable():
    spec = ClassicalEnsembleSpec(300, 2.0, 11)
    full = sample_thermal_arrays(spec)
    np.testing.assert_array_equal(full, sample_thermal_arrays(spec))
    np.testing.assert_array_equal(full[:, 120:250], sample_thermal_arrays(spec, 120, 250))
    assert not np.array_equal(full, sample_thermal_arrays(ClassicalEnsembleSpec(300, 2.0, 12)))
    states = sample_thermal_classical(ClassicalEnsembleSpec(5, 2.0, 11))
    assert states[0].pi_theta == full[2, 0]


def test_from_quantum():
    spec = ClassicalEnsembleSpec.from_quantum(11.5, 0.1, 200)
    assert spec.p2_cl == pytest.approx(0.1 * math.sqrt(143.75 / 2))


def test_classical_params_match_quantum_mapping():
    hbar, inertia, beta, eps = 1.0e-34, 1.4e-46, 1e24, 3e-21
    kT = 4.1e-21
    p1, p2 = classical_params(PhysicalParams(eps, beta, inertia, hbar, kT))
    l_c = thermal_lc(kT, inertia, hbar)
    q1, q2 = eps / (hbar * 1e12), hbar / (inertia * 1e12)
    assert p1 * p2 == pytest.approx(q1 * q2)
    assert p2 == pytest.approx(q2 * math.sqrt(l_c * (l_c + 1) / 2))
    with pytest.raises(InvalidInputError):
        classical_params(PhysicalParams(eps, beta, inertia, hbar))


def test_below_threshold_no_capture():
    spec = ClassicalEnsembleSpec.from_quantum(11.5, 0.1, 2000, 5)
    res = mc_efficiency(spec, 1.0, 0.1, None, 9.9)
    assert res.efficiency < 0.01
    assert res.n_samples + res.failed.size == 2000


def test_rescaling_invariance():
    # two physical setups with the same (P1_cl, P2_cl) give the same Monte Carlo result
    a = PhysicalParams(2e-22, 1e24, 1.4e-46, 1.05e-34, 4e-21)
    # inertia x2, chirp x4, temperature and drive x8
    b = PhysicalParams(2e-22 * 8, 1e24 * 4, 1.4e-46 * 2, 1.05e-34, 4e-21 * 8)
    pa, pb = classical_params(a), classical_params(b)
    assert pa == pytest.approx(pb)
    tau_f = 2 * 0.23 * 49.5
    runs = []
    for p1, p2 in (pa, pb):
        spec = ClassicalEnsembleSpec(500, p2, 9)
        runs.append(mc_efficiency(spec, p1 * p2 / 0.23, 0.23, None, tau_f).efficiency)
    assert runs[0] == pytest.approx(runs[1], abs=1e-12)


def test_mc_validation():
    with pytest.raises(InvalidInputError):
        mc_efficiency(ClassicalEnsembleSpec(10, 1.0), 1.0, 1.0, None, 10.0)
    with pytest.raises(InvalidInputError):
        mc_efficiency(ClassicalEnsembleSpec(200, 1.0), 1.0, 1.0, None, 0.0)


def test_mc_workers_reproducible():
    spec = ClassicalEnsembleSpec.from_quantum(11.5, 0.23, 600, 2)
    one = mc_efficiency(spec, 8.0, 0.23, None, 22.77, chunk=200)
    two = mc_efficiency(spec, 8.0, 0.23, None, 22.77, chunk=200, workers=2)
    np.testing.assert_array_equal(one.L, two.L)
    assert one.stderr == pytest.approx(math.sqrt(one.efficiency * (1 - one.efficiency) / one.n_samples))
