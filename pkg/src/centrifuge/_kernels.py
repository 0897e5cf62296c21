"""Compiled right-hand sides for the quantum and classical rotor problems.

Quantum amplitudes are integrated in the interaction picture of the free
rotor, ``b_s = exp(i E_l tau) a_s``. There the equation of motion is

    i db_s/dtau = P1(tau) e_s * sum_j C[s, j] conj(e_j) b_j,
    e_s = exp(i (E_l tau - m tau^2 / 4)),

which carries the drive phase ``exp(i dm phi_d)`` and the free evolution
exactly, so the solution only varies on the time scale of the couplings.
"""

import math

import numpy as np
from numba import njit

from ._ode import METHODS, make_driver


@njit(inline="always", cache=True)
def envelope(tau, kind, peak, sigma, trunc):
    if tau > trunc:
        return 0.0
    if kind == 0:
        return peak
    return peak * math.exp(-tau * tau / (2.0 * sigma * sigma))


@njit(cache=True)
def schrodinger_rhs(tau, y, out, args):
    (indptr, indices, data, l_slot, m_slot, energy, m_quarter,
     kind, peak, sigma, trunc, ph_l, ph_m, ph, u) = args
    n, kcols = y.shape
    amp = envelope(tau, kind, peak, sigma, trunc)
    if amp == 0.0:
        out[:] = 0.0
        return True
    # phases factor into a per-l and a per-m table
    for a in range(energy.shape[0]):
        psi = energy[a] * tau
        ph_l[a] = complex(math.cos(psi), math.sin(psi))
    tau2 = tau * tau
    for a in range(m_quarter.shape[0]):
        psi = m_quarter[a] * tau2
        ph_m[a] = complex(math.cos(psi), -math.sin(psi))
    for s in range(n):
        ph[s] = ph_l[l_slot[s]] * ph_m[m_slot[s]]
    if kcols == 1:
        u1 = u[:, 0]
        for s in range(n):
            u1[s] = ph[s].conjugate() * y[s, 0]
        for i in range(n):
            acc = 0j
            for jj in range(indptr[i], indptr[i + 1]):
                acc += data[jj] * u1[indices[jj]]
            out[i, 0] = (-1j * amp) * ph[i] * acc
        return True
    for s in range(n):
        c = ph[s].conjugate()
        for k in range(kcols):
            u[s, k] = c * y[s, k]
    for i in range(n):
        f = -1j * amp * ph[i]
        for k in range(kcols):
            out[i, k] = 0j
        for jj in range(indptr[i], indptr[i + 1]):
            d = data[jj]
            j = indices[jj]
            for k in range(kcols):
                out[i, k] += d * u[j, k]
        for k in range(kcols):
            out[i, k] *= f
    return True


SCHRODINGER_DRIVERS = {name: make_driver(schrodinger_rhs, name) for name in METHODS}
integrate_schrodinger = SCHRODINGER_DRIVERS["dop853"]


@njit(cache=True)
def rotor_rhs(tau, y, out, args):
    kind, peak, sigma, trunc, p2 = args
    coupling = envelope(tau, kind, peak, sigma, trunc) * p2
    phi_d = 0.25 * tau * tau
    for k in range(y.shape[1]):
        theta = y[0, k]
        phi = y[1, k]
        pth = y[2, k]
        pph = y[3, k]
        s = math.sin(theta)
        if abs(s) < 1e-9:
            return False
        c = math.cos(theta)
        dphi = phi - phi_d
        cd = math.cos(dphi)
        out[0, k] = pth
        out[1, k] = pph / (s * s)
        out[2, k] = pph * pph * c / (s * s * s) + 2.0 * coupling * s * c * cd * cd
        out[3, k] = -coupling * s * s * math.sin(2.0 * dphi)
    return True


integrate_rotor = make_driver(rotor_rhs, "dop853")


@njit
def rotor_ensemble(states, tau_f, args, rtol, atol, h_max, h0, max_steps, phase_cap):
    """Integrate each column of ``states[4, n]`` independently to ``tau_f``.

    Returns final states and per-sample status codes.
    """
    n = states.shape[1]
    final = np.empty_like(states)
    status = np.zeros(n, dtype=np.int64)
    t_out = np.array([tau_f])
    y = np.empty((4, 1))
    for k in range(n):
        for i in range(4):
            y[i, 0] = states[i, k]
        res, st, _, _, _ = integrate_rotor(y, 0.0, t_out, args, rtol, atol, h_max, h0, max_steps, phase_cap)
        status[k] = st
        for i in range(4):
            final[i, k] = res[0, i, 0]
    return final, status


_GAUSS = math.sqrt(3.0) / 6.0


@njit(cache=True)
def magnus4(c0, edges, diag0, slope, cmat, kind, peak, sigma, trunc):
    """Fourth-order Magnus propagation of ``i dc/dtau = H(tau) c``.

    ``H(tau) = diag(diag0 + slope tau) + P1(tau) cmat`` with ``cmat`` real
    symmetric. One exponential step is taken per interval of ``edges``.
    """
    c = c0.copy()
    n = c.shape[0]
    h1 = np.empty((n, n))
    h2 = np.empty((n, n))
    for k in range(edges.shape[0] - 1):
        t0 = edges[k]
        h = edges[k + 1] - t0
        ta = t0 + (0.5 - _GAUSS) * h
        tb = t0 + (0.5 + _GAUSS) * h
        pa = envelope(ta, kind, peak, sigma, trunc)
        pb = envelope(tb, kind, peak, sigma, trunc)
        for i in range(n):
            for j in range(n):
                h1[i, j] = pa * cmat[i, j]
                h2[i, j] = pb * cmat[i, j]
            h1[i, i] += diag0[i] + slope[i] * ta
            h2[i, i] += diag0[i] + slope[i] * tb
        comm = h2 @ h1 - h1 @ h2
        kmat = (0.5 * h) * (h1 + h2) - (1j * h * h * math.sqrt(3.0) / 12.0) * comm
        w, u = np.linalg.eigh(kmat)
        rot = np.exp(-1j * w)
        tmp = u.conj().T @ c
        for i in range(n):
            tmp[i, :] *= rot[i]
        c = u @ tmp
    return c
