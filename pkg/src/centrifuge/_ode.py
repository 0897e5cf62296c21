"""Compiled adaptive embedded Runge-Kutta drivers with PI step control.

A driver is generic over a right-hand side ``rhs(t, y, out, args) -> bool``
acting on 2-D arrays ``y[n, k]`` whose columns are independent systems that
share the step size. A ``False`` return from ``rhs`` marks the stage as
unusable (e.g. a coordinate singularity) and forces a step rejection.

Two tableaus are available: Dormand-Prince 5(4) ("dopri5") and
Dormand-Prince 8(5,3) ("dop853"), both first-same-as-last. The error norm is
the RMS over the rows of one column, maximized over columns.

Status codes: 0 success, 1 step size underflow, 2 step budget exhausted.
"""

import math

import numpy as np
from numba import njit
from scipy.integrate._ivp import dop853_coefficients as _d853

OK, UNDERFLOW, TOO_MANY_STEPS = 0, 1, 2

_DOPRI5_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0])
_DOPRI5_A = np.zeros((6, 6))
_DOPRI5_A[1, :1] = [1 / 5]
_DOPRI5_A[2, :2] = [3 / 40, 9 / 40]
_DOPRI5_A[3, :3] = [44 / 45, -56 / 15, 32 / 9]
_DOPRI5_A[4, :4] = [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729]
_DOPRI5_A[5, :5] = [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656]
_DOPRI5_B = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84])
_DOPRI5_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])

_DOP853_C = np.ascontiguousarray(_d853.C[: _d853.N_STAGES])
_DOP853_A = np.ascontiguousarray(_d853.A[: _d853.N_STAGES, : _d853.N_STAGES])
_DOP853_B = np.ascontiguousarray(_d853.B)
_DOP853_E3 = np.ascontiguousarray(_d853.E3)
_DOP853_E5 = np.ascontiguousarray(_d853.E5)

METHODS = ("dopri5", "dop853")

_SAFE = 0.9
_FAC_MIN, _FAC_MAX = 0.2, 10.0
_BETA = 0.04


def make_driver(rhs, method="dopri5"):
    """Build a compiled integrator bound to ``rhs``.

    The returned function has signature
    ``integrate(y0, t0, t_out, args, rtol, atol, h_max, h0, max_steps, phase_cap)``
    and returns ``(out, status, t_end, n_accepted, n_rejected)`` where
    ``out[i]`` is the state at ``t_out[i]``. A positive ``phase_cap`` also
    limits each step to ``phase_cap / max(|t|, 1)``, which resolves a phase
    growing like ``t**2``.
    """
    if method == "dopri5":
        tc, ta, tb, te, te3 = _DOPRI5_C, _DOPRI5_A, _DOPRI5_B, _DOPRI5_E, _DOPRI5_E
        order, dual = 5.0, False
    elif method == "dop853":
        tc, ta, tb, te, te3 = _DOP853_C, _DOP853_A, _DOP853_B, _DOP853_E5, _DOP853_E3
        order, dual = 8.0, True
    else:
        raise ValueError(f"unknown method {method!r}")
    n_stages = len(tc)
    expo1 = 1.0 / order - 0.75 * _BETA

    @njit
    def error_norm(y, ynew, ks, h, rtol, atol):
        n, kcols = y.shape
        worst = 0.0
        for k in range(kcols):
            acc5 = 0.0
            acc3 = 0.0
            for i in range(n):
                sc = atol + rtol * max(abs(y[i, k]), abs(ynew[i, k]))
                e5 = 0.0 * ks[0, i, k]
                e3 = 0.0 * ks[0, i, k]
                for s in range(n_stages + 1):
                    if te[s] != 0.0:
                        e5 += te[s] * ks[s, i, k]
                    if dual and te3[s] != 0.0:
                        e3 += te3[s] * ks[s, i, k]
                a5 = abs(e5) / sc
                acc5 += a5 * a5
                if dual:
                    a3 = abs(e3) / sc
                    acc3 += a3 * a3
            if dual:
                if acc5 == 0.0 and acc3 == 0.0:
                    val = 0.0
                else:
                    val = abs(h) * acc5 / math.sqrt((acc5 + 0.01 * acc3) * n)
            else:
                val = abs(h) * math.sqrt(acc5 / n)
            if val > worst:
                worst = val
        return worst

    @njit
    def integrate(y0, t0, t_out, args, rtol, atol, h_max, h0, max_steps, phase_cap):
        n, kcols = y0.shape
        n_out = t_out.shape[0]
        out = np.empty((n_out, n, kcols), dtype=y0.dtype)
        y = y0.copy()
        ynew = np.empty_like(y)
        tmp = np.empty_like(y)
        ks = np.empty((n_stages + 1, n, kcols), dtype=y0.dtype)

        t = t0
        io = 0
        while io < n_out and t_out[io] <= t:
            out[io] = y
            io += 1
        n_acc = 0
        n_rej = 0
        if io == n_out:
            return out, OK, t, n_acc, n_rej

        rhs(t, y, ks[0], args)
        h = min(h0, h_max)
        facold = 1e-4
        last_rejected = False
        while io < n_out:
            t_target = t_out[io]
            hit = False
            if phase_cap > 0.0:
                h = min(h, phase_cap / max(abs(t), 1.0))
            if t + h >= t_target:
                hh = t_target - t
                hit = True
            else:
                hh = h
            if hh < 1e-14 * max(1.0, abs(t)):
                if hit:
                    out[io] = y
                    io += 1
                    continue
                return out, UNDERFLOW, t, n_acc, n_rej
            if n_acc + n_rej >= max_steps:
                return out, TOO_MANY_STEPS, t, n_acc, n_rej

            good = True
            for s in range(1, n_stages):
                for i in range(n):
                    for k in range(kcols):
                        acc = y[i, k]
                        for j in range(s):
                            a = ta[s, j]
                            if a != 0.0:
                                acc += hh * a * ks[j, i, k]
                        tmp[i, k] = acc
                if not rhs(t + tc[s] * hh, tmp, ks[s], args):
                    good = False
                    break
            e = np.inf
            if good:
                for i in range(n):
                    for k in range(kcols):
                        acc = y[i, k]
                        for j in range(n_stages):
                            b = tb[j]
                            if b != 0.0:
                                acc += hh * b * ks[j, i, k]
                        ynew[i, k] = acc
                if rhs(t + hh, ynew, ks[n_stages], args):
                    e = error_norm(y, ynew, ks, hh, rtol, atol)

            if e <= 1.0:
                n_acc += 1
                t = t_target if hit else t + hh
                y[:] = ynew
                ks[0] = ks[n_stages]
                fac11 = e**expo1 if e > 0.0 else 0.0
                fac = fac11 / facold**_BETA
                fac = max(1.0 / _FAC_MAX, min(1.0 / _FAC_MIN, fac / _SAFE))
                h_prop = hh / fac
                if last_rejected:
                    h_prop = min(h_prop, hh)
                # a step clipped to hit an output time says little about h
                h = min(h_max, max(h_prop, h) if hit else h_prop)
                facold = max(e, 1e-4)
                last_rejected = False
                if hit:
                    out[io] = y
                    io += 1
            else:
                n_rej += 1
                if math.isinf(e) or math.isnan(e):
                    h = 0.25 * hh
                else:
                    h = hh / min(1.0 / _FAC_MIN, e**expo1 / _SAFE)
                last_rejected = True
        return out, OK, t, n_acc, n_rej

    return integrate
