"""Classical rigid rotor in the centrifuge potential.

Dimensionless Hamiltonian, with ``tau = sqrt(beta) t`` and momenta in units
of ``I sqrt(beta)``:

    H = pi_theta^2 / 2 + pi_phi^2 / (2 sin^2 theta)
        - p1p2(tau) sin^2 theta cos^2(phi - phi_d(tau))

where ``p1p2(tau)`` is the drive envelope times ``P2``. The drive only
enters through the product ``P1 P2``, which is the same for the quantum
and the classical parameter pairs.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import IntegrationError, InvalidInputError
from .params import DrivePulse, PhysicalParams, drive_phase

__all__ = [
    "ClassicalState",
    "ClassicalEnsembleSpec",
    "MCResult",
    "PoleError",
    "classical_derivatives",
    "classical_energy",
    "classical_params",
    "sample_thermal_classical",
    "sample_thermal_arrays",
    "integrate_classical",
    "mc_efficiency",
]

POLE_EPS = 1e-9
CAPTURE_FRACTION = 0.8
MAX_FAILED_FRACTION = 1e-3


class PoleError(IntegrationError):
    """Raised when a trajectory reaches a coordinate pole of the sphere."""


@dataclass(frozen=True)
class ClassicalState:
    theta: float
    phi: float
    pi_theta: float
    pi_phi: float

    def __post_init__(self):
        if not 0 < self.theta < math.pi:
            raise InvalidInputError(f"theta must lie in (0, pi), got {self.theta!r}")
        if not math.isfinite(self.pi_phi) or not math.isfinite(self.pi_theta):
            raise InvalidInputError("momenta must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.theta, self.phi, self.pi_theta, self.pi_phi])

    @property
    def L(self) -> float:
        """Total angular momentum."""
        return math.sqrt(self.pi_theta**2 + self.pi_phi**2 / math.sin(self.theta) ** 2)

    @property
    def Lz(self) -> float:
        return self.pi_phi


@dataclass(frozen=True)
class ClassicalEnsembleSpec:
    """Canonical ensemble of ``n_samples`` rotors at thermal momentum ``p2_cl``."""

    n_samples: int
    p2_cl: float
    rng_seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise InvalidInputError("n_samples must be >= 1")
        if not self.p2_cl >= 0:
            raise InvalidInputError("p2_cl must be non-negative")

    @classmethod
    def from_quantum(cls, l_c: float, p2: float, n_samples: int, rng_seed: int = 0):
        """Match the quantum thermal state: ``p2_cl = p2 sqrt(l_c (l_c + 1) / 2)``."""
        return cls(n_samples, p2 * math.sqrt(l_c * (l_c + 1.0) / 2.0), rng_seed)


def classical_params(phys: PhysicalParams) -> tuple[float, float]:
    """``(P1_cl, P2_cl) = (eps / sqrt(I kT beta), sqrt(kT / (I beta)))``."""
    if phys.kB_T is None or not phys.kB_T > 0:
        raise InvalidInputError("classical parameters need a positive kB_T")
    p1 = phys.epsilon / math.sqrt(phys.inertia * phys.kB_T * phys.beta)
    p2 = math.sqrt(phys.kB_T / (phys.inertia * phys.beta))
    return p1, p2


def _coupling(tau, p1p2, pulse):
    if pulse is None:
        return p1p2
    return p1p2 * pulse.fraction(tau)


def classical_derivatives(state, tau: float, p1p2: float, pulse: DrivePulse | None = None, phi_d=None) -> np.ndarray:
    """Hamilton's equations at ``tau``.

    ``state`` is a :class:`ClassicalState` or ``(theta, phi, pi_theta,
    pi_phi)``. ``p1p2`` is the peak product ``P1 P2``; a pulse scales it by
    its envelope. ``phi_d`` overrides the drive angle ``tau^2 / 4``.
    """
    th, ph, pth, pph = state.as_array() if isinstance(state, ClassicalState) else np.asarray(state, float)
    s, c = math.sin(th), math.cos(th)
    if abs(s) < POLE_EPS:
        raise PoleError("trajectory reached a pole", tau=tau)
    k = _coupling(tau, p1p2, pulse)
    d = ph - (drive_phase(tau) if phi_d is None else phi_d)
    return np.array(
        [
            pth,
            pph / s**2,
            pph**2 * c / s**3 + 2.0 * k * s * c * math.cos(d) ** 2,
            -k * s**2 * math.sin(2.0 * d),
        ]
    )


def classical_energy(state, tau: float, p1p2: float, pulse: DrivePulse | None = None, phi_d=None) -> float:
    th, ph, pth, pph = state.as_array() if isinstance(state, ClassicalState) else np.asarray(state, float)
    s = math.sin(th)
    k = _coupling(tau, p1p2, pulse)
    d = ph - (drive_phase(tau) if phi_d is None else phi_d)
    return 0.5 * pth**2 + 0.5 * pph**2 / s**2 - k * s**2 * math.cos(d) ** 2


def sample_thermal_arrays(spec: ClassicalEnsembleSpec, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Samples ``start..stop`` of the ensemble as an array of shape ``(4, n)``.

    Sample ``i`` draws from its own stream spawned from ``rng_seed``, so any
    slice reproduces the same values as the full ensemble.
    """
    stop = spec.n_samples if stop is None else stop
    children = np.random.SeedSequence(spec.rng_seed).spawn(spec.n_samples)[start:stop]
    out = np.empty((4, len(children)))
    for k, child in enumerate(children):
        rng = np.random.Generator(np.random.PCG64(child))
        u, v = rng.random(2)
        g1, g2 = rng.standard_normal(2)
        th = math.acos(1.0 - 2.0 * u)
        th = min(max(th, 1e-6), math.pi - 1e-6)
        out[:, k] = th, 2.0 * math.pi * v, spec.p2_cl * g1, spec.p2_cl * math.sin(th) * g2
    return out


def sample_thermal_classical(spec: ClassicalEnsembleSpec) -> list[ClassicalState]:
    """Canonical samples: ``cos theta`` and ``phi`` uniform, Gaussian momenta."""
    arr = sample_thermal_arrays(spec)
    return [ClassicalState(*arr[:, k]) for k in range(arr.shape[1])]


def _kernel_args(p1: float, p2: float, pulse: DrivePulse | None):
    pulse = DrivePulse.constant(p1) if pulse is None else pulse
    kind, peak, sigma, trunc = pulse.kernel_args()
    return (kind, peak, sigma, trunc, float(p2))


def integrate_classical(state, times, p1: float, p2: float, pulse: DrivePulse | None = None, rtol=1e-10, atol=1e-12):
    """Trajectory of one rotor sampled at ``times``; returns shape ``(len(times), 4)``.

    The drive amplitude is ``p1`` (or ``pulse``) and the coupling ``P1(tau) p2``.
    """
    y0 = (state.as_array() if isinstance(state, ClassicalState) else np.asarray(state, float)).reshape(4, 1)
    times = np.asarray(times, dtype=float)
    out, status, t_end, _, _ = _kernels.integrate_rotor(
        np.ascontiguousarray(y0), float(times[0]), times, _kernel_args(p1, p2, pulse), rtol, atol, math.inf, 1e-3, 10**8, math.pi
    )
    if status != 0:
        raise IntegrationError("classical trajectory failed", tau=t_end)
    return out[:, :, 0]


@dataclass
class MCResult:
    """Outcome of a classical Monte Carlo run.

    ``L0, Lz0`` and ``L, Lz`` are initial and final angular momenta of the
    successful samples; ``failed`` lists the indices of failed samples.
    """

    efficiency: float
    stderr: float
    n_samples: int
    failed: np.ndarray
    L0: np.ndarray
    Lz0: np.ndarray
    L: np.ndarray
    Lz: np.ndarray
    L_target: float

    @property
    def captured(self) -> np.ndarray:
        return self.L >= CAPTURE_FRACTION * self.L_target


def _angular_momentum(states):
    s = np.sin(states[0])
    return np.sqrt(states[2] ** 2 + (states[3] / s) ** 2), states[3].copy()


def _mc_chunk(job):
    spec, start, stop, args, tau_f, rtol, atol = job
    states = sample_thermal_arrays(spec, start, stop)
    final, status = _kernels.rotor_ensemble(
        np.ascontiguousarray(states), tau_f, args, rtol, atol, math.inf, 1e-3, 10**7, math.pi
    )
    return states, final, status


def mc_efficiency(
    spec: ClassicalEnsembleSpec,
    p1: float,
    p2: float,
    pulse: DrivePulse | None,
    tau_f: float,
    rtol: float = 1e-8,
    atol: float = 1e-10,
    workers: int = 1,
    chunk: int = 2000,
) -> MCResult:
    """Fraction of rotors with final ``L >= 0.8 tau_f / 2``, with binomial error.

    Failed trajectories are excluded; more than 0.1% failures is an error.
    """
    if spec.n_samples < 100:
        raise InvalidInputError("mc_efficiency needs at least 100 samples")
    if not tau_f > 0:
        raise InvalidInputError("tau_f must be positive")
    args = _kernel_args(p1, p2, pulse)
    jobs = [
        (spec, a, min(a + chunk, spec.n_samples), args, float(tau_f), rtol, atol)
        for a in range(0, spec.n_samples, chunk)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_mc_chunk, jobs))
    else:
        parts = [_mc_chunk(job) for job in jobs]
    init = np.concatenate([p[0] for p in parts], axis=1)
    final = np.concatenate([p[1] for p in parts], axis=1)
    status = np.concatenate([p[2] for p in parts])
    bad = (status != 0) | ~np.all(np.isfinite(final), axis=0)
    failed = np.flatnonzero(bad)
    if failed.size > MAX_FAILED_FRACTION * spec.n_samples:
        raise IntegrationError(f"{failed.size} of {spec.n_samples} classical trajectories failed")
    ok = ~bad
    L0, Lz0 = _angular_momentum(init[:, ok])
    L, Lz = _angular_momentum(final[:, ok])
    L_target = tau_f / 2.0
    n = int(ok.sum())
    f = float(np.count_nonzero(L >= CAPTURE_FRACTION * L_target) / n)
    return MCResult(f, math.sqrt(f * (1.0 - f) / n), n, failed, L0, Lz0, L, Lz, L_target)
