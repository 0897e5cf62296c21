"""Time evolution of rotor amplitudes under the chirped drive.

Three models are provided: the full lab-frame problem with all nine
couplings per state, the rotating-wave chain that keeps only the
``C = l - m`` conserving couplings, and an isolated two-level crossing.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .basis import BasisMap, StateVector, build_basis, build_chain
from .coupling import CouplingTable, b_coefficient, build_coupling
from .errors import IntegrationError, InvalidInputError
from .params import DimensionlessParams, DrivePulse, resolve_pulse

METHODS = _kernels.METHODS + ("magnus4", "auto")

__all__ = [
    "EvolveConfig",
    "Trajectory",
    "crossing_time",
    "evolve_full",
    "evolve_rwa_chain",
    "two_level_lz",
    "propagate",
    "default_l_max",
    "magnus_step",
    "METHODS",
]


@dataclass(frozen=True)
class EvolveConfig:
    """Integrator settings.

    ``include_c0_shift=None`` picks the model default: on for the full
    problem, off for rotating-wave chains.

    ``method`` names an embedded Runge-Kutta pair (``"dop853"``, ``"dopri5"``)
    or ``"magnus4"``, a fixed-step exponential integrator in the frame
    rotating with the drive. Its cost grows as the cube of the basis size, so
    it suits rotating-wave chains; ``"auto"`` uses it there and ``"dop853"``
    for the full problem. For Runge-Kutta ``max_step`` caps the adaptive
    step; for Magnus it is the step itself, defaulting to
    :func:`magnus_step`.
    """

    rel_tol: float = 1e-9
    abs_tol: float = 1e-11
    max_step: float | None = None
    snapshot_every: float | None = None
    include_c0_shift: bool | None = None
    store_states: bool = False
    max_steps: int = 500_000_000
    method: str = "auto"

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidInputError(f"method must be one of {METHODS}, got {self.method!r}")
        if not (self.rel_tol > 0 and self.abs_tol > 0):
            raise InvalidInputError("tolerances must be positive")
        if self.max_step is not None and not self.max_step > 0:
            raise InvalidInputError("max_step must be positive")
        if self.snapshot_every is not None and not self.snapshot_every > 0:
            raise InvalidInputError("snapshot_every must be positive")

    def tightened(self, factor=10.0) -> EvolveConfig:
        return EvolveConfig(
            self.rel_tol / factor,
            self.abs_tol / factor,
            self.max_step,
            self.snapshot_every,
            self.include_c0_shift,
            self.store_states,
            self.max_steps,
            self.method,
        )


@dataclass
class Trajectory:
    """Per-``l`` populations at the snapshot times plus the final state."""

    times: np.ndarray
    populations: np.ndarray
    final_state: StateVector
    norm_drift: float
    n_steps: int = 0
    states: list = field(default_factory=list)

    @property
    def final_populations(self) -> np.ndarray:
        return self.populations[-1]

    def to_csv(self, path) -> None:
        """Long-format table with columns ``tau, l, P``."""
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["tau", "l", "P"])
            for tau, dist in zip(self.times, self.populations):
                for l, p in enumerate(dist):
                    writer.writerow([repr(float(tau)), l, repr(float(p))])

    def to_ndjson(self, path) -> None:
        """One JSON object per stored snapshot with the full ``(l, m)`` grid."""
        if not self.states:
            raise InvalidInputError("no stored states; evolve with store_states=True")
        basis = self.final_state.basis
        with open(path, "w") as fh:
            for tau, amps in zip(self.times, self.states):
                record = {
                    "tau": float(tau),
                    "l": basis.l.tolist(),
                    "m": basis.m.tolist(),
                    "P": (np.abs(amps) ** 2).tolist(),
                }
                fh.write(json.dumps(record) + "\n")


def crossing_time(l: int, p2: float) -> float:
    """Time at which the drive is resonant with ``l - 2 -> l``, ``p2 (2 l - 1)``."""
    if l < 2:
        raise InvalidInputError("crossing_time needs l >= 2")
    return p2 * (2 * l - 1)


def default_l_max(l_f: float) -> int:
    return int(math.ceil(1.5 * l_f))


def magnus_step(p1: float, p2: float, rel_tol: float = 1e-9) -> float:
    """Default Magnus step: ``0.5 / max(P1, P2, 10)`` at ``rel_tol = 1e-9``.

    The local error is fifth order, so the step scales as ``rel_tol**(1/4)``.
    """
    return 0.5 / max(p1, p2, 10.0) * (rel_tol / 1e-9) ** 0.25


def _step_edges(times, h, breaks):
    edges = [times[:1]]
    for a, b in zip(times[:-1], times[1:]):
        cuts = sorted({a, b, *(t for t in breaks if a < t < b)})
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            edges.append(np.linspace(lo, hi, max(1, math.ceil((hi - lo) / h)) + 1)[1:])
    return np.concatenate(edges)


def _propagate_magnus(coupling, p2, pulse, a0, times, cfg):
    basis = coupling.basis
    m = basis.m.astype(float)
    kind, peak, sigma, trunc = pulse.kernel_args()
    h = cfg.max_step or magnus_step(peak, p2, cfg.rel_tol)
    cmat = coupling.matrix.toarray()
    diag0 = basis.energies(p2)
    slope = -0.5 * m
    # rotating frame: c = a exp(i m phi_d)
    c = a0 * np.exp(1j * m * times[0] ** 2 / 4.0)[:, None]
    out = np.empty((len(times),) + a0.shape, dtype=np.complex128)
    out[0] = a0
    n_steps = 0
    for i in range(1, len(times)):
        edges = _step_edges(times[i - 1 : i + 1], h, [trunc])
        n_steps += len(edges) - 1
        if n_steps > cfg.max_steps:
            raise IntegrationError("integration failed: step budget exhausted", tau=times[i - 1])
        c = _kernels.magnus4(c, edges, diag0, slope, cmat, kind, peak, sigma, trunc)
        out[i] = c * np.exp(-1j * m * times[i] ** 2 / 4.0)[:, None]
    return out, n_steps


def _snapshot_times(tau0, tau_f, every):
    if every is None:
        return np.array([tau0, tau_f], dtype=float)
    times = np.arange(tau0, tau_f, every, dtype=float)
    if times[-1] < tau_f:
        times = np.append(times, tau_f)
    return times


def propagate(
    coupling: CouplingTable,
    p2: float,
    pulse: DrivePulse,
    a0: np.ndarray,
    times,
    cfg: EvolveConfig,
    phase_cap: float = math.pi,
    method: str | None = None,
):
    """Integrate lab-frame amplitudes ``a0[n, k]`` through ``times``.

    Returns lab-frame amplitudes with shape ``(len(times), n, k)`` and the
    number of accepted steps. ``times[0]`` is the initial time. Steps are
    capped at ``phase_cap / |tau|`` (half a drive period by default) so that
    the ``exp(i dm phi_d)`` factors stay resolved; chains without those
    factors pass 0 to rely on error control alone. ``method`` overrides
    ``cfg.method``; ``"auto"`` resolves to ``"dop853"`` here.
    """
    basis = coupling.basis
    mat = coupling.matrix
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) <= 0):
        raise InvalidInputError("snapshot times must be strictly increasing")
    a0 = np.ascontiguousarray(a0, dtype=np.complex128)
    if a0.ndim == 1:
        a0 = a0[:, None]
    method = cfg.method if method is None else method
    if method == "magnus4":
        return _propagate_magnus(coupling, p2, pulse, a0, times, cfg)
    if method == "auto":
        method = "dop853"
    energy = basis.energies(p2)
    lu, l_slot = np.unique(basis.l, return_inverse=True)
    mu, m_slot = np.unique(basis.m, return_inverse=True)
    n, k = a0.shape
    kind, peak, sigma, trunc = pulse.kernel_args()
    args = (
        mat.indptr.astype(np.int64),
        mat.indices.astype(np.int64),
        mat.data.astype(np.float64),
        l_slot.astype(np.int64),
        m_slot.astype(np.int64),
        p2 * lu * (lu + 1) / 2.0,
        mu / 4.0,
        kind,
        peak,
        sigma,
        trunc,
        np.empty(len(lu), np.complex128),
        np.empty(len(mu), np.complex128),
        np.empty(n, np.complex128),
        np.empty((n, k), np.complex128),
    )
    tau0 = times[0]
    h_max = math.inf if cfg.max_step is None else cfg.max_step
    b0 = a0 * np.exp(1j * energy * tau0)[:, None]
    out, status, t_end, n_acc, _ = _kernels.SCHRODINGER_DRIVERS[method](
        b0, tau0, times, args, cfg.rel_tol, cfg.abs_tol, h_max, min(h_max, 1e-2), cfg.max_steps, phase_cap
    )
    if status != 0:
        reason = "step size underflow" if status == 1 else "step budget exhausted"
        raise IntegrationError(f"integration failed: {reason}", tau=t_end)
    out *= np.exp(-1j * np.outer(times, energy))[:, :, None]
    return out, n_acc


def _trajectory(basis, times, amps, n_steps, frame, store):
    probs = np.abs(amps) ** 2
    pops = np.stack([np.bincount(basis.l, weights=p, minlength=basis.l_max + 1) for p in probs])
    norms = probs.sum(axis=1)
    final = amps[-1]
    if frame == "rotating":
        final = final * np.exp(1j * basis.l * times[-1] ** 2 / 4.0)
    states = [a.copy() for a in amps] if store else []
    return Trajectory(
        times=times,
        populations=pops,
        final_state=StateVector(basis, final, frame),
        norm_drift=float(np.max(np.abs(norms - norms[0]))),
        n_steps=n_steps,
        states=states,
    )


def evolve_full(
    psi0: StateVector,
    basis: BasisMap | None,
    params: DimensionlessParams,
    pulse: DrivePulse | None,
    tau_f: float,
    cfg: EvolveConfig | None = None,
) -> Trajectory:
    """Integrate the lab-frame problem with all couplings internal to ``basis``.

    The initial state must be normalized and given in the lab frame.
    """
    cfg = cfg or EvolveConfig()
    basis = psi0.basis if basis is None else basis
    if psi0.basis is not basis:
        raise InvalidInputError("psi0 must be defined on the evolution basis")
    if psi0.frame != "lab":
        raise InvalidInputError("psi0 must be given in the lab frame")
    if not tau_f > 0:
        raise InvalidInputError("tau_f must be positive")
    if abs(psi0.norm2 - 1.0) > 1e-8:
        raise InvalidInputError(f"psi0 is not normalized (|psi|^2 = {psi0.norm2})")
    pulse = resolve_pulse(params, pulse)
    include_c0 = True if cfg.include_c0_shift is None else cfg.include_c0_shift
    coupling = build_coupling(basis, include_diagonal=include_c0)
    times = _snapshot_times(0.0, tau_f, cfg.snapshot_every)
    amps, n_steps = propagate(coupling, params.p2, pulse, psi0.amplitudes, times, cfg)
    return _trajectory(basis, times, amps[:, :, 0], n_steps, "lab", cfg.store_states)


def _chain_method(cfg):
    return "magnus4" if cfg.method == "auto" else cfg.method


def evolve_rwa_chain(
    w0: StateVector,
    C: int,
    parity,
    params: DimensionlessParams,
    pulse: DrivePulse | None,
    tau_f: float,
    cfg: EvolveConfig | None = None,
) -> Trajectory:
    """Integrate the rotating-wave chain of fixed ``C`` and ``l`` parity.

    ``w0`` may live on any basis but must be supported on the chain; the
    returned final state is on the chain basis, in the rotating frame.
    """
    cfg = cfg or EvolveConfig()
    if not tau_f > 0:
        raise InvalidInputError("tau_f must be positive")
    src = w0.basis
    chain = build_chain(C, src.l_max, parity)
    on_chain = np.array([(l, m) in chain for l, m in src.states()])
    if np.any(np.abs(w0.amplitudes[~on_chain]) > 0):
        raise InvalidInputError(f"initial state has support off the chain C={C}, parity={parity}")
    a0 = np.zeros(chain.size, dtype=np.complex128)
    for i in np.flatnonzero(on_chain):
        a0[chain.index(*src.state(i))] = w0.amplitudes[i]
    # rotating and lab frames coincide at tau = 0
    pulse = resolve_pulse(params, pulse)
    include_c0 = False if cfg.include_c0_shift is None else cfg.include_c0_shift
    coupling = build_coupling(chain, resonant_only=True, include_diagonal=include_c0)
    times = _snapshot_times(0.0, tau_f, cfg.snapshot_every)
    amps, n_steps = propagate(coupling, params.p2, pulse, a0, times, cfg, phase_cap=0.0, method=_chain_method(cfg))
    return _trajectory(chain, times, amps[:, :, 0], n_steps, "rotating", cfg.store_states)


def default_lz_window(l: int, params: DimensionlessParams, c: int = 0) -> float:
    return 200.0 * (1.0 + params.p1 * abs(b_coefficient(l, l - c)))


def two_level_lz(
    l: int,
    params: DimensionlessParams,
    window: float | None = None,
    cfg: EvolveConfig | None = None,
    c: int = 0,
) -> float:
    """Population transferred across the isolated crossing ``l - 2 -> l``.

    The pair is started fully in ``l - 2`` at ``crossing_time - window`` and
    integrated to ``crossing_time + window``; ``c`` selects the chain.
    """
    cfg = cfg or EvolveConfig()
    if l < 2:
        raise InvalidInputError("two-level crossing needs l >= 2")
    if window is None:
        window = default_lz_window(l, params, c)
    if not window > 0:
        raise InvalidInputError("window must be positive")
    parity = l % 2
    pair = build_basis(l, c, parity, (parity - c) % 2, c_min=c, l_min=l - 2)
    if pair.size != 2:
        raise InvalidInputError(f"no two-level pair for l={l}, C={c}")
    coupling = build_coupling(pair, resonant_only=True, include_diagonal=False)
    tau_l = crossing_time(l, params.p2)
    a0 = np.array([1.0, 0.0], dtype=np.complex128)
    times = np.array([tau_l - window, tau_l + window])
    amps, _ = propagate(coupling, params.p2, DrivePulse.constant(params.p1), a0, times, cfg, phase_cap=0.0)
    return float(abs(amps[-1, 1, 0]) ** 2)
