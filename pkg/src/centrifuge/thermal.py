"""Thermal initial conditions evolved as weighted ensembles of pure states.

A thermal state of the free rotor is diagonal in ``|l, m>``, so under
unitary evolution its populations equal the weighted sum of the populations
reached from each ``|l0, m0>`` separately. Members sharing a chain (rotating
wave) or a parity sector (full problem) are integrated together as columns
of one batch.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .analysis import TARGET_FRACTION, target_l
from .basis import build_basis, build_chain
from .coupling import build_coupling
from .errors import IntegrationError, InvalidInputError
from .evolve import EvolveConfig, _chain_method, _snapshot_times, default_l_max, propagate
from .params import DimensionlessParams, DrivePulse, resolve_pulse

__all__ = [
    "ThermalSpec",
    "EnsembleResult",
    "thermal_weights",
    "retained_weight",
    "evolve_thermal",
    "von_neumann_check",
    "default_c_buffer",
    "VN_MAX_L",
]

VN_MAX_L = 12


def default_c_buffer(p1: float, p2: float) -> int:
    """C-range padding for full-problem batches, ``max(12, 2 ceil(sqrt(p1/p2)) + 8)``.

    Strong drives at small ``p2`` spread population over many ``C = l - m``
    values before the ladder starts; the width grows like ``sqrt(p1/p2)``.
    """
    return max(12, 2 * math.ceil(math.sqrt(p1 / p2)) + 8)


@dataclass(frozen=True)
class ThermalSpec:
    """Boltzmann ensemble of rotor states at characteristic level ``l_c``.

    States whose Boltzmann factor relative to the ground state falls below
    ``weight_cutoff`` are dropped, as are levels above ``l0_max`` when given.
    """

    l_c: float
    weight_cutoff: float = 1e-4
    l0_max: int | None = None

    def __post_init__(self):
        if not self.l_c >= 0:
            raise InvalidInputError("l_c must be non-negative")
        if not 0 < self.weight_cutoff < 1:
            raise InvalidInputError("weight_cutoff must be in (0, 1)")
        if self.l0_max is not None and self.l0_max < 0:
            raise InvalidInputError("l0_max must be non-negative")


def _boltzmann(l, l_c):
    return np.exp(-l * (l + 1.0) / (l_c * (l_c + 1.0)))


def _max_level(spec: ThermalSpec) -> int:
    if spec.l_c == 0:
        return 0
    # largest l with factor >= cutoff
    x = spec.l_c * (spec.l_c + 1.0) * -math.log(spec.weight_cutoff)
    top = int(math.floor((-1.0 + math.sqrt(1.0 + 4.0 * x)) / 2.0))
    if spec.l0_max is not None:
        top = min(top, spec.l0_max)
    return top


def retained_weight(spec: ThermalSpec) -> float:
    """Fraction of the untruncated Boltzmann weight kept by ``spec``."""
    if spec.l_c == 0:
        return 1.0
    top = _max_level(spec)
    l = np.arange(0, top + 200 + int(20 * spec.l_c))
    shell = (2 * l + 1) * _boltzmann(l, spec.l_c)
    return float(shell[: top + 1].sum() / shell.sum())


def thermal_weights(spec: ThermalSpec) -> list[tuple[tuple[int, int], float]]:
    """Normalized per-state weights ``((l0, m0), w)`` ordered by ``l0`` then ``m0``.

    Weights are equal within an ``l0`` shell and proportional to
    ``exp(-l0 (l0 + 1) / (l_c (l_c + 1)))``.
    """
    if spec.l_c == 0:
        return [((0, 0), 1.0)]
    top = _max_level(spec)
    l = np.arange(top + 1)
    factor = _boltzmann(l, spec.l_c)
    z = float(((2 * l + 1) * factor).sum())
    out = []
    for l0 in range(top + 1):
        w = float(factor[l0] / z)
        out.extend(((l0, m0), w) for m0 in range(-l0, l0 + 1))
    return out


@dataclass
class EnsembleResult:
    """Weighted populations of a thermal ensemble.

    ``populations[i]`` is the weighted ``P(l)`` at ``times[i]``;
    ``member_populations[k]`` the final ``P(l)`` of member ``k``.
    """

    members: list
    times: np.ndarray
    populations: np.ndarray
    member_populations: np.ndarray
    l_f: float
    retained_weight: float
    norm_drift: float
    n_steps: int = 0
    model: str = "rwa"
    extras: dict = field(default_factory=dict)

    @property
    def distribution(self) -> np.ndarray:
        return self.populations[-1]

    @property
    def member_efficiency(self) -> np.ndarray:
        l = np.arange(self.member_populations.shape[1])
        return self.member_populations[:, l >= TARGET_FRACTION * self.l_f - 1e-9].sum(axis=1)

    @property
    def efficiency(self) -> float:
        l = np.arange(self.distribution.size)
        return float(self.distribution[l >= TARGET_FRACTION * self.l_f - 1e-9].sum())

    def parity_populations(self) -> tuple[np.ndarray, np.ndarray]:
        """Final ``P(l)`` split into even-``l`` and odd-``l`` parts."""
        d = self.distribution
        even = d.copy()
        even[1::2] = 0.0
        return even, d - even

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["l", "P"])
            for l, p in enumerate(self.distribution):
                writer.writerow([l, repr(float(p))])

    def to_ndjson(self, path) -> None:
        with open(path, "w") as fh:
            for (l0, m0, w), eff in zip(self.members, self.member_efficiency):
                fh.write(json.dumps({"l0": l0, "m0": m0, "weight": w, "efficiency": float(eff)}) + "\n")


def _groups_rwa(members):
    groups = {}
    for k, (l0, m0, _) in enumerate(members):
        groups.setdefault((l0 - m0, l0 % 2), []).append(k)
    return [("rwa", key, idx) for key, idx in sorted(groups.items())]


def _groups_full(members, batch_size):
    sectors = {}
    for k, (l0, m0, _) in enumerate(members):
        sectors.setdefault((l0 % 2, m0 % 2), []).append(k)
    out = []
    for key, idx in sorted(sectors.items()):
        idx = sorted(idx, key=lambda k: (members[k][0] - members[k][1], k))
        for start in range(0, len(idx), batch_size):
            out.append(("full", key, idx[start : start + batch_size]))
    return out


def _solver(kind, cfg):
    if kind == "rwa":
        return {"phase_cap": 0.0, "method": _chain_method(cfg)}
    return {"phase_cap": math.pi}


def _run_group(job):
    kind, key, members, params, pulse, times, cfg, l_max, c_buffer = job
    if kind == "rwa":
        c, pl = key
        basis = build_chain(c, l_max, pl)
        include_c0 = False if cfg.include_c0_shift is None else cfg.include_c0_shift
        coupling = build_coupling(basis, resonant_only=True, include_diagonal=include_c0)
    else:
        pl, pm = key
        cs = [l0 - m0 for l0, m0 in members]
        c_top = min(max(cs) + c_buffer, 2 * l_max)
        c_low = max(min(cs) - c_buffer, 0)
        basis = build_basis(l_max, c_top, pl, pm, c_min=c_low)
        include_c0 = True if cfg.include_c0_shift is None else cfg.include_c0_shift
        coupling = build_coupling(basis, include_diagonal=include_c0)
    a0 = np.zeros((basis.size, len(members)), dtype=np.complex128)
    for k, (l0, m0) in enumerate(members):
        a0[basis.index(l0, m0), k] = 1.0
    try:
        amps, n_steps = propagate(coupling, params.p2, pulse, a0, times, cfg, **_solver(kind, cfg))
    except IntegrationError as exc:
        raise IntegrationError(f"{exc.args[0]} (members {members})", tau=exc.tau, member=members) from None
    probs = np.abs(amps) ** 2
    pops = np.zeros((len(times), len(members), l_max + 1))
    for t in range(len(times)):
        for k in range(len(members)):
            pops[t, k] = np.bincount(basis.l, weights=probs[t, :, k], minlength=l_max + 1)
    norms = probs.sum(axis=1)
    drift = float(np.max(np.abs(norms - norms[0])))
    return pops, drift, n_steps


def evolve_thermal(
    spec: ThermalSpec,
    params: DimensionlessParams,
    pulse: DrivePulse | None,
    tau_f: float,
    cfg: EvolveConfig | None = None,
    use_rwa: bool = True,
    l_max: int | None = None,
    c_buffer: int | None = None,
    batch_size: int = 16,
    workers: int = 1,
) -> EnsembleResult:
    """Evolve every ensemble member and combine the populations by weight.

    With ``use_rwa`` each member runs on its own chain ``C = l0 - m0``.
    Otherwise members run in the full problem on their parity sector, in
    batches whose basis spans the batch's ``C = l0 - m0`` range widened by
    ``c_buffer`` on both sides (default :func:`default_c_buffer` at the
    peak drive). ``workers > 1`` distributes
    batches over processes; the reduction order is fixed either way.
    """
    cfg = cfg or EvolveConfig()
    if not tau_f > 0:
        raise InvalidInputError("tau_f must be positive")
    pulse = resolve_pulse(params, pulse)
    if c_buffer is None:
        c_buffer = default_c_buffer(pulse.kernel_args()[1], params.p2)
    if batch_size < 1 or workers < 1 or c_buffer < 0:
        raise InvalidInputError("batch_size and workers must be >= 1, c_buffer >= 0")
    weighted = thermal_weights(spec)
    members = [(l0, m0, w) for (l0, m0), w in weighted]
    l_f = target_l(tau_f, params.p2)
    top = max(l0 for l0, _, _ in members)
    if l_max is None:
        l_max = max(default_l_max(l_f), top + 4)
    if top > l_max:
        raise InvalidInputError(f"ensemble reaches l0={top} above l_max={l_max}")
    times = _snapshot_times(0.0, tau_f, cfg.snapshot_every)
    groups = _groups_rwa(members) if use_rwa else _groups_full(members, batch_size)
    jobs = [
        (kind, key, [members[k][:2] for k in idx], params, pulse, times, cfg, l_max, c_buffer)
        for kind, key, idx in groups
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_group, jobs))
    else:
        results = [_run_group(job) for job in jobs]

    weights = np.array([w for _, _, w in members])
    member_pops = np.zeros((len(members), l_max + 1))
    populations = np.zeros((len(times), l_max + 1))
    drift, steps = 0.0, 0
    for (_, _, idx), (pops, d, n) in zip(groups, results):
        member_pops[idx] = pops[-1]
        populations += np.einsum("k,tkl->tl", weights[idx], pops)
        drift = max(drift, d)
        steps += n
    return EnsembleResult(
        members=members,
        times=times,
        populations=populations,
        member_populations=member_pops,
        l_f=l_f,
        retained_weight=retained_weight(spec),
        norm_drift=drift,
        n_steps=steps,
        model="rwa" if use_rwa else "full",
        extras={} if use_rwa else {"c_buffer": c_buffer},
    )


def _vn_sector(basis, weights, params, pulse, tau_f, rtol, atol):
    n = basis.size
    coupling = build_coupling(basis).matrix.toarray()
    energy = basis.energies(params.p2)
    dm = (basis.m[None, :] - basis.m[:, None]).astype(float)
    rho0 = np.diag(weights).astype(np.complex128)

    def rhs(tau, y):
        rho = y.reshape(n, n)
        h = pulse.amplitude(tau) * coupling * np.exp(1j * dm * tau * tau / 4.0)
        h[np.diag_indices(n)] += energy
        return (-1j * (h @ rho - rho @ h)).ravel()

    sol = solve_ivp(rhs, (0.0, tau_f), rho0.ravel(), method="DOP853", rtol=rtol, atol=atol)
    if not sol.success:
        raise IntegrationError(f"von Neumann integration failed: {sol.message}", tau=float(sol.t[-1]))
    rho = sol.y[:, -1].reshape(n, n)
    return np.bincount(basis.l, weights=np.real(np.diag(rho)), minlength=basis.l_max + 1)


def von_neumann_check(
    spec: ThermalSpec,
    params: DimensionlessParams,
    pulse: DrivePulse | None,
    tau_f: float,
    l_max: int = VN_MAX_L,
    rtol: float = 1e-12,
    atol: float = 1e-14,
) -> float:
    """Largest ``|P_vn(l) - P_ensemble(l)|`` on a complete small basis.

    The density matrix is integrated directly in the lab frame with dense
    matrices; the ensemble runs the full problem on the same basis.
    """
    if l_max > VN_MAX_L:
        raise InvalidInputError(f"von Neumann check limited to l_max <= {VN_MAX_L}, got {l_max}")
    pulse = resolve_pulse(params, pulse)
    weighted = thermal_weights(spec)
    if max(l0 for (l0, _), _ in weighted) > l_max:
        raise InvalidInputError("thermal ensemble does not fit in the check basis; lower l_c or l0_max")
    p_vn = np.zeros(l_max + 1)
    for pl in (0, 1):
        for pm in (0, 1):
            sector = [((l0, m0), w) for (l0, m0), w in weighted if l0 % 2 == pl and m0 % 2 == pm]
            if not sector:
                continue
            basis = build_basis(l_max, 2 * l_max, pl, pm)
            w = np.zeros(basis.size)
            for (l0, m0), wt in sector:
                w[basis.index(l0, m0)] = wt
            p_vn += _vn_sector(basis, w, params, pulse, tau_f, rtol, atol)
    cfg = EvolveConfig(rel_tol=rtol, abs_tol=atol)
    ens = evolve_thermal(spec, params, pulse, tau_f, cfg, use_rwa=False, l_max=l_max, c_buffer=2 * l_max)
    return float(np.max(np.abs(p_vn - ens.distribution)))
