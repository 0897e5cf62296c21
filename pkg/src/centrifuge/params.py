"""Physical and dimensionless parameters, molecule data and the drive pulse.

Dimensionless time is ``tau = sqrt(beta) * t``. The drive polarization angle
advances with a linear frequency chirp starting from zero frequency, so its
phase is ``tau**2 / 4`` in these units.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "PhysicalParams",
    "DimensionlessParams",
    "DrivePulse",
    "derive_params",
    "thermal_lc",
    "drive_phase",
    "load_molecules",
    "molecule_inertia",
]


@dataclass(frozen=True)
class PhysicalParams:
    """Physical parameters of a driven rigid rotor in any consistent unit system.

    ``epsilon`` is the drive coupling energy, ``beta`` the chirp rate
    (1/time^2), ``inertia`` the moment of inertia. When the polarizabilities
    and field amplitude are all given they must reproduce ``epsilon``.
    """

    epsilon: float
    beta: float
    inertia: float
    hbar: float
    kB_T: float | None = None
    alpha_par: float | None = None
    alpha_perp: float | None = None
    E0: float | None = None

    def __post_init__(self):
        for name in ("beta", "inertia", "hbar"):
            if not getattr(self, name) > 0:
                raise InvalidInputError(f"{name} must be positive, got {getattr(self, name)!r}")
        if self.kB_T is not None and self.kB_T < 0:
            raise InvalidInputError("kB_T must be non-negative")
        optics = (self.alpha_par, self.alpha_perp, self.E0)
        if all(v is not None for v in optics):
            expected = (self.alpha_par - self.alpha_perp) * self.E0**2 / 4
            if not math.isclose(self.epsilon, expected, rel_tol=1e-12, abs_tol=0.0):
                raise InvalidInputError(
                    f"epsilon={self.epsilon!r} inconsistent with (alpha_par - alpha_perp) E0^2 / 4 = {expected!r}"
                )

    @classmethod
    def from_polarizability(cls, alpha_par, alpha_perp, E0, beta, inertia, hbar, kB_T=None):
        epsilon = (alpha_par - alpha_perp) * E0**2 / 4
        return cls(epsilon, beta, inertia, hbar, kB_T, alpha_par, alpha_perp, E0)


@dataclass(frozen=True)
class DimensionlessParams:
    """Drive strength ``p1`` and nonlinearity ``p2``."""

    p1: float
    p2: float

    def __post_init__(self):
        if not self.p1 >= 0:
            raise InvalidInputError(f"p1 must be >= 0, got {self.p1!r}")
        if not self.p2 > 0:
            raise InvalidInputError(f"p2 must be > 0, got {self.p2!r}")


def derive_params(phys: PhysicalParams) -> DimensionlessParams:
    """Return ``p1 = eps / (hbar sqrt(beta))`` and ``p2 = hbar / (I sqrt(beta))``."""
    if not (phys.beta > 0 and phys.inertia > 0 and phys.hbar > 0):
        raise InvalidInputError("beta, inertia and hbar must be positive")
    sb = math.sqrt(phys.beta)
    return DimensionlessParams(p1=phys.epsilon / (phys.hbar * sb), p2=phys.hbar / (phys.inertia * sb))


def thermal_lc(kB_T: float, inertia: float, hbar: float) -> float:
    """Characteristic thermal quantum number.

    Non-negative root of ``kB_T = hbar**2 * l_c * (l_c + 1) / (2 * inertia)``.
    """
    if kB_T < 0:
        raise InvalidInputError("temperature must be non-negative")
    if not (inertia > 0 and hbar > 0):
        raise InvalidInputError("inertia and hbar must be positive")
    q = 2.0 * inertia * kB_T / hbar**2
    # stable root of x^2 + x - q = 0
    return 2.0 * q / (1.0 + math.sqrt(1.0 + 4.0 * q))


def drive_phase(tau):
    """Polarization angle of the drive, ``tau**2 / 4``; works on arrays."""
    return np.asarray(tau) ** 2 / 4.0 if np.ndim(tau) else tau * tau / 4.0


_ENVELOPES = ("constant", "gaussian")


@dataclass(frozen=True)
class DrivePulse:
    """Envelope of the dimensionless drive amplitude P1(tau).

    ``constant`` uses ``p1`` throughout; ``gaussian`` uses
    ``p10 * exp(-tau**2 / (2 sigma**2))`` peaked at tau = 0. If
    ``truncation_tau`` is set the amplitude is zero for ``tau > truncation_tau``.
    """

    envelope: str = "constant"
    p1: float | None = None
    p10: float | None = None
    sigma: float | None = None
    truncation_tau: float | None = None

    def __post_init__(self):
        if self.envelope not in _ENVELOPES:
            raise InvalidInputError(f"unknown envelope {self.envelope!r}")
        if self.envelope == "constant":
            if self.p1 is None or self.p1 < 0:
                raise InvalidInputError("constant envelope needs p1 >= 0")
        else:
            if self.p10 is None or not self.p10 > 0:
                raise InvalidInputError("gaussian envelope needs p10 > 0")
            if self.sigma is None or not self.sigma > 0:
                raise InvalidInputError("gaussian envelope needs sigma > 0")

    @classmethod
    def constant(cls, p1, truncation_tau=None):
        return cls("constant", p1=p1, truncation_tau=truncation_tau)

    @classmethod
    def gaussian(cls, p10, sigma, truncation_tau=None):
        return cls("gaussian", p10=p10, sigma=sigma, truncation_tau=truncation_tau)

    @property
    def peak(self) -> float:
        return self.p1 if self.envelope == "constant" else self.p10

    def amplitude(self, tau):
        tau = np.asarray(tau, dtype=float)
        if self.envelope == "constant":
            amp = np.full_like(tau, self.p1)
        else:
            amp = self.p10 * np.exp(-(tau**2) / (2 * self.sigma**2))
        if self.truncation_tau is not None:
            amp = np.where(tau > self.truncation_tau, 0.0, amp)
        return amp if amp.ndim else float(amp)

    def fraction(self, tau):
        """Amplitude relative to the peak value (1 for a constant envelope)."""
        peak = self.peak
        return self.amplitude(tau) / peak if peak else 0.0 * np.asarray(tau, dtype=float)

    def kernel_args(self):
        """Flat tuple ``(kind, peak, sigma, truncation)`` consumed by the compiled kernels."""
        kind = 0 if self.envelope == "constant" else 1
        sigma = self.sigma if self.sigma is not None else 1.0
        trunc = self.truncation_tau if self.truncation_tau is not None else math.inf
        return kind, float(self.peak), float(sigma), float(trunc)


def resolve_pulse(params: DimensionlessParams, pulse: DrivePulse | None) -> DrivePulse:
    return DrivePulse.constant(params.p1) if pulse is None else pulse


def load_molecules(path=None) -> dict[str, float]:
    """Read a molecule table of ``name inertia`` lines (SI, kg m^2).

    Without ``path`` the bundled table is used.
    """
    if path is None:
        text = resources.files("centrifuge.data").joinpath("molecules.txt").read_text()
    else:
        with open(path) as fh:
            text = fh.read()
    table = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise InvalidInputError(f"line {lineno}: expected 'name inertia', got {line!r}")
        value = float(parts[1])
        if not value > 0:
            raise InvalidInputError(f"line {lineno}: inertia must be positive")
        table[parts[0]] = value
    return table


def molecule_inertia(name: str, table: dict[str, float] | None = None) -> float:
    table = load_molecules() if table is None else table
    try:
        return table[name]
    except KeyError:
        raise InvalidInputError(f"unknown molecule {name!r}; known: {sorted(table)}") from None
