"""Closed-form results for the resonant dynamics.

Landau-Zener step probability, the ladder-climbing efficiency product along
the ``C = 0`` chain, regime boundaries in the ``(p1, p2)`` plane and the
validity estimates of the rotating-wave approximation.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import bisect

from .coupling import coefficients
from .errors import InvalidInputError

__all__ = [
    "RegimeReport",
    "lz_probability",
    "lc_efficiency",
    "classify_regime",
    "efficient_lc_threshold",
    "rwa_min_l",
    "thermal_rwa_guard",
    "weak_drive_param",
    "LADDER_CLIMBING",
    "AUTORESONANT",
    "BELOW_AR",
    "BOUNDARY",
]

LADDER_CLIMBING = "ladder_climbing"
AUTORESONANT = "autoresonant_classical"
BELOW_AR = "below_ar_threshold"
BOUNDARY = "boundary"


def lz_probability(p1, b):
    """Single-crossing transfer probability ``1 - exp(-2 pi (p1 b)^2)``."""
    p1 = np.asarray(p1, dtype=float)
    if np.any(p1 < 0):
        raise InvalidInputError("p1 must be non-negative")
    out = -np.expm1(-2.0 * math.pi * (p1 * np.asarray(b, dtype=float)) ** 2)
    return float(out) if out.ndim == 0 else out


def _check_l_hat(l_hat) -> int:
    if int(l_hat) != l_hat or l_hat < 2 or int(l_hat) % 2:
        raise InvalidInputError(f"l_hat must be an even integer >= 2, got {l_hat!r}")
    return int(l_hat)


def _ladder_b(l_hat: int) -> np.ndarray:
    l = np.arange(2, l_hat + 1, 2)
    return coefficients(l, l, -2, -2)


def lc_efficiency(p1: float, l_hat: int) -> float:
    """Population left on the ground-state ladder after passing ``l_hat``.

    Product of the crossing probabilities ``l - 2 -> l`` for ``l = 2..l_hat``
    along ``m = l``.
    """
    l_hat = _check_l_hat(l_hat)
    return float(np.prod(lz_probability(p1, _ladder_b(l_hat))))


def efficient_lc_threshold(l_hat: int, level: float = 0.5, xtol: float = 1e-10) -> float:
    """Drive strength at which :func:`lc_efficiency` reaches ``level``."""
    l_hat = _check_l_hat(l_hat)
    if not 0 < level < 1:
        raise InvalidInputError("level must be in (0, 1)")
    b = _ladder_b(l_hat)

    def excess(p1):
        return float(np.prod(lz_probability(p1, b))) - level

    hi = 1.0
    while excess(hi) < 0:
        hi *= 2.0
    return bisect(excess, 0.0, hi, xtol=xtol, maxiter=500)


@dataclass(frozen=True)
class RegimeReport:
    p1: float
    p2: float
    lc_boundary_value: float
    ar_product: float
    classification: str

    def to_dict(self) -> dict:
        return asdict(self)


def classify_regime(p1: float, p2: float) -> RegimeReport:
    """Place ``(p1, p2)`` relative to the ladder-climbing and autoresonance lines.

    Points lying exactly on either line are labelled ``boundary``.
    """
    if not p1 >= 0:
        raise InvalidInputError("p1 must be non-negative")
    if not p2 > 0:
        raise InvalidInputError("p2 must be positive")
    lc = p2 - (0.25 + p1 / 16.0)
    ar = p1 * p2
    if lc > 0:
        label = LADDER_CLIMBING
    elif lc == 0 or ar == 0.5:
        label = BOUNDARY
    elif ar > 0.5:
        label = AUTORESONANT
    else:
        label = BELOW_AR
    return RegimeReport(float(p1), float(p2), float(lc), float(ar), label)


def rwa_min_l(p2: float) -> float:
    """The ``l`` at which ``p2 (2 l - 1) = 1``; the RWA needs ``l`` well above it."""
    if not p2 > 0:
        raise InvalidInputError("p2 must be positive")
    return (1.0 / p2 + 1.0) / 2.0


def thermal_rwa_guard(l_c: float, p2: float, margin: float = 2.0) -> bool:
    """Whether a thermal ensemble is hot enough for the RWA to hold overall.

    Requires ``l_c > margin * (1 + p2) / (2 p2)``.
    """
    return l_c > margin * (1.0 + p2) / (2.0 * p2)


def weak_drive_param(p1: float, p2: float, l_c: float) -> float:
    """``sqrt(2 p1 / (l_c (l_c + 1) p2))``; small values mean a weak drive."""
    if not l_c > 0:
        raise InvalidInputError("l_c must be positive")
    if not p2 > 0:
        raise InvalidInputError("p2 must be positive")
    return math.sqrt(2.0 / (l_c * (l_c + 1.0)) * p1 / p2)
