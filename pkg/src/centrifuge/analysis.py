"""Efficiency and bunch metrics shared by the quantum and classical paths."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "EfficiencyReport",
    "target_l",
    "efficiency",
    "bunch_width",
    "bin_classical",
    "write_report",
]

TARGET_FRACTION = 0.8
BUNCH_FLOOR = 1e-8


def target_l(tau_f: float, p2: float) -> float:
    """Level resonant with the drive at ``tau_f``: ``1/2 + tau_f / (2 p2)``."""
    if not p2 > 0:
        raise InvalidInputError("p2 must be positive")
    return 0.5 + tau_f / (2.0 * p2)


@dataclass(frozen=True)
class EfficiencyReport:
    """Summary of a final distribution ``P(l)``.

    ``efficiency`` is the population at ``l >= l_hat = 0.8 l_f`` and
    ``left_behind`` the rest; ``norm`` is the raw sum of the input before
    normalization. Bunch statistics are taken over the same region.
    """

    l_f: float
    l_hat: float
    efficiency: float
    bunch_mean_l: float
    bunch_fwhm_l: float
    left_behind: float
    norm: float = 1.0

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(_clean(self.to_dict()), sort_keys=True)


def _clean(d):
    # JSON has no NaN
    return {k: (None if isinstance(v, float) and math.isnan(v) else v) for k, v in d.items()}


def _as_dist(dist) -> np.ndarray:
    p = np.asarray(dist, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise InvalidInputError("distribution must be a non-empty 1-D array indexed by l")
    if np.any(p < -1e-12):
        raise InvalidInputError("distribution has negative entries")
    return np.clip(p, 0.0, None)


def efficiency(dist, l_f: float, norm_tol: float = 1e-3, stride: int = 1) -> EfficiencyReport:
    """Fraction of population at or above ``0.8 l_f``.

    ``dist[l]`` is the probability of level ``l``. ``stride`` is passed to
    :func:`bunch_width` (use 2 for single-parity ladders). Bunch statistics
    are NaN when less than ``BUNCH_FLOOR`` of the population reached the
    target region.
    """
    p = _as_dist(dist)
    total = float(p.sum())
    if abs(total - 1.0) > norm_tol:
        raise InvalidInputError(f"distribution is not normalized (sum = {total:.6g})")
    p = p / total
    l_hat = TARGET_FRACTION * l_f
    l = np.arange(p.size)
    region = l >= l_hat - 1e-9
    eff = float(p[region].sum())
    if eff >= BUNCH_FLOOR:
        mean = float((l[region] * p[region]).sum() / eff)
        fwhm = bunch_width(p, region, stride=stride)
    else:
        mean = fwhm = math.nan
    return EfficiencyReport(float(l_f), float(l_hat), eff, mean, fwhm, 1.0 - eff, total)


def _region_indices(n, region):
    if region is None:
        return np.arange(n)
    region = np.asarray(region)
    if region.dtype == bool:
        if region.shape != (n,):
            raise InvalidInputError("boolean region must match the distribution length")
        return np.flatnonzero(region)
    if region.shape == (2,):
        lo, hi = region
        return np.arange(max(0, int(math.ceil(lo))), min(n - 1, int(math.floor(hi))) + 1)
    raise InvalidInputError("region must be a boolean mask or a (lo, hi) pair")


def bunch_width(dist, region=None, stride: int = 1) -> float:
    """Full width at half maximum of ``P(l)`` within ``region``, in units of ``l``.

    Half-maximum crossings are located by linear interpolation between grid
    points ``stride`` apart, using the outermost points at or above half the
    peak. With ``stride=2`` only levels of the peak's parity are used. A
    single populated level has width 0.
    """
    p = _as_dist(dist)
    idx = _region_indices(p.size, region)
    if idx.size == 0:
        raise InvalidInputError("empty region")
    vals = p[idx]
    peak_at = int(idx[np.argmax(vals)])
    peak = float(p[peak_at])
    if peak <= 0:
        return 0.0
    grid = idx[(idx - peak_at) % stride == 0]
    g = p[grid]
    if np.count_nonzero(g) <= 1:
        return 0.0
    half = 0.5 * peak
    above = np.flatnonzero(g >= half)
    i, j = above[0], above[-1]

    def crossing(inner, outer):
        # level between grid[outer] and grid[inner] where P falls to half
        if outer < 0 or outer >= grid.size:
            return float(grid[inner])
        pi, po = g[inner], g[outer]
        frac = (pi - half) / (pi - po) if pi != po else 0.0
        return float(grid[inner] + frac * (grid[outer] - grid[inner]))

    return crossing(j, j + 1) - crossing(i, i - 1)


def bin_classical(L, p2: float, l_max: int | None = None, weights=None) -> np.ndarray:
    """Histogram classical angular momenta onto the quantum grid ``l = L / p2``.

    Each sample is assigned to the nearest integer ``l``; the result sums to 1.
    """
    if not p2 > 0:
        raise InvalidInputError("p2 must be positive")
    L = np.asarray(L, dtype=float)
    if L.size == 0:
        raise InvalidInputError("no samples to bin")
    l = np.rint(L / p2).astype(np.int64)
    if l_max is None:
        l_max = int(l.max())
    l = np.clip(l, 0, l_max)
    w = np.ones_like(L) if weights is None else np.asarray(weights, dtype=float)
    hist = np.bincount(l, weights=w, minlength=l_max + 1)
    return hist / hist.sum()


def write_report(report: EfficiencyReport, path, extra: dict | None = None) -> None:
    record = _clean(report.to_dict())
    if extra:
        record.update(extra)
    with open(path, "w") as fh:
        json.dump(record, fh, sort_keys=True, indent=2)
        fh.write("\n")
