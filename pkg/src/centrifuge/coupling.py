"""Coupling coefficients of the centrifuge interaction between rotor states.

The interaction, in units of the drive amplitude, is
``-sin^2(theta) cos^2(phi - phi_d)``. Its matrix elements between spherical
harmonics vanish unless ``dl, dm`` are both in ``{0, +2, -2}``; the closed
forms below give ``c[l, m; dl, dm] = <l, m| U/P1 |l+dl, m+dm>`` with the
``exp(i dm phi_d)`` phase factored out.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .basis import BasisMap
from .errors import InvalidInputError

__all__ = [
    "TRANSITIONS",
    "RESONANT_TRANSITIONS",
    "coefficient",
    "coefficients",
    "b_coefficient",
    "semiclassical_limits",
    "CouplingTable",
    "build_coupling",
]

TRANSITIONS = tuple((dl, dm) for dl in (0, 2, -2) for dm in (0, 2, -2))
# the steps that keep C = l - m fixed
RESONANT_TRANSITIONS = ((0, 0), (2, 2), (-2, -2))


def coefficients(l, m, dl: int, dm: int) -> np.ndarray:
    """Vectorized coupling coefficient over arrays of ``(l, m)``.

    Entries whose source or target state is invalid are zero.
    """
    if (dl, dm) not in TRANSITIONS:
        raise InvalidInputError(f"(dl, dm) must be in {{0, +-2}}^2, got {(dl, dm)}")
    l = np.asarray(l, dtype=np.float64)
    m = np.asarray(m, dtype=np.float64)
    lt, mt = l + dl, m + dm
    valid = (np.abs(m) <= l) & (lt >= 0) & (np.abs(mt) <= lt)

    up = (2 * l + 1) * (2 * l + 3) ** 2 * (2 * l + 5)
    down = (2 * l + 1) * (2 * l - 1) ** 2 * (2 * l - 3)
    same = (2 * l - 1) * (2 * l + 3)

    with np.errstate(divide="ignore", invalid="ignore"):
        if (dl, dm) == (0, 0):
            val = -(1.0 - (l * l + l - 3 * m * m) / same) / 3.0
            return np.where(valid, val, 0.0)
        if (dl, dm) == (2, 0):
            num, den, pre = (l - m + 1) * (l - m + 2) * (l + m + 1) * (l + m + 2), up, 0.5
        elif (dl, dm) == (-2, 0):
            num, den, pre = (l - m - 1) * (l - m) * (l + m - 1) * (l + m), down, 0.5
        elif (dl, dm) == (0, 2):
            num, den, pre = (l + m + 1) * (l + m + 2) * (l - m - 1) * (l - m), same**2, 0.5
        elif (dl, dm) == (0, -2):
            num, den, pre = (l - m + 1) * (l - m + 2) * (l + m - 1) * (l + m), same**2, 0.5
        elif (dl, dm) == (2, 2):
            num, den, pre = (l + m + 1) * (l + m + 2) * (l + m + 3) * (l + m + 4), up, -0.25
        elif (dl, dm) == (2, -2):
            num, den, pre = (l - m + 1) * (l - m + 2) * (l - m + 3) * (l - m + 4), up, -0.25
        elif (dl, dm) == (-2, 2):
            num, den, pre = (l - m) * (l - m - 1) * (l - m - 2) * (l - m - 3), down, -0.25
        else:
            num, den, pre = (l + m) * (l + m - 1) * (l + m - 2) * (l + m - 3), down, -0.25
        ratio = np.where(valid, num / den, 0.0)
    return pre * np.sqrt(np.clip(ratio, 0.0, None))


def coefficient(l: int, m: int, dl: int, dm: int) -> float:
    """Coupling coefficient for ``|l, m> -> |l + dl, m + dm>``.

    Returns 0 when the target state does not exist.
    """
    if l < 0 or abs(m) > l:
        raise InvalidInputError(f"need |m| <= l, got l={l}, m={m}")
    return float(coefficients(l, m, dl, dm))


def b_coefficient(l: int, m: int) -> float:
    """Resonant coupling ``B_{l,m} = c[l, m; -2, -2] = c[l-2, m-2; 2, 2]``.

    Magnitude is bounded by 1/4, reached only as ``l = m -> infinity``.
    """
    if l < 2:
        raise InvalidInputError("B is defined for l >= 2")
    if abs(m) > l:
        raise InvalidInputError(f"need |m| <= l, got l={l}, m={m}")
    return float(coefficients(l, m, -2, -2))


def semiclassical_limits(l, m) -> tuple[float, float]:
    """Large-``l`` forms of the diagonal shift and of ``B`` at fixed ``m / l``."""
    if l == 0:
        raise InvalidInputError("semiclassical limit needs l > 0")
    x = m / l
    return -0.5 + 0.25 * (1.0 - x * x), -((1.0 + x) ** 2) / 16.0


@dataclass(frozen=True, eq=False)
class CouplingTable:
    """Sparse real symmetric coupling matrix over a basis.

    ``matrix[i, j]`` is the coefficient coupling state ``i`` to state ``j``;
    the evolution multiplies it by ``exp(i (m_j - m_i) phi_d)``.
    """

    basis: BasisMap
    matrix: sp.csr_matrix

    @property
    def nnz(self) -> int:
        return self.matrix.nnz

    def entry(self, l, m, lp, mp) -> float:
        i, j = self.basis.get(l, m), self.basis.get(lp, mp)
        if i < 0 or j < 0:
            return 0.0
        return float(self.matrix[i, j])

    def row_size(self, l, m) -> int:
        i = self.basis.index(l, m)
        return int(self.matrix.indptr[i + 1] - self.matrix.indptr[i])

    def records(self):
        """Yield ``(l, m, dl, dm, value)`` for every stored entry."""
        coo = self.matrix.tocoo()
        order = np.lexsort((coo.col, coo.row))
        b = self.basis
        for i, j, v in zip(coo.row[order], coo.col[order], coo.data[order]):
            yield int(b.l[i]), int(b.m[i]), int(b.l[j] - b.l[i]), int(b.m[j] - b.m[i]), float(v)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["l", "m", "dl", "dm", "value"])
            for l, m, dl, dm, v in self.records():
                writer.writerow([l, m, dl, dm, repr(v)])


def build_coupling(basis: BasisMap, resonant_only=False, include_diagonal=True) -> CouplingTable:
    """Couplings internal to ``basis``; links to states outside it are dropped.

    ``resonant_only`` keeps just the ``C``-conserving steps (the rotating-wave
    chain couplings); ``include_diagonal`` controls the ``c[l, m; 0, 0]`` shift.
    """
    steps = RESONANT_TRANSITIONS if resonant_only else TRANSITIONS
    rows, cols, vals = [], [], []
    for dl, dm in steps:
        if (dl, dm) == (0, 0) and not include_diagonal:
            continue
        vals_k = coefficients(basis.l, basis.m, dl, dm)
        for i, (lt, mt) in enumerate(zip((basis.l + dl).tolist(), (basis.m + dm).tolist())):
            if vals_k[i] == 0.0:
                continue
            j = basis.get(lt, mt)
            if j >= 0:
                rows.append(i)
                cols.append(j)
                vals.append(vals_k[i])
    n = basis.size
    mat = sp.csr_matrix((np.array(vals, dtype=np.float64), (rows, cols)), shape=(n, n))
    mat.sort_indices()
    return CouplingTable(basis, mat)
