"""Truncated spherical-harmonic basis and state vectors over it."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInputError

__all__ = ["BasisMap", "StateVector", "build_basis", "build_chain", "sector_of"]

_PARITY = {"even": 0, "odd": 1, None: None, "any": None, 0: 0, 1: 1}


def _parity(value):
    try:
        return _PARITY[value]
    except (KeyError, TypeError):
        raise InvalidInputError(f"parity must be 'even', 'odd' or None, got {value!r}") from None


def sector_of(l, m):
    """Parity sector ``(l mod 2, m mod 2)`` as ('even'|'odd', 'even'|'odd')."""
    names = ("even", "odd")
    return names[l % 2], names[m % 2]


@dataclass(frozen=True, eq=False)
class BasisMap:
    """States ``|l, m>`` with ``l_min <= l <= l_max`` and ``c_min <= l - m <= c_max``.

    Optionally restricted to one parity of ``l`` and/or ``m``. States are
    ordered by ascending ``l`` then ascending ``m``.
    """

    l_max: int
    c_max: int
    parity_l: str | None = None
    parity_m: str | None = None
    c_min: int = 0
    l_min: int = 0
    l: np.ndarray = field(init=False, repr=False)
    m: np.ndarray = field(init=False, repr=False)
    _index: dict = field(init=False, repr=False)

    def __post_init__(self):
        pl, pm = _parity(self.parity_l), _parity(self.parity_m)
        ls, ms = [], []
        for l in range(self.l_min, self.l_max + 1):
            if pl is not None and l % 2 != pl:
                continue
            for m in range(-l, l + 1):
                if pm is not None and m % 2 != pm:
                    continue
                if self.c_min <= l - m <= self.c_max:
                    ls.append(l)
                    ms.append(m)
        l_arr = np.array(ls, dtype=np.int64)
        m_arr = np.array(ms, dtype=np.int64)
        l_arr.setflags(write=False)
        m_arr.setflags(write=False)
        object.__setattr__(self, "l", l_arr)
        object.__setattr__(self, "m", m_arr)
        object.__setattr__(self, "_index", {(a, b): i for i, (a, b) in enumerate(zip(ls, ms))})

    @property
    def size(self) -> int:
        return len(self.l)

    def __len__(self):
        return self.size

    def index(self, l: int, m: int) -> int:
        try:
            return self._index[(int(l), int(m))]
        except KeyError:
            raise InvalidInputError(f"state ({l}, {m}) not in basis") from None

    def get(self, l: int, m: int, default=-1) -> int:
        return self._index.get((int(l), int(m)), default)

    def __contains__(self, state) -> bool:
        return (int(state[0]), int(state[1])) in self._index

    def state(self, i: int) -> tuple[int, int]:
        return int(self.l[i]), int(self.m[i])

    def states(self) -> list[tuple[int, int]]:
        return list(zip(self.l.tolist(), self.m.tolist()))

    @property
    def c(self) -> np.ndarray:
        return self.l - self.m

    def energies(self, p2: float) -> np.ndarray:
        """Free-rotor energies ``p2 l (l + 1) / 2``."""
        return p2 * self.l * (self.l + 1) / 2.0


def build_basis(l_max, c_max, parity_l=None, parity_m=None, c_min=0, l_min=0) -> BasisMap:
    """Enumerate the truncated basis; raises if no state survives the constraints."""
    if l_max < 0 or c_max < 0:
        raise InvalidInputError("l_max and c_max must be non-negative")
    basis = BasisMap(int(l_max), int(c_max), parity_l, parity_m, int(c_min), int(l_min))
    if basis.size == 0:
        raise InvalidInputError(
            f"empty basis for l_max={l_max}, c_min={c_min}, c_max={c_max}, parity=({parity_l}, {parity_m})"
        )
    return basis


def build_chain(c: int, l_max: int, parity_l, l_min: int = 0) -> BasisMap:
    """The resonant chain of fixed ``C = l - m`` and fixed parity of ``l``."""
    pl = _parity(parity_l)
    pm = None if pl is None else (pl - c) % 2
    return build_basis(l_max, c, pl, pm, c_min=c, l_min=l_min)


@dataclass(eq=False)
class StateVector:
    """Complex amplitudes aligned with a basis.

    ``frame`` is ``'lab'`` for the coefficients a_{l,m} or ``'rotating'`` for
    ``W_{l,m} = exp(i l phi_d) a_{l,m}``. Populations are frame independent.
    """

    basis: BasisMap
    amplitudes: np.ndarray
    frame: str = "lab"

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=np.complex128)
        if self.amplitudes.shape != (self.basis.size,):
            raise InvalidInputError(
                f"amplitudes shape {self.amplitudes.shape} does not match basis size {self.basis.size}"
            )
        if self.frame not in ("lab", "rotating"):
            raise InvalidInputError(f"unknown frame {self.frame!r}")

    @classmethod
    def basis_state(cls, basis: BasisMap, l: int, m: int, frame="lab"):
        amps = np.zeros(basis.size, dtype=np.complex128)
        amps[basis.index(l, m)] = 1.0
        return cls(basis, amps, frame)

    @property
    def norm2(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def populations(self, l_max: int | None = None) -> np.ndarray:
        """Population per ``l`` summed over ``m``, indexed by ``l``."""
        l_max = self.basis.l_max if l_max is None else l_max
        return np.bincount(self.basis.l, weights=self.probabilities(), minlength=l_max + 1)

    def to_frame(self, frame: str, tau: float) -> StateVector:
        if frame == self.frame:
            return self
        phase = np.exp(1j * self.basis.l * tau * tau / 4.0)
        if frame == "lab":
            phase = phase.conj()
        return StateVector(self.basis, self.amplitudes * phase, frame)
