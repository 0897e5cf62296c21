import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from centrifuge.basis import StateVector, build_basis, build_chain, sector_of
from centrifuge.errors import InvalidInputError


def brute(l_max, c_max, pl, pm):
    out = []
    for l in range(l_max + 1):
        for m in range(-l, l + 1):
            if 0 <= l - m <= c_max and (pl is None or l % 2 == pl) and (pm is None or m % 2 == pm):
                out.append((l, m))
    return out


def test_small_enumerations():
    assert build_basis(2, 0, "even", "even").states() == [(0, 0), (2, 2)]
    assert build_basis(4, 2, "even", "even").states() == [(0, 0), (2, 0), (2, 2), (4, 2), (4, 4)]


@pytest.mark.parametrize("pl", [None, 0, 1])
@pytest.mark.parametrize("pm", [None, 0, 1])
def test_counts_match_brute_force(pl, pm):
    names = {None: None, 0: "even", 1: "odd"}
    basis = build_basis(50, 50, names[pl], names[pm])
    assert basis.states() == brute(50, 50, pl, pm)


def test_index_roundtrip():
    basis = build_basis(10, 6)
    for i, (l, m) in enumerate(basis.states()):
        assert basis.index(l, m) == i
        assert basis.state(i) == (l, m)
    assert (4, -3) not in basis
    assert basis.get(4, -3) == -1
    with pytest.raises(InvalidInputError):
        basis.index(4, -3)


def test_chain():
    chain = build_chain(3, 12, "odd")
    assert chain.states() == [(l, l - 3) for l in range(3, 13, 2)]
    assert np.all(chain.c == 3)


def test_invalid():
    with pytest.raises(InvalidInputError):
        build_basis(-1, 0)
    with pytest.raises(InvalidInputError):
        build_basis(4, 0, "odd", "even")
    with pytest.raises(InvalidInputError):
        build_basis(4, 4, "sideways")


def test_sector_of():
    assert sector_of(3, -2) == ("odd", "even")


def test_state_vector():
    basis = build_basis(4, 4, "even", "even")
    psi = StateVector.basis_state(basis, 2, 0)
    assert psi.norm2 == 1.0
    np.testing.assert_array_equal(psi.populations(), [0, 0, 1, 0, 0])
    rot = psi.to_frame("rotating", 3.0)
    assert rot.frame == "rotating"
    np.testing.assert_allclose(rot.to_frame("lab", 3.0).amplitudes, psi.amplitudes)
    with pytest.raises(InvalidInputError):
        StateVector(basis, np.zeros(2))
    with pytest.raises(InvalidInputError):
        StateVector(basis, psi.amplitudes, "sideways")


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 30), st.integers(0, 60), st.sampled_from([None, 0, 1]), st.sampled_from([None, 0, 1]))
def test_basis_invariants(l_max, c_max, pl, pm):
    names = {None: None, 0: "even", 1: "odd"}
    ref = brute(l_max, c_max, pl, pm)
    if not ref:
        with pytest.raises(InvalidInputError):
            build_basis(l_max, c_max, names[pl], names[pm])
        return
    basis = build_basis(l_max, c_max, names[pl], names[pm])
    assert basis.size == len(ref)
    assert np.all(np.abs(basis.m) <= basis.l)
    assert np.all((basis.c >= 0) & (basis.c <= c_max))
    order = list(zip(basis.l, basis.m))
    assert order == sorted(order)
