import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from centrifuge.basis import build_basis, build_chain
from centrifuge.coupling import (
    TRANSITIONS,
    b_coefficient,
    build_coupling,
    coefficient,
    coefficients,
    semiclassical_limits,
)
from centrifuge.errors import InvalidInputError
from conftest import quadrature_element


def test_known_values():
    assert coefficient(0, 0, 0, 0) == pytest.approx(-1 / 3, abs=1e-15)
    assert coefficient(0, 0, 2, 2) == pytest.approx(-0.25 * math.sqrt(24 / 45), abs=1e-15)
    assert coefficient(1, 1, -2, -2) == 0.0
    assert b_coefficient(2, 2) == pytest.approx(-0.25 * math.sqrt(8 / 15), abs=1e-15)


def test_quadrature_oracle_small(theta_table):
    for l in range(6):
        for m in range(-l, l + 1):
            for dl, dm in TRANSITIONS:
                ref = quadrature_element(theta_table, l, m, l + dl, m + dm)
                assert coefficient(l, m, dl, dm) == pytest.approx(ref, abs=1e-12)


def test_b_limits():
    assert b_coefficient(4000, 4000) == pytest.approx(-0.25, abs=1e-3)
    for l in range(2, 40):
        assert b_coefficient(l, -l) == 0.0
        assert abs(b_coefficient(l, l)) < 0.25


def test_b_matches_upward_coefficient():
    for l in range(2, 30):
        for m in range(-l, l + 1):
            if abs(m - 2) <= l - 2:
                assert b_coefficient(l, m) == pytest.approx(coefficient(l - 2, m - 2, 2, 2), abs=1e-15)


def test_semiclassical_limits():
    assert semiclassical_limits(10, 10) == (-0.5, -0.25)
    assert semiclassical_limits(10, 0) == (-0.25, -1 / 16)
    d0, b0 = semiclassical_limits(400, 200)
    assert coefficient(400, 200, 0, 0) == pytest.approx(d0, rel=1e-2)
    assert b_coefficient(400, 200) == pytest.approx(b0, rel=1e-2)


def test_invalid_inputs():
    with pytest.raises(InvalidInputError):
        coefficient(2, 3, 0, 0)
    with pytest.raises(InvalidInputError):
        coefficients(2, 0, 1, 0)
    with pytest.raises(InvalidInputError):
        b_coefficient(1, 0)


def test_two_state_table():
    basis = build_basis(2, 0, "even", "even")
    table = build_coupling(basis)
    mat = table.matrix.toarray()
    assert basis.states() == [(0, 0), (2, 2)]
    assert mat[0, 1] == mat[1, 0] == coefficient(0, 0, 2, 2)
    assert mat[0, 0] == coefficient(0, 0, 0, 0)
    assert mat[1, 1] == coefficient(2, 2, 0, 0)
    assert table.nnz == 4


def test_interior_row_has_nine_entries():
    table = build_coupling(build_basis(20, 20, "even", "even"))
    assert table.row_size(10, 4) == 9
    assert max(np.diff(table.matrix.indptr)) == 9


def test_resonant_only_keeps_chain():
    table = build_coupling(build_basis(12, 6, "even", "even"), resonant_only=True, include_diagonal=False)
    for l, m, dl, dm, _ in table.records():
        assert dl == dm
        assert abs(dl) == 2


def test_chain_coupling_is_b():
    chain = build_chain(4, 20, "even")
    table = build_coupling(chain, resonant_only=True, include_diagonal=False)
    for l in range(6, 21, 2):
        assert table.entry(l, l - 4, l - 2, l - 6) == b_coefficient(l, l - 4)


def test_csv_roundtrip(tmp_path):
    table = build_coupling(build_basis(6, 4, "even", "even"))
    path = tmp_path / "c.csv"
    table.to_csv(path)
    rows = path.read_text().strip().splitlines()
    assert len(rows) == table.nnz + 1


@settings(max_examples=40, deadline=None)
@given(
    l_max=st.integers(0, 24),
    c_max=st.integers(0, 30),
    pl=st.sampled_from([None, "even", "odd"]),
    pm=st.sampled_from([None, "even", "odd"]),
)
def test_matrix_symmetric_and_bounded(l_max, c_max, pl, pm):
    try:
        basis = build_basis(l_max, c_max, pl, pm)
    except InvalidInputError:
        return
    mat = build_coupling(basis).matrix
    assert abs(mat - mat.T).max() == 0 if mat.nnz else True
    off = mat.toarray() - np.diag(mat.diagonal())
    assert np.all(np.abs(off) <= 0.25 + 1e-15)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 80).flatmap(lambda l: st.tuples(st.just(l), st.integers(-l, l))), st.sampled_from(TRANSITIONS))
def test_hermitian_pairs(lm, t):
    l, m = lm
    dl, dm = t
    lp, mp = l + dl, m + dm
    if lp < 0 or abs(mp) > lp:
        assert coefficient(l, m, dl, dm) == 0.0
        return
    assert coefficient(l, m, dl, dm) == pytest.approx(coefficient(lp, mp, -dl, -dm), abs=1e-15)
