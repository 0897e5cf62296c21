import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from centrifuge.coupling import b_coefficient
from centrifuge.errors import InvalidInputError
from centrifuge.params import thermal_lc
from centrifuge.theory import (
    AUTORESONANT,
    BELOW_AR,
    BOUNDARY,
    LADDER_CLIMBING,
    classify_regime,
    efficient_lc_threshold,
    lc_efficiency,
    lz_probability,
    rwa_min_l,
    thermal_rwa_guard,
    weak_drive_param,
)


def test_lz_probability():
    assert lz_probability(0.0, -0.2) == 0.0
    assert lz_probability(4.0, 0.25) == pytest.approx(1 - math.exp(-2 * math.pi), abs=1e-15)
    np.testing.assert_allclose(lz_probability([0.0, 4.0], 0.25), [0.0, 1 - math.exp(-2 * math.pi)])
    with pytest.raises(InvalidInputError):
        lz_probability(-1.0, 0.1)


def test_lc_efficiency_limits():
    assert lc_efficiency(0.0, 40) == 0.0
    assert lc_efficiency(100.0, 40) == pytest.approx(1.0)
    assert lc_efficiency(3.1, 40) == pytest.approx(0.5, abs=0.02)
    b = [b_coefficient(l, l) for l in range(2, 11, 2)]
    assert lc_efficiency(2.0, 10) == pytest.approx(np.prod([lz_probability(2.0, x) for x in b]))


def test_lc_efficiency_decreases_with_ladder_length():
    for p1 in (1.5, 3.0, 6.0):
        assert lc_efficiency(p1, 16) > lc_efficiency(p1, 40) > lc_efficiency(p1, 80)


def test_thresholds():
    assert efficient_lc_threshold(40) == pytest.approx(3.1, abs=0.05)
    b2 = -0.25 * math.sqrt(8 / 15)
    assert efficient_lc_threshold(2) == pytest.approx(math.sqrt(math.log(2) / (2 * math.pi)) / abs(b2), rel=1e-9)
    assert efficient_lc_threshold(80) > efficient_lc_threshold(40) > efficient_lc_threshold(16)
    with pytest.raises(InvalidInputError):
        efficient_lc_threshold(41)
    with pytest.raises(InvalidInputError):
        efficient_lc_threshold(40, level=1.0)


def test_threshold_frozen():
    # independent bisection at 1e-12, frozen
    assert efficient_lc_threshold(40) == pytest.approx(3.12286, abs=1e-5)


def test_classification():
    assert classify_regime(10, 10).classification == LADDER_CLIMBING
    assert classify_regime(10, 0.1).classification == AUTORESONANT
    assert classify_regime(1, 0.1).classification == BELOW_AR
    assert classify_regime(4, 0.5).classification == BOUNDARY
    assert classify_regime(5, 0.1).classification == BOUNDARY
    rep = classify_regime(2.0, 0.3)
    assert rep.lc_boundary_value == pytest.approx(0.3 - 0.375)
    assert rep.to_dict()["ar_product"] == pytest.approx(0.6)
    with pytest.raises(InvalidInputError):
        classify_regime(1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(0, 100), st.floats(1e-3, 100))
def test_classification_consistent(p1, p2):
    rep = classify_regime(p1, p2)
    lc = p2 > 0.25 + p1 / 16
    if rep.classification == LADDER_CLIMBING:
        assert lc
    elif rep.classification == AUTORESONANT:
        assert not lc and p1 * p2 > 0.5
    elif rep.classification == BELOW_AR:
        assert not lc and p1 * p2 < 0.5
    else:
        assert p2 == 0.25 + p1 / 16 or p1 * p2 == 0.5


def test_rwa_validity():
    assert rwa_min_l(1.0) == 1.0
    assert rwa_min_l(0.1) == pytest.approx(5.5)
    assert rwa_min_l(10.0) == pytest.approx(0.55)
    assert thermal_rwa_guard(11.5, 0.1)
    assert not thermal_rwa_guard(2.0, 0.1)


def test_weak_drive_param():
    assert weak_drive_param(0.3, 0.3, 11.5) == pytest.approx(math.sqrt(2 / 143.75))
    assert weak_drive_param(1.0, 0.23, 11.5) == pytest.approx(0.246, abs=5e-4)
    with pytest.raises(InvalidInputError):
        weak_drive_param(1.0, 1.0, 0.0)


@settings(max_examples=50, deadline=None)
@given(st.floats(1e-30, 1e-20), st.floats(0.1, 10.0))
def test_weak_drive_is_hbar_free(eps, scale):
    # P1/P2 = eps I / hbar^2 and l_c(l_c+1) = 2 I kT / hbar^2, so hbar cancels
    inertia, kT, beta = 1e-46, 4e-21, 1e24

    def value(hbar):
        p1 = eps / (hbar * math.sqrt(beta))
        p2 = hbar / (inertia * math.sqrt(beta))
        return weak_drive_param(p1, p2, thermal_lc(kT, inertia, hbar))

    assert value(1.054e-34) == pytest.approx(value(1.054e-34 * scale), rel=1e-9)
