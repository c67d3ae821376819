import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import potentials, states
from qwplab.core import (
    Harmonic,
    InvalidPotentialError,
    Inverted,
    Linear,
    PotentialSpec,
    UncertaintyState,
    UnphysicalStateError,
    UnitsConfig,
    check_generalized_uncertainty,
    classify_regime,
    constants_of_motion,
    spreading_sign,
)


@pytest.mark.parametrize("A, eps, expected", [
    (0.0, 0.0, Linear()),
    (0.5, 1e-12, Harmonic(1.0)),
    (-0.5, 1e-12, Inverted(1.0)),
    (1e-13, 1e-12, Linear()),
    (2.0, 1e-12, Harmonic(2.0)),
])
def test_classify_regime(A, eps, expected):
    assert classify_regime(PotentialSpec(A, 0.0, 0.0, 1.0), eps) == expected


def test_classify_regime_uses_mass():
    assert classify_regime(PotentialSpec.inverted(0.3, m=2.5)) == Inverted(pytest.approx(0.3))


@pytest.mark.parametrize("kwargs", [dict(A=math.nan), dict(m=0.0), dict(m=-1.0), dict(B=math.inf)])
def test_invalid_potential(kwargs):
    with pytest.raises(InvalidPotentialError):
        PotentialSpec(**kwargs)


def test_potential_evaluates_polynomial():
    assert PotentialSpec(2.0, -1.0, 3.0)(2.0) == 9.0


@pytest.mark.parametrize("s, A, K, U", [
    ((1.0, 1.0, 0.0), 0.0, 1.0, 1.0),
    ((0.5, 0.5, 0.0), 0.5, 1.0, 0.25),
    ((0.5, 1.0, 0.5), 0.0, 1.0, 0.25),
])
def test_constants_of_motion(s, A, K, U):
    c = constants_of_motion(UncertaintyState(*s), PotentialSpec(A))
    assert c.K == pytest.approx(K, abs=1e-15)
    assert c.U == pytest.approx(U, abs=1e-15)


def test_inverted_K_can_be_negative():
    c = constants_of_motion(UncertaintyState(2.0, 0.5, 0.0), PotentialSpec.inverted(1.0))
    assert c.K == pytest.approx(-1.5)


@pytest.mark.parametrize("s, margin", [((0.5, 0.5, 0.0), 0.0), ((1.0, 1.0, 0.0), 0.75)])
def test_uncertainty_margin(s, margin):
    assert check_generalized_uncertainty(UncertaintyState(*s), 1.0) == pytest.approx(margin, abs=1e-15)


def test_margin_scales_with_hbar():
    s = UncertaintyState(0.5, 2.0, 0.0)
    assert check_generalized_uncertainty(s, 2.0) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("dxp, sign", [(0.0, 0), (-1.0, -1), (0.3, 1)])
def test_spreading_sign(dxp, sign):
    assert spreading_sign(UncertaintyState(1.0, 2.0, dxp)) == sign


class TestStateValidation:
    @pytest.mark.parametrize("bad", [(0.0, 1.0, 0.0), (1.0, -1.0, 0.0), (math.nan, 1.0, 0.0)])
    def test_rejects_nonpositive_or_nan(self, bad):
        with pytest.raises(UnphysicalStateError):
            UncertaintyState(*bad)

    def test_physical_rejects_violation(self):
        with pytest.raises(UnphysicalStateError):
            UncertaintyState.physical(0.5, 0.4, 0.0)

    def test_physical_accepts_tolerance(self):
        s = UncertaintyState.physical(0.5, 0.5 - 1e-10, 0.0)
        assert s.dp2 < 0.5

    def test_unchecked_keeps_raw_values(self):
        s = UncertaintyState.unchecked(0.5, 0.1, 0.3)
        assert s.as_tuple() == (0.5, 0.1, 0.3)

    def test_product(self):
        assert UncertaintyState(2.0, 3.0, 1.0).product == 6.0

    def test_units(self):
        with pytest.raises(ValueError):
            UnitsConfig(0.0)


@given(states(), potentials())
def test_constants_are_linear_in_coefficients(s, pot):
    c = constants_of_motion(s, pot)
    assert c.K == pytest.approx(s.dp2 + 2 * pot.m * pot.A * s.dx2)
    assert c.U >= 0.25 - 1e-12


@given(st.floats(-5, 5), st.floats(0.1, 5))
def test_regime_matches_sign_of_A(A, m):
    r = classify_regime(PotentialSpec(A, 0.0, 0.0, m))
    if abs(A) <= 1e-12:
        assert isinstance(r, Linear)
    else:
        assert isinstance(r, Harmonic if A > 0 else Inverted)
        assert 0.5 * m * r.omega ** 2 == pytest.approx(abs(A))
