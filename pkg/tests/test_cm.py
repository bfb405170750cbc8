import math

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from gperiods.cm import (
    chowla_selberg_period,
    class_number,
    class_number_by_a,
    cm_points,
    form_tau,
    heegner_scan,
    is_fundamental,
    j_of_tau,
    kronecker,
    rational_singular_moduli,
    reduced_forms,
)
from gperiods.errors import InvalidDiscriminant, NonFundamental
from gperiods.numerics import ComplexBall

HEEGNER = [-3, -4, -7, -8, -11, -19, -43, -67, -163]


@pytest.mark.parametrize("D,h", [(-3, 1), (-4, 1), (-7, 1), (-8, 1), (-11, 1), (-15, 2), (-23, 3),
                                 (-20, 2), (-47, 5), (-71, 7), (-163, 1), (-12, 1), (-16, 1), (-28, 1)])
def test_class_numbers(D, h):
    assert class_number(D).h == h


discriminant = st.integers(3, 2000).map(lambda n: -n).filter(lambda D: D % 4 in (0, 1))


@given(discriminant)
def test_two_enumerations_agree(D):
    assert class_number(D).h == class_number_by_a(D)


@given(discriminant)
def test_forms_are_reduced_and_primitive(D):
    for a, b, c in reduced_forms(D):
        assert b * b - 4 * a * c == D
        assert abs(b) <= a <= c
        assert math.gcd(math.gcd(a, b), c) == 1
        if abs(b) == a or a == c:
            assert b >= 0


def test_heegner_scan():
    assert heegner_scan(200) == HEEGNER
    assert heegner_scan(10_000) == HEEGNER
    assert set(heegner_scan(200, include_nonfundamental=True)) == set(HEEGNER) | {-12, -16, -27, -28}


def test_invalid_discriminants():
    for D in (5, -1, -2, -5, 0):
        with pytest.raises(InvalidDiscriminant):
            class_number(D)


def test_fundamental():
    assert is_fundamental(-4) and is_fundamental(-8) and is_fundamental(-3)
    assert not is_fundamental(-12) and not is_fundamental(-16)


@pytest.mark.parametrize("D,j", [(-3, 0), (-4, 1728), (-7, -3375), (-8, 8000), (-11, -32768), (-163, -262537412640768000)])
def test_rational_singular_moduli(D, j):
    assert rational_singular_moduli(200)[j] == D


@given(st.sampled_from([(1, 1, 6), (2, 1, 3), (1, 0, 5), (2, 2, 3), (3, 1, 4)]))
def test_j_matches_mpmath_kleinj(form):
    tau = form_tau(form, 200)
    ours = j_of_tau(tau, 200)
    with mpmath.workprec(200):
        ref = 1728 * mpmath.kleinj(mpmath.mpc(tau.mid_re, tau.mid_im))
    assert abs(complex(ref) - complex(float(ours.mid_re), float(ours.mid_im))) < 1e-20 * max(1, abs(ref))


@pytest.mark.parametrize("D", [-15, -20, -23, -47, -56])
def test_class_number_counts_distinct_j_values(D):
    pts = cm_points(D, 128)
    clusters = []
    for p in pts:
        if not any(p.j_value.overlaps(q) for q in clusters):
            clusters.append(p.j_value)
    assert len(clusters) == class_number(D).h


def test_j_invariant_is_modular():
    tau = form_tau((2, 1, 3), 200)
    one = ComplexBall(1, 200)
    assert j_of_tau(tau + one, 200).overlaps(j_of_tau(tau, 200))
    assert j_of_tau(-one / tau, 200).overlaps(j_of_tau(tau, 200))


def test_kronecker_symbol():
    assert [kronecker(-4, a) for a in range(1, 5)] == [1, 0, -1, 0]
    assert kronecker(-7, 2) == 1


def test_chowla_selberg_lemniscate():
    val = chowla_selberg_period(-4, 200)
    with mpmath.workprec(200):
        ref = mpmath.sqrt(mpmath.pi) * mpmath.gamma(mpmath.mpf(1) / 4) / mpmath.gamma(mpmath.mpf(3) / 4)
    assert abs(float(val.mid_re) - float(ref)) < 1e-40 * float(ref)


def test_chowla_selberg_needs_fundamental():
    with pytest.raises(NonFundamental):
        chowla_selberg_period(-12)
