from fractions import Fraction

import mpmath
import pytest
from flint import acb, ctx
from hypothesis import given, settings
from hypothesis import strategies as st

from gperiods.errors import DomainError, RecognitionFailed
from gperiods.family import RationalMap, bundled_family
from gperiods.numerics import ComplexBall
from gperiods.periods import (
    agm,
    connection_constants,
    continue_periods,
    continued_solution,
    elliptic_ke,
    evaluate_gmatrix,
    legendre_periods,
    monodromy,
)
from gperiods.picard_fuchs import gauss_manin, normalized_solution

coords = st.floats(min_value=-3, max_value=3, allow_nan=False).map(lambda v: round(v, 6))


def _close(z: ComplexBall, w: complex, tol: float) -> bool:
    return abs(complex(float(z.mid_re), float(z.mid_im)) - w) < tol


def test_agm_matches_mpmath():
    with mpmath.workprec(256):
        ref = mpmath.agm(1, mpmath.sqrt(2))
    assert _close(agm(1, mpmath.sqrt(2), 256), complex(ref), 1e-14)
    z = agm(1, Fraction(1, 2), 256)
    with mpmath.workprec(300):
        assert abs(mpmath.mpf(z.mid_re) - mpmath.agm(1, mpmath.mpf(1) / 2)) < mpmath.mpf(10) ** -70


@given(coords, coords.filter(lambda v: abs(v) > 1e-3))
def test_elliptic_integrals_match_flint(re, im):
    m = ComplexBall(mpmath.mpc(re, im), 200)
    K, E = elliptic_ke(m, 200)
    old = ctx.prec
    ctx.prec = 200
    try:
        mm = acb(re, im)
        Kr, Er = mm.elliptic_k(), mm.elliptic_e()
    finally:
        ctx.prec = old
    assert (K.acb - Kr).abs_upper() < 1e-50
    assert (E.acb - Er).abs_upper() < 1e-50


def test_cut_uses_principal_root_of_complement():
    # sqrt(1 - m) is principal, so real m > 1 gives the limit from Im m < 0
    K, _ = elliptic_ke(2, 200)
    old = ctx.prec
    ctx.prec = 200
    try:
        Kr = acb(2, -mpmath.mpf(10) ** -45).elliptic_k()
    finally:
        ctx.prec = old
    assert (K.acb - Kr).abs_upper() < 1e-40


@settings(max_examples=25)
@given(coords, coords)
def test_determinant_is_inverse_two_pi_i(re, im):
    if abs(complex(re, im)) < 1e-3 or abs(complex(re, im) - 1) < 1e-3 or (im == 0 and not 0 < re < 1):
        return
    P = legendre_periods(ComplexBall(mpmath.mpc(re, im), 256), 256)
    target = 1 / ComplexBall.two_pi_i(256)
    assert (P.det() - target).abs_upper() < 1e-60


@settings(max_examples=20)
@given(coords, coords.filter(lambda v: abs(v) > 1e-3))
def test_conjugation_symmetry(re, im):
    # P(conj lam) = conj(P(lam)) diag(-1, 1) with the 1/(2 pi i) normalization
    P = legendre_periods(ComplexBall(mpmath.mpc(re, im), 200), 200)
    Q = legendre_periods(ComplexBall(mpmath.mpc(re, -im), 200), 200)
    for i in range(2):
        assert (Q[i, 0] + P[i, 0].conjugate()).abs_upper() < 1e-40
        assert (Q[i, 1] - P[i, 1].conjugate()).abs_upper() < 1e-40


def test_domain_errors():
    for lam in (0, 1):
        with pytest.raises(DomainError):
            legendre_periods(lam, 128)


def test_continuation_path_independent():
    start = legendre_periods(Fraction(1, 3), 200)
    a = continue_periods(start, [Fraction(1, 3), Fraction(1, 2) + 0.25j, Fraction(2, 3)], 200)
    b = continue_periods(start, [Fraction(1, 3), Fraction(1, 2) + 0.1j, Fraction(2, 3)], 200)
    direct = legendre_periods(Fraction(2, 3), 200)
    for i in range(2):
        for j in range(2):
            assert (a[i][j] - b[i][j]).abs_upper() < 1e-40
            assert (a[i][j] - direct[i, j]).abs_upper() < 1e-40


def test_continued_solution_matches_series():
    g = bundled_family("default").coords[1]
    Y = normalized_solution(gauss_manin(g), 200)
    x = Fraction(1, 8)
    s = evaluate_gmatrix(Y, x, 200)
    c = continued_solution(g, x, 200)
    for i in range(2):
        for j in range(2):
            assert (s[i][j] - c[i][j]).abs_upper() < 1e-30


def test_cm_connection_constants_diagonal():
    g = bundled_family("default").coords[1]
    Y = normalized_solution(gauss_manin(g), 200)
    x0 = Fraction(1, 64)
    cc = connection_constants(Y, x0, legendre_periods(g(x0), 512), prec=512, cm=-4)
    assert cc.diagonal
    assert cc.Pi[0][1].abs_upper() <= 1e-25 and cc.Pi[1][0].abs_upper() <= 1e-25
    prod = cc.cm_form * cc.Pi[1][1]
    assert prod.contains(1)
    # varpi is the lemniscate constant Gamma(1/4)^2 / (2 sqrt(2 pi))
    with mpmath.workprec(300):
        lemn = mpmath.gamma(0.25) ** 2 / (2 * mpmath.sqrt(2 * mpmath.pi))
    assert abs(abs(complex(float(cc.cm_form.mid_re), float(cc.cm_form.mid_im))) - float(lemn)) < 1e-12


def test_non_cm_point_not_recognized():
    g = RationalMap.parse("x + 1/3")
    Y = normalized_solution(gauss_manin(g), 200)
    x0 = Fraction(1, 64)
    with pytest.raises(RecognitionFailed):
        connection_constants(Y, x0, legendre_periods(g(x0), 256), prec=256, cm=-4)


@pytest.mark.parametrize("text,N", [("x", 2), ("x**2", 4)])
def test_monodromy_is_unipotent(text, N):
    r = monodromy(RationalMap.parse(text), prec=128)
    assert r.unipotent
    assert r.N_series == N
    assert r.difference < 1e-20
