from fractions import Fraction
from math import comb

import mpmath
import pytest
import sympy

from gperiods.errors import NotDefinedAtChart, NotSingular, ResonanceUnresolved
from gperiods.family import RationalMap, bundled_family
from gperiods.numerics import QuadFieldElem
from gperiods.periods import evaluate_gmatrix
from gperiods.picard_fuchs import (
    family_solutions,
    gauss_manin,
    monodromy_factor,
    normalized_solution,
    ode_residual,
    singular_first_column,
)


def test_legendre_closed_form():
    Y = normalized_solution(gauss_manin(RationalMap.parse("x")), 200)
    y11 = Y.entry(1, 1).coefficients
    for n in range(201):
        assert y11[n] == Fraction(comb(2 * n, n), 4**n) ** 2


def test_order_zero_is_identity():
    Y = normalized_solution(gauss_manin(RationalMap.parse("x")), 0)
    assert Y.coefficients == (((1, 0), (0, 1)),)


@pytest.mark.parametrize("name", ["default", "sqrt-7", "legendre-shift", "gaussian-single", "two-singular"])
def test_determinant_and_ode(name):
    spec = bundled_family(name)
    for k in range(1, spec.n + 1):
        G = gauss_manin(spec, k)
        Y = normalized_solution(G, 60)
        det = Y.det_series()
        assert det[0] == 1 and all(c == 0 for c in det[1:])
        assert all(M == ((0, 0), (0, 0)) for M in ode_residual(G, Y))
        tr = G.trace()
        assert not tr.num


def test_first_coefficient_matches_connection_series():
    # for a smooth coordinate Y_1 = G_1; compare against a symbolic expansion of the connection
    x = sympy.symbols("x")
    P, Q = -1 + x / 2 - x**2, sympy.Integer(1)
    W = sympy.diff(P, x) * Q - P * sympy.diff(Q, x)
    g11 = sympy.series(-x * W / (2 * Q * (P - Q)), x, 0, 3).removeO()
    g12 = sympy.series(x * W / (2 * P * (P - Q)), x, 0, 3).removeO()
    Y = normalized_solution(gauss_manin(bundled_family("default"), 2), 4)
    assert Y.coefficients[1] == ((Fraction(1, 8), Fraction(1, 8)), (Fraction(1, 8), Fraction(-1, 8)))
    assert Fraction(str(g11.coeff(x, 1))) == Fraction(1, 8)
    assert Fraction(str(g12.coeff(x, 1))) == Fraction(1, 8)


def test_solution_matches_hypergeometric_periods():
    # g = x + 1/2: Y(x) = P(1/2 + x) P(1/2)^(-1) with P from mpmath's elliptic integrals
    Y = normalized_solution(gauss_manin(RationalMap.parse("x + 1/2")), 200)
    x0 = Fraction(1, 10)
    with mpmath.workprec(200):
        def P(lam):
            K, E = mpmath.ellipk(lam), mpmath.ellipe(lam)
            Kp, Ep = mpmath.ellipk(1 - lam), mpmath.ellipe(1 - lam)
            pii = mpmath.pi * 1j
            return mpmath.matrix([[K / pii, Kp / mpmath.pi], [(K - E) / pii, Ep / mpmath.pi]])
        ref = P(mpmath.mpf(0.6)) * P(mpmath.mpf(0.5)) ** -1
    val = evaluate_gmatrix(Y, x0, 200)
    for i in range(2):
        for j in range(2):
            got = complex(float(val[i][j].mid_re), float(val[i][j].mid_im))
            assert abs(got - complex(ref[i, j])) < 1e-14


def test_pole_at_zero_gives_resonance():
    with pytest.raises(ResonanceUnresolved):
        normalized_solution(gauss_manin(RationalMap.parse("1/x")), 10)


def test_constant_map_rejected():
    with pytest.raises(NotDefinedAtChart):
        gauss_manin(RationalMap.parse("1/3"))


@pytest.mark.parametrize("text,N", [("x", 2), ("2*x", 2), ("x**2", 4), ("x*(1 - x)", 2)])
def test_monodromy_factor(text, N):
    assert monodromy_factor(gauss_manin(RationalMap.parse(text))).N_k == N


def test_monodromy_factor_needs_singular():
    with pytest.raises(NotSingular):
        monodromy_factor(gauss_manin(RationalMap.parse("x + 1/2")))


def test_singular_first_column_scaling():
    fc = singular_first_column(gauss_manin(RationalMap.parse("x")), 10)
    assert fc.d_k == QuadFieldElem(0, Fraction(-1, 2), -1)
    assert fc.top.coefficients[1] == QuadFieldElem(0, Fraction(-1, 8), -1)
    with pytest.raises(NotSingular):
        singular_first_column(gauss_manin(RationalMap.parse("x + 1/2")), 10)


def test_family_solutions_shape():
    sols = family_solutions(bundled_family("default"), 12)
    assert [s.coordinate_index for s in sols] == [1, 2]
    assert all(s.order == 12 for s in sols)
