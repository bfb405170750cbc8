import csv
import io
import math
from fractions import Fraction

import pytest
from flint import acb, arb
from hypothesis import given
from hypothesis import strategies as st

from gperiods.cm import heegner_scan
from gperiods.errors import MissingCertificates, RootIsolationFailed
from gperiods.family import bundled_family
from gperiods.heights_siegel import (
    AlgebraicNumber,
    galois_orbit_bound_report,
    heegner_subset_matches,
    siegel_table,
    weil_height,
)
from gperiods.numerics import ComplexBall, QuadFieldElem
from gperiods.relations import build_relation



def _disc(mid, rad):
    return ComplexBall(acb(arb(mid, rad)), 64)


SQRT2 = AlgebraicNumber((-2, 0, 1), _disc(1.4142, 1e-3))


def _val(b):
    return float(b.mid_re)


def test_weil_height_values():
    assert _val(weil_height(Fraction(1, 2))) == pytest.approx(math.log(2), abs=1e-30)
    assert _val(weil_height(0)) == 0
    assert _val(weil_height(SQRT2)) == pytest.approx(math.log(2) / 2, abs=1e-15)
    assert weil_height(Fraction(1, 2)).rad < 1e-30


def test_weil_height_quadratic_oracle():
    # (1 + 2i)/5 has minimal polynomial 25 x^2 - 10 x + 5 -> h = log(25)/2 since both roots lie in the unit disc
    x = QuadFieldElem(Fraction(1, 5), Fraction(2, 5), -1)
    assert _val(weil_height(x)) == pytest.approx(math.log(5) / 2, abs=1e-15)


@given(st.fractions(max_denominator=1000).filter(lambda q: q != 0), st.integers(1, 6))
def test_weil_height_power_rule(q, n):
    assert _val(weil_height(q**n)) == pytest.approx(n * _val(weil_height(q)), rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("n", [2, 3])
def test_weil_height_power_rule_algebraic(n):
    assert _val(weil_height(SQRT2.power(n))) == pytest.approx(n * math.log(2) / 2, rel=1e-12)


def test_algebraic_number_checks():
    with pytest.raises(ValueError):
        AlgebraicNumber((-1, 0, 1), ComplexBall.exact(1, 0, 64))
    with pytest.raises(RootIsolationFailed):
        AlgebraicNumber((-2, 0, 1), _disc(0, 2))


def test_siegel_half_ratio_is_class_number():
    t = siegel_table(200, Fraction(1, 2))
    for r in t.rows:
        assert r.ratios[0].contains(r.h)
        assert r.h >= 1


def test_siegel_range_and_heegner():
    t = siegel_table(200, Fraction(1, 10))
    assert -163 in [r.D for r in t.rows]
    assert t.h1_fundamental() == heegner_scan(200)
    assert len(t.h1_fundamental()) == 9
    assert heegner_subset_matches(t)


def test_siegel_csv_and_determinism():
    a = siegel_table(300).to_csv()
    assert a == siegel_table(300).to_csv()
    header = next(csv.reader(io.StringIO(a)))
    assert header == ["D", "fundamental", "h", "ratio_eps_0.05", "ratio_eps_0.1", "ratio_eps_0.25", "ratio_eps_0.45"]


def test_siegel_rejects_bad_epsilon():
    with pytest.raises(ValueError):
        siegel_table(100, Fraction(3, 4))


def test_orbit_report():
    spec = bundled_family("default")
    cert = build_relation(spec, Fraction(1, 2), 512, 50)
    r = galois_orbit_bound_report(spec, Fraction(1, 2), [cert])
    ineq = r.inequalities()
    assert ineq["galois_orbit"].startswith("[K(s):Q] >= c1*M^c2 with M = 4")
    assert r.relation_degree <= 2 * r.L_degree
    assert _val(r.height) == pytest.approx(math.log(2))
    with pytest.raises(MissingCertificates):
        galois_orbit_bound_report(spec, Fraction(1, 2), [])
    with pytest.raises(MissingCertificates):
        galois_orbit_bound_report(spec, Fraction(1, 3), [cert])
    numeric = galois_orbit_bound_report(spec, Fraction(1, 2), [cert], 1, Fraction(1, 10), 1).inequalities()
    # [K(s):Q] = 1 < 4^(1/10)
    assert numeric["galois_orbit_holds"] is False
    assert numeric["height_holds"] is True
