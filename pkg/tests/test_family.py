import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from gperiods.errors import FamilyFormatError, PoleAtInput
from gperiods.family import (
    BUNDLED_FAMILIES,
    CoordKind,
    FamilySpec,
    RationalMap,
    bundled_family,
    classify_coordinates,
    classify_lambda,
    is_gao_admissible,
    j_invariant,
    load_family,
)
from gperiods.numerics import ComplexBall, QuadFieldElem


def test_parse_and_evaluate():
    g = RationalMap.parse("(x+1)/2")
    assert g.value_at_zero() == Fraction(1, 2)
    assert g(Fraction(1, 3)) == Fraction(2, 3)
    h = RationalMap.parse("x/(1-x)")
    with pytest.raises(PoleAtInput):
        h(1)


def test_parse_rejects_other_symbols():
    with pytest.raises(FamilyFormatError):
        RationalMap.parse("x + y")
    with pytest.raises(FamilyFormatError):
        RationalMap.parse("sin(x)")


def test_json_roundtrip(tmp_path):
    data = {"n": 2, "coords": [{"g": "x"}, {"g": "(x+1)/2"}]}
    spec = FamilySpec.from_json(data)
    assert spec.n == 2
    again = FamilySpec.from_json(json.dumps(spec.to_json()))
    assert [c.num for c in again.coords] == [c.num for c in spec.coords]
    path = tmp_path / "fam.json"
    path.write_text(json.dumps(data))
    assert load_family(str(path)).coords[1].value_at_zero() == Fraction(1, 2)


def test_json_errors():
    with pytest.raises(FamilyFormatError):
        FamilySpec.from_json({"n": 3, "coords": [{"g": "x"}]})
    with pytest.raises(FamilyFormatError):
        FamilySpec.from_json("not json")
    with pytest.raises(FamilyFormatError):
        load_family("no-such-family-or-file")


def test_bundled_families_load():
    for name in BUNDLED_FAMILIES:
        assert bundled_family(name).n == len(BUNDLED_FAMILIES[name])


@pytest.mark.parametrize("lam,kind,D", [
    (Fraction(-1), CoordKind.SMOOTH_CM, -4),
    (Fraction(1, 2), CoordKind.SMOOTH_CM, -4),
    (Fraction(2), CoordKind.SMOOTH_CM, -4),
    (Fraction(0), CoordKind.SINGULAR, None),
    (Fraction(1), CoordKind.SINGULAR, None),
    (Fraction(1, 3), CoordKind.SMOOTH, None),
    (QuadFieldElem(Fraction(1, 2), Fraction(1, 2), -3), CoordKind.SMOOTH_CM, -3),
    (QuadFieldElem(Fraction(31, 32), Fraction(3, 32), -7), CoordKind.SMOOTH_CM, -7),
])
def test_classify_lambda(lam, kind, D):
    c = classify_lambda(lam)
    assert c.kind == kind
    assert c.cm_discriminant == D


def test_classify_numeric_ball():
    c = classify_lambda(ComplexBall.exact(-1, 0, 256))
    assert c.kind == CoordKind.SMOOTH_CM and c.cm_discriminant == -4 and not c.confirmed


def test_admissibility():
    ok, reason = is_gao_admissible(classify_coordinates(bundled_family("default")))
    assert ok and reason == "CM clause"
    ok, reason = is_gao_admissible(classify_coordinates(bundled_family("two-singular")))
    assert ok and reason == "two singular clause"
    ok, _ = is_gao_admissible(classify_coordinates(bundled_family("non-cm")))
    assert not ok


lams = st.fractions(min_value=-20, max_value=20, max_denominator=50).filter(lambda q: q not in (0, 1))


@given(lams)
def test_j_invariant_symmetric_under_lambda_group(lam):
    j = j_invariant(lam)
    assert j == j_invariant(1 - lam) == j_invariant(1 / lam) == j_invariant(lam / (lam - 1))


def test_j_1728():
    assert j_invariant(Fraction(-1)) == 1728


def test_singular_points():
    pts = RationalMap.parse("x + 1/2").singular_points()
    assert sorted(round(abs(p), 12) for p in pts) == [0.5, 0.5]
