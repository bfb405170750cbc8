"""Families of Legendre curves over a punctured disc and coordinate classification.

A family is given by ``n`` rational maps ``g_k(x)`` into the Legendre line;
the fiber over ``x`` is the product of the curves y^2 = X(X-1)(X-g_k(x)).
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Sequence

import sympy

from .errors import CMDetectionInconclusive, FamilyFormatError, PoleAtInput
from .numerics import ComplexBall, QuadFieldElem, as_bits, to_fraction

_X = sympy.Symbol("x")


# ---------------------------------------------------------------------------
# exact polynomials (coefficient lists, constant term first)


def poly_trim(p: Sequence) -> list:
    p = list(p)
    while p and p[-1] == 0:
        p.pop()
    return p


def poly_add(p, q):
    n = max(len(p), len(q))
    return poly_trim([(p[i] if i < len(p) else 0) + (q[i] if i < len(q) else 0) for i in range(n)])


def poly_sub(p, q):
    return poly_add(p, [-c for c in q])


def poly_mul(p, q):
    if not p or not q:
        return []
    out = [0] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a == 0:
            continue
        for j, b in enumerate(q):
            out[i + j] += a * b
    return poly_trim(out)


def poly_deriv(p):
    return poly_trim([i * c for i, c in enumerate(p)][1:])


def poly_eval(p, x):
    acc = 0
    for c in reversed(p):
        acc = acc * x + c
    return acc


def series_inverse(p, order: int):
    """Power series 1/p mod x^order; requires p[0] != 0."""
    if not p or p[0] == 0:
        raise ZeroDivisionError("series inverse needs a nonzero constant term")
    inv0 = 1 / Fraction(p[0]) if not isinstance(p[0], QuadFieldElem) else p[0].inverse()
    out = [inv0]
    for n in range(1, order):
        s = 0
        for k in range(1, min(n, len(p) - 1) + 1):
            s += p[k] * out[n - k]
        out.append(-s * inv0)
    return out[:order]


def series_mul(p, q, order: int):
    out = [Fraction(0)] * order
    for i, a in enumerate(p[:order]):
        if a == 0:
            continue
        for j, b in enumerate(q[: order - i]):
            out[i + j] += a * b
    return out


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RationalMap:
    """g(x) = num(x)/den(x) with exact rational coefficients (constant term first)."""

    num: tuple
    den: tuple = (Fraction(1),)
    text: str = ""

    def __post_init__(self):
        num = tuple(poly_trim(to_fraction(c) for c in self.num))
        den = tuple(poly_trim(to_fraction(c) for c in self.den))
        if not den:
            raise FamilyFormatError("zero denominator")
        # cancel common powers of x
        while num and num[0] == 0 and den[0] == 0:
            num, den = num[1:], den[1:]
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)
        if not self.text:
            object.__setattr__(self, "text", str(self.as_sympy()))

    @classmethod
    def parse(cls, text: str) -> "RationalMap":
        try:
            expr = sympy.sympify(text, locals={"x": _X}, rational=True)
        except (sympy.SympifyError, SyntaxError, TypeError) as exc:
            raise FamilyFormatError(f"cannot parse rational map {text!r}: {exc}") from exc
        if expr.free_symbols - {_X}:
            raise FamilyFormatError(f"rational map {text!r} may only involve x")
        num, den = sympy.fraction(sympy.cancel(sympy.together(expr)))
        try:
            pn = sympy.Poly(num, _X, domain="QQ")
            pd = sympy.Poly(den, _X, domain="QQ")
        except sympy.PolynomialError as exc:
            raise FamilyFormatError(f"{text!r} is not a rational function of x") from exc
        to_list = lambda p: [Fraction(int(c.p), int(c.q)) for c in reversed(p.all_coeffs())]
        return cls(tuple(to_list(pn)), tuple(to_list(pd)), text.strip())

    def as_sympy(self):
        n = sum(sympy.Rational(c.numerator, c.denominator) * _X**i for i, c in enumerate(self.num))
        d = sum(sympy.Rational(c.numerator, c.denominator) * _X**i for i, c in enumerate(self.den))
        return sympy.simplify(n / d)

    def __call__(self, x):
        d = poly_eval(self.den, x)
        if isinstance(d, ComplexBall):
            if d.contains_zero():
                raise PoleAtInput("denominator ball contains 0")
        elif d == 0:
            raise PoleAtInput("g has a pole at the input")
        return poly_eval(self.num, x) / d

    def value_at_zero(self):
        """g(0) as a Fraction, or None when g has a pole at 0."""
        if self.den[0] == 0:
            return None
        return (self.num[0] if self.num else Fraction(0)) / self.den[0]

    def derivative(self) -> "RationalMap":
        n, d = list(self.num), list(self.den)
        return RationalMap(
            tuple(poly_sub(poly_mul(poly_deriv(n), d), poly_mul(n, poly_deriv(d))) or [0]),
            tuple(poly_mul(d, d)),
        )

    def is_constant(self) -> bool:
        return len(self.num) <= 1 and len(self.den) <= 1

    def singular_points(self) -> list[complex]:
        """Roots of g = 0, g = 1 and of the denominator (numeric, for radius bookkeeping)."""
        import numpy as np

        out = []
        for p in (list(self.num), poly_sub(list(self.num), list(self.den)), list(self.den)):
            p = poly_trim(p)
            if len(p) > 1:
                out.extend(complex(r) for r in np.roots([float(c) for c in reversed(p)]))
        return out


class CoordKind(str, Enum):
    SMOOTH = "Smooth"
    SMOOTH_CM = "SmoothCM"
    SINGULAR = "Singular"


@dataclass(frozen=True)
class CoordClass:
    kind: CoordKind
    cm_discriminant: int | None
    limit_lambda: object  # Fraction, ComplexBall, or the string "inf"
    warning: str | None = None
    confirmed: bool = True


@dataclass(frozen=True)
class FamilySpec:
    n: int
    coords: tuple[RationalMap, ...]
    base_field_label: str = "Q"
    name: str = ""

    def __post_init__(self):
        coords = tuple(c if isinstance(c, RationalMap) else RationalMap.parse(c) for c in self.coords)
        object.__setattr__(self, "coords", coords)
        if self.n != len(coords) or self.n < 1:
            raise FamilyFormatError(f"n = {self.n} does not match {len(coords)} coordinates")
        for k, g in enumerate(coords, 1):
            if g.is_constant():
                raise FamilyFormatError(f"coordinate {k} is constant")

    @classmethod
    def from_strings(cls, maps: Sequence[str], name: str = "") -> "FamilySpec":
        return cls(len(maps), tuple(RationalMap.parse(m) for m in maps), name=name)

    @classmethod
    def from_json(cls, data) -> "FamilySpec":
        if isinstance(data, (str, bytes)):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as exc:
                raise FamilyFormatError(f"family file is not valid JSON: {exc}") from exc
        try:
            n = int(data["n"])
            maps = [c["g"] for c in data["coords"]]
        except (KeyError, TypeError, ValueError) as exc:
            raise FamilyFormatError("family JSON needs 'n' and 'coords': [{'g': ...}]") from exc
        return cls(n, tuple(RationalMap.parse(m) for m in maps), name=data.get("name", ""))

    def to_json(self) -> dict:
        return {"n": self.n, "coords": [{"g": g.text} for g in self.coords]}


BUNDLED_FAMILIES = {
    # singular coordinate plus a j = 1728 coordinate; over x = 1/2 the fibers
    # are lambda = 1/2 and lambda = -1, both with CM by Z[i]
    "default": ("x", "-1 + x/2 - x**2"),
    # over x = 1/2 + sqrt(-7)/7 both fibers have CM by the maximal order of Q(sqrt(-7)),
    # while the second coordinate is a j = 1728 fiber at x = 0
    "sqrt-7": ("463/176*x - 441/176*x**2 + 7/8*x**3", "-1 + 491/176*x - 469/176*x**2 + 7/8*x**3"),
    # one j = 1728 coordinate reaching lambda = 1/2 over x = 1/3 + 4i/9
    "gaussian-single": ("-1 + 9686/2025*x - 1229/150*x**2 + 5*x**3",),
    "legendre-shift": ("x", "x + 1/2"),
    "diagonal": ("-1 + x/2 - x**2", "-1 + x/2 - x**2"),
    "two-singular": ("x", "1 - x"),
    "non-cm": ("x", "x + 1/3"),
}


def bundled_family(name: str) -> FamilySpec:
    try:
        maps = BUNDLED_FAMILIES[name]
    except KeyError as exc:
        raise FamilyFormatError(f"unknown bundled family {name!r}; known: {sorted(BUNDLED_FAMILIES)}") from exc
    return FamilySpec.from_strings(maps, name=name)


def load_family(ref: str) -> FamilySpec:
    """A bundled family name or a path to a family JSON file."""
    if ref in BUNDLED_FAMILIES:
        return bundled_family(ref)
    try:
        with open(ref, encoding="utf-8") as fh:
            return FamilySpec.from_json(fh.read())
    except OSError as exc:
        raise FamilyFormatError(f"cannot read family file {ref!r}: {exc}") from exc


# ---------------------------------------------------------------------------
# j-invariant and classification


def j_invariant(lam):
    """256 (l^2 - l + 1)^3 / (l^2 (1 - l)^2), exact for rationals, enclosed for balls."""
    if isinstance(lam, ComplexBall):
        d = lam * lam * (1 - lam) * (1 - lam)
        if d.contains_zero():
            raise PoleAtInput("lambda ball meets {0, 1}")
        return 256 * (lam * lam - lam + 1) ** 3 / d
    if isinstance(lam, QuadFieldElem):
        if lam == 0 or lam == 1:
            raise PoleAtInput("lambda must avoid 0 and 1")
        return 256 * (lam * lam - lam + 1) ** 3 / (lam * lam * (1 - lam) * (1 - lam))
    lam = to_fraction(lam)
    if lam in (0, 1):
        raise PoleAtInput("lambda must avoid 0 and 1")
    return 256 * (lam * lam - lam + 1) ** 3 / (lam * lam * (1 - lam) ** 2)


def classify_lambda(value, prec=256, max_abs_D: int = 10_000) -> CoordClass:
    """Classify the fiber over lambda = value (exact rational, quadratic element or ball)."""
    from .cm import rational_singular_moduli, singular_moduli_balls

    if value is None or (isinstance(value, str) and value == "inf"):
        return CoordClass(CoordKind.SINGULAR, None, "inf")
    if isinstance(value, ComplexBall):
        if value.contains(0) or value.contains(1):
            return CoordClass(CoordKind.SINGULAR, None, value, confirmed=False)
        bits = as_bits(prec)
        j = j_invariant(value.with_prec(bits))
        for D, jD in singular_moduli_balls(max_abs_D, bits):
            if j.overlaps(jD):
                return CoordClass(CoordKind.SMOOTH_CM, D, value, "numeric match only", False)
        msg = f"no singular modulus with |D| <= {max_abs_D} matches; reported Smooth"
        warnings.warn(CMDetectionInconclusive(msg).args[0], stacklevel=2)
        return CoordClass(CoordKind.SMOOTH, None, value, msg, False)
    if isinstance(value, QuadFieldElem) and not value.is_rational():
        j = j_invariant(value)
        moduli = rational_singular_moduli(max_abs_D, 256)
        if j.is_rational() and j.a.denominator == 1 and int(j.a) in moduli:
            return CoordClass(CoordKind.SMOOTH_CM, moduli[int(j.a)], value)
        # non-rational j: compare numerically against the tabulated moduli
        ball = classify_lambda(value.embed(prec), prec, max_abs_D)
        return CoordClass(ball.kind, ball.cm_discriminant, value, ball.warning, False)
    lam = to_fraction(value.a if isinstance(value, QuadFieldElem) else value)
    if lam in (0, 1):
        return CoordClass(CoordKind.SINGULAR, None, lam)
    j = j_invariant(lam)
    # singular moduli are algebraic integers; rational ones come from h(D) = 1
    if j.denominator == 1:
        D = rational_singular_moduli(max_abs_D, 256).get(int(j))
        if D is not None:
            return CoordClass(CoordKind.SMOOTH_CM, D, lam)
    return CoordClass(CoordKind.SMOOTH, None, lam)


def classify_coordinates(spec: FamilySpec, prec=256, max_abs_D: int = 10_000) -> list[CoordClass]:
    return [classify_lambda(g.value_at_zero(), prec, max_abs_D) for g in spec.coords]


def is_gao_admissible(classes: Sequence[CoordClass]) -> tuple[bool, str]:
    if not classes:
        raise ValueError("need at least one coordinate")
    n_cm = sum(c.kind == CoordKind.SMOOTH_CM for c in classes)
    n_sing = sum(c.kind == CoordKind.SINGULAR for c in classes)
    if n_cm >= 1:
        return True, "CM clause"
    if n_sing >= 2:
        return True, "two singular clause"
    return False, "no CM coordinate and fewer than two singular coordinates"
