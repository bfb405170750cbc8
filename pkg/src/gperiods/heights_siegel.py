"""Weil heights, class-number ratio tables and the degree/discriminant report for CM fibers."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import mpmath
from flint import acb, arb, fmpq, fmpz_poly

from .cm import class_number, discriminants, heegner_scan
from .errors import MissingCertificates, RootIsolationFailed
from .numerics import ComplexBall, QuadFieldElem, as_bits, to_fraction, working_precision

DEFAULT_EPSILONS = (Fraction(1, 20), Fraction(1, 10), Fraction(1, 4), Fraction(9, 20))


# ---------------------------------------------------------------------------
# algebraic numbers and heights


def _primitive(coeffs: Sequence[int]) -> tuple[int, ...]:
    cs = [int(c) for c in coeffs]
    while cs and cs[-1] == 0:
        cs.pop()
    if not cs:
        raise ValueError("zero polynomial")
    g = 0
    for c in cs:
        g = math.gcd(g, c)
    cs = [c // g for c in cs]
    if cs[-1] < 0:
        cs = [-c for c in cs]
    return tuple(cs)


@dataclass(frozen=True)
class AlgebraicNumber:
    """A root of an irreducible primitive integer polynomial, selected by an isolating ball.

    ``min_poly`` lists coefficients from the constant term up.
    """

    min_poly: tuple
    approx: ComplexBall

    def __post_init__(self):
        object.__setattr__(self, "min_poly", _primitive(self.min_poly))
        fac = fmpz_poly(list(self.min_poly)).factor()
        if len(fac[1]) != 1 or fac[1][0][1] != 1:
            raise ValueError(f"polynomial {self.min_poly} is not irreducible over Q")
        roots = self._roots(128)
        hits = [r for r in roots if r.overlaps(self.approx)]
        if len(hits) != 1:
            raise RootIsolationFailed(f"ball meets {len(hits)} roots of the minimal polynomial")

    @property
    def degree(self) -> int:
        return len(self.min_poly) - 1

    def _roots(self, bits: int) -> list[ComplexBall]:
        with working_precision(bits):
            try:
                rs = fmpz_poly(list(self.min_poly)).complex_roots()
            except Exception as exc:  # pragma: no cover - flint raises on failure to isolate
                raise RootIsolationFailed(str(exc)) from exc
        return [ComplexBall(r, bits) for r, _ in rs]

    @classmethod
    def rational(cls, q) -> "AlgebraicNumber":
        q = to_fraction(q)
        return cls((-q.numerator, q.denominator), ComplexBall.exact(q, 0, 64))

    @classmethod
    def from_quadratic(cls, x: QuadFieldElem) -> "AlgebraicNumber":
        if x.b == 0:
            return cls.rational(x.a)
        return cls(tuple(reversed(x.min_poly())), x.embed(256))

    @classmethod
    def from_exact(cls, x) -> "AlgebraicNumber":
        if isinstance(x, AlgebraicNumber):
            return x
        if isinstance(x, QuadFieldElem):
            return cls.from_quadratic(x)
        return cls.rational(x)

    def power(self, n: int) -> "AlgebraicNumber":
        """x^n, with minimal polynomial from the resultant Res_y(f(y), t - y^n)."""
        import sympy

        t, y = sympy.symbols("t y")
        f = sum(c * y**i for i, c in enumerate(self.min_poly))
        res = sympy.Poly(sympy.resultant(f, t - y**n, y), t)
        target = self.approx**n
        for fac, _ in res.factor_list()[1]:
            cs = [int(c) for c in reversed(fac.all_coeffs())]
            cand = [r for r in AlgebraicNumber._roots_of(cs, 256) if r.overlaps(target)]
            if cand:
                # refine the ball so it isolates one root
                return AlgebraicNumber(tuple(cs), _isolating(cs, target))
        raise RootIsolationFailed("no factor of the resultant vanishes at x^n")

    @staticmethod
    def _roots_of(cs, bits):
        with working_precision(bits):
            return [ComplexBall(r, bits) for r, _ in fmpz_poly(list(cs)).complex_roots()]


def _isolating(cs, target: ComplexBall) -> ComplexBall:
    roots = AlgebraicNumber._roots_of(cs, 256)
    best = min(roots, key=lambda r: float((r - target).abs_upper()))
    return best


def weil_height(x, prec=128) -> ComplexBall:
    """(1/deg) (log |lead| + sum log+ |root|), as a real ball."""
    x = AlgebraicNumber.from_exact(x)
    bits = as_bits(prec)
    roots = x._roots(bits + 20)
    with working_precision(bits + 20):
        total = arb(x.min_poly[-1]).log()
        for r in roots:
            a = r.acb.abs_lower(), r.acb.abs_upper()
            lo, hi = arb(a[0]), arb(a[1])
            # log+ is monotone, so the enclosure is [log+ lo, log+ hi]
            lo_v = lo.log() if lo > 1 else arb(0)
            hi_v = hi.log() if hi > 1 else arb(0)
            total += lo_v.union(hi_v)
        h = total / x.degree
    return ComplexBall(acb(h), bits)


# ---------------------------------------------------------------------------
# class-number ratio tables


def _eps_label(e) -> str:
    return format(float(e), "g")


@dataclass(frozen=True)
class SiegelRow:
    D: int
    fundamental: bool
    h: int
    ratios: tuple  # one arb ball per epsilon


@dataclass
class SiegelTable:
    max_abs_D: int
    epsilons: tuple
    rows: list
    summary: list = field(default_factory=list)

    def argmin(self, eps_index: int = 0) -> SiegelRow:
        return self.summary[eps_index]

    def h1_fundamental(self) -> list[int]:
        return [r.D for r in self.rows if r.h == 1 and r.fundamental]

    def to_csv(self, digits: int = 20) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["D", "fundamental", "h"] + [f"ratio_eps_{_eps_label(e)}" for e in self.epsilons])
        for r in self.rows:
            w.writerow([r.D, int(r.fundamental), r.h] + [x.str(digits, radius=True) for x in r.ratios])
        return buf.getvalue()

    def summary_dict(self, digits: int = 20) -> list[dict]:
        return [
            {"epsilon": str(e), "argmin_D": row.D, "h": row.h, "min_ratio": row.ratios[i].str(digits, radius=True)}
            for i, (e, row) in enumerate(zip(self.epsilons, self.summary))
        ]


def siegel_table(max_abs_D: int, epsilon=DEFAULT_EPSILONS, prec: int = 128) -> SiegelTable:
    """h(D) / |D|^(1/2 - eps) for every negative discriminant with |D| <= max_abs_D.

    The summary records, per epsilon, the row of smallest ratio (ties broken by
    the smaller |D|).  It is an empirical lower bound on the range, nothing more.
    """
    if max_abs_D < 4:
        raise ValueError("max_abs_D must be at least 4")
    eps = tuple(to_fraction(e) for e in (epsilon if isinstance(epsilon, (list, tuple)) else [epsilon]))
    for e in eps:
        if not 0 < e <= Fraction(1, 2):
            raise ValueError(f"epsilon {e} outside (0, 1/2]")
    rows = []
    with working_precision(prec):
        exps = [arb(fmpq(e.numerator, e.denominator)) for e in eps]
        half = arb(fmpq(1, 2))
        for D in discriminants(max_abs_D):
            o = class_number(D)
            logD = arb(-D).log()
            ratios = tuple(arb(o.h) / ((half - x) * logD).exp() for x in exps)
            rows.append(SiegelRow(D, o.fundamental, o.h, ratios))
        summary = []
        for i in range(len(eps)):
            summary.append(min(rows, key=lambda r: (float(r.ratios[i].mid()), -r.D)))
    return SiegelTable(max_abs_D, eps, rows, summary)


def heegner_subset_matches(table: SiegelTable) -> bool:
    return table.h1_fundamental() == heegner_scan(table.max_abs_D)


# ---------------------------------------------------------------------------
# degree/discriminant report


@dataclass
class OrbitBoundReport:
    point: str
    height: ComplexBall
    relation_degree: int
    L_degree: int
    K_degree: int
    max_abs_disc: int
    discriminants: list
    c1: object
    c2: object
    c01: object

    def inequalities(self) -> dict:
        M, K = self.max_abs_disc, self.K_degree
        h = f"{mpmath.nstr(self.height.mid_re, 15)} +/- {mpmath.nstr(self.height.rad, 3)}"
        out = {
            "galois_orbit": f"[K(s):Q] >= c1*M^c2 with M = {M}, [K(s):Q] = {K}",
            "height": f"h(x(s)) <= c01*deg(R)^c2 with h(x(s)) = {h}, deg(R) = {self.relation_degree}",
        }
        if _numeric(self.c1) and _numeric(self.c2):
            out["galois_orbit_holds"] = K >= float(self.c1) * M ** float(self.c2)
        if _numeric(self.c01) and _numeric(self.c2):
            out["height_holds"] = float(self.height.mid_re) <= float(self.c01) * self.relation_degree ** float(self.c2)
        return out

    def as_dict(self) -> dict:
        return {
            "point": self.point,
            "height": {"mid": mpmath.nstr(self.height.mid_re, 20), "rad": mpmath.nstr(self.height.rad, 5)},
            "relation_degree": self.relation_degree,
            "relation_degree_bound": 2 * self.L_degree,
            "L_s_degree": self.L_degree,
            "K_s_degree": self.K_degree,
            "max_abs_disc": self.max_abs_disc,
            "discriminants": self.discriminants,
            "constants": {"c1": str(self.c1), "c2": str(self.c2), "c01": str(self.c01)},
            "inequalities": self.inequalities(),
        }


def _numeric(c) -> bool:
    try:
        float(c)
        return True
    except (TypeError, ValueError):
        return False


def galois_orbit_bound_report(spec, point, certificates: Sequence, c1="c1", c2="c2", c01="c01") -> OrbitBoundReport:
    """Collect h(x(s)), deg R, [L_s:Q], [K(s):Q] and max |disc| and substitute them in both bound shapes."""
    from .family import CoordKind, classify_lambda
    from .relations import _as_exact_point

    s = _as_exact_point(point)
    if not certificates:
        raise MissingCertificates("no relation certificate supplied")
    discs = []
    for k, g in enumerate(spec.coords, start=1):
        c = classify_lambda(g(s))
        if c.kind != CoordKind.SMOOTH_CM:
            raise MissingCertificates(f"coordinate {k} is not CM at s = {s}")
        discs.append(c.cm_discriminant)
    for cert in certificates:
        if str(cert.point) != str(s):
            raise MissingCertificates(f"certificate is for {cert.point}, not {s}")
    cert = certificates[0]
    deg_R = max(c.polynomial.degree for c in certificates)
    return OrbitBoundReport(
        point=str(s),
        height=weil_height(s),
        relation_degree=deg_R,
        L_degree=cert.field_degree,
        K_degree=cert.point_field_degree,
        max_abs_disc=max(abs(D) for D in discs),
        discriminants=discs,
        c1=c1,
        c2=c2,
        c01=c01,
    )
