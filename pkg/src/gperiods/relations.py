"""Polynomial relations among G-function values at CM fibers.

Variables are the entries X[i,j,k] of the normalized solutions Y_k.  For a
singular coordinate only the first-column variables X[i,1,k] are used.
"""

from __future__ import annotations

import itertools
import random
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import mpmath

from .errors import (
    AmbiguousCandidate,
    NonCMFiber,
    NotCMFiber,
    NotFound,
    NotGAOAdmissible,
    NotImplementedCase,
    RecognitionFailed,
    ResidualExcludesZero,
    ResidualNonZero,
    TrivialRelationProduced,
    TruncationDominates,
    UnexpectedRelationFound,
    UndecidableAtPrecision,
)
from .family import (
    CoordKind,
    FamilySpec,
    RationalMap,
    classify_coordinates,
    classify_lambda,
    is_gao_admissible,
)
from .gfunctions import GSeries, family_radius, proximity
from .numerics import (
    ComplexBall,
    QuadField,
    QuadFieldElem,
    as_bits,
    conj_elem,
    recognize_algebraic,
    squarefree_part,
    to_fraction,
)
from .periods import PeriodMatrix, continued_solution, evaluate_gmatrix, legendre_periods, mat2_inv, mat2_mul
from .picard_fuchs import GMatrix, gauss_manin, normalized_solution, singular_first_column

Var = tuple  # (i, j, k)
Monomial = tuple  # sorted tuple of Var, with repetition


def var_name(v: Var) -> str:
    return f"X[{v[0]},{v[1]},{v[2]}]"


def _exact_str(c) -> str:
    return str(c)


def _is_zero(c) -> bool:
    return c == 0


# ---------------------------------------------------------------------------
# polynomials


@dataclass(frozen=True)
class RelationPolynomial:
    """Sparse polynomial with exact coefficients (Fraction or QuadFieldElem)."""

    terms: tuple  # ((monomial, coefficient), ...) sorted by monomial

    @classmethod
    def from_dict(cls, d: Mapping) -> "RelationPolynomial":
        items = [(tuple(sorted(m)), c) for m, c in d.items() if not _is_zero(c)]
        merged: dict = {}
        for m, c in items:
            merged[m] = merged.get(m, 0) + c
        return cls(tuple(sorted(((m, c) for m, c in merged.items() if not _is_zero(c)), key=lambda t: t[0])))

    def as_mapping(self) -> dict:
        return dict(self.terms)

    @property
    def variables(self) -> list[Var]:
        return sorted({v for m, _ in self.terms for v in m})

    @property
    def degree(self) -> int:
        return max((len(m) for m, _ in self.terms), default=0)

    def is_homogeneous(self) -> bool:
        return len({len(m) for m, _ in self.terms}) <= 1

    def is_zero(self) -> bool:
        return not self.terms

    def __mul__(self, other: "RelationPolynomial") -> "RelationPolynomial":
        out: dict = {}
        for (m1, c1), (m2, c2) in itertools.product(self.terms, other.terms):
            m = tuple(sorted(m1 + m2))
            out[m] = out.get(m, 0) + c1 * c2
        return RelationPolynomial.from_dict(out)

    def normalized(self) -> "RelationPolynomial":
        """Scale so that the coefficient of the first monomial is 1."""
        if not self.terms:
            return self
        lead = self.terms[0][1]
        return RelationPolynomial(tuple((m, c / lead) for m, c in self.terms))

    def galois_conjugate(self) -> "RelationPolynomial":
        return RelationPolynomial(tuple((m, conj_elem(c)) for m, c in self.terms))

    def evaluate(self, values: Mapping[Var, ComplexBall], prec=256, conjugate: bool = False) -> ComplexBall:
        bits = as_bits(prec)
        acc = ComplexBall(0, bits)
        for m, c in self.terms:
            t = _embed(c, bits, conjugate)
            for v in m:
                t = t * values[v]
            acc = acc + t
        return acc

    def substitute(self, series: Mapping[Var, GSeries], order: int) -> list:
        """Coefficients of R(series) modulo x^order."""
        out = [0] * order
        for m, c in self.terms:
            prod = [c] + [0] * (order - 1)
            for v in m:
                s = series[v].coefficients
                nxt = [0] * order
                for a, pa in enumerate(prod):
                    if _is_zero(pa):
                        continue
                    for b in range(min(len(s), order - a)):
                        if not _is_zero(s[b]):
                            nxt[a + b] = nxt[a + b] + pa * s[b]
                prod = nxt
            out = [x + y for x, y in zip(out, prod)]
        return out

    def as_dict(self) -> dict:
        return {
            "degree": self.degree,
            "homogeneous": self.is_homogeneous(),
            "terms": [
                {"monomial": [var_name(v) for v in m], "coefficient": _exact_str(c)} for m, c in self.terms
            ],
        }


def _embed(c, bits: int, conjugate: bool = False) -> ComplexBall:
    if isinstance(c, QuadFieldElem):
        return c.embed(bits, conjugate)
    return ComplexBall.exact(to_fraction(c), 0, bits)


# ---------------------------------------------------------------------------
# trivial relations


@dataclass(frozen=True)
class SeriesCheck:
    coordinate: int
    order: int
    first_nonzero: int | None

    def as_dict(self):
        return {"coordinate": self.coordinate, "order": self.order, "det_minus_one_zero": self.first_nonzero is None}


def trivial_relation_series_check(Y: GMatrix, order: int | None = None, basis_change=None) -> SeriesCheck:
    """Check det Y - 1 = 0 modulo x^order exactly.

    ``basis_change`` is an optional exact 2x2 matrix B applied as Y -> B Y,
    which models a mis-normalized de Rham basis.
    """
    order = Y.order + 1 if order is None else order
    if order > Y.order + 1:
        raise ValueError(f"order {order} exceeds the available {Y.order + 1} coefficients")
    Yt = Y.truncate(order - 1)
    if basis_change is not None:
        Yt = GMatrix(tuple(mat2_mul(basis_change, Yn) for Yn in Yt.coefficients), Y.coordinate_index, Y.residue)
    det = Yt.det_series()
    det[0] -= 1
    bad = next((n for n, c in enumerate(det) if c != 0), None)
    if bad is not None:
        raise ResidualNonZero(f"det Y - 1 has nonzero coefficient {det[bad]} at x^{bad}")
    return SeriesCheck(Y.coordinate_index, order, None)


def trivial_relation_numeric_check(P: PeriodMatrix, prec=256) -> ComplexBall:
    """Check that det P - 1/(2 pi i) is a ball containing 0; return the residual ball."""
    bits = as_bits(prec)
    r = P.det() - 1 / ComplexBall.two_pi_i(bits)
    if not r.contains_zero():
        raise ResidualExcludesZero(f"det P - 1/(2 pi i) excludes 0 (|r| >= {mpmath.nstr(r.abs_lower(), 5)})")
    return r


# ---------------------------------------------------------------------------
# Zariski closure heuristic


def relation_variables(spec: FamilySpec, order: int = 50) -> dict:
    """Series attached to each variable X[i,j,k]."""
    out = {}
    for k, cls in enumerate(classify_coordinates(spec), start=1):
        G = gauss_manin(spec, k)
        if cls.kind == CoordKind.SINGULAR:
            Y = normalized_solution(G, order - 1)
            # the first column up to the constant d_k; relations are unaffected by it
            out[(1, 1, k)] = Y.entry(1, 1)
            out[(2, 1, k)] = Y.entry(2, 1)
        else:
            Y = normalized_solution(G, order - 1)
            for i, j in itertools.product((1, 2), repeat=2):
                out[(i, j, k)] = Y.entry(i, j)
    return out


def _monomials(variables: Sequence[Var], degree: int) -> list[Monomial]:
    out = []
    for d in range(degree + 1):
        out.extend(itertools.combinations_with_replacement(variables, d))
    return out


def _series_product(series: Mapping[Var, GSeries], m: Monomial, order: int) -> list[Fraction]:
    return RelationPolynomial(((m, Fraction(1)),)).substitute(series, order)


@dataclass
class ClosureReport:
    degree: int
    order: int
    n_variables: int
    n_monomials: int
    kernel_dimension: int
    expected_dimension: int
    expected: list = field(default_factory=list)
    extra: list = field(default_factory=list)
    sampled: int = 0
    sampled_vanishing: int = 0

    @property
    def consistent(self) -> bool:
        return self.kernel_dimension == self.expected_dimension and self.sampled_vanishing == 0

    def as_dict(self) -> dict:
        return {
            "degree": self.degree,
            "order": self.order,
            "variables": self.n_variables,
            "monomials": self.n_monomials,
            "kernel_dimension": self.kernel_dimension,
            "expected_dimension": self.expected_dimension,
            "expected": self.expected,
            "extra": self.extra,
            "sampled": self.sampled,
            "sampled_vanishing": self.sampled_vanishing,
            "consistent": self.consistent,
        }


def _det_relations(spec: FamilySpec, monos: list[Monomial]) -> list[dict]:
    """The relations det Y_k - 1 for smooth coordinates, as monomial-coefficient maps."""
    out = []
    for k, cls in enumerate(classify_coordinates(spec), start=1):
        if cls.kind == CoordKind.SINGULAR:
            continue
        out.append({
            ((1, 1, k), (2, 2, k)): Fraction(1),
            ((1, 2, k), (2, 1, k)): Fraction(-1),
            (): Fraction(-1),
        })
    return out


def zariski_closure_report(spec: FamilySpec, degree: int = 2, order: int = 50, samples: int = 1000,
                           seed: int = 0) -> ClosureReport:
    """Kernel of the evaluation map on polynomials of bounded degree, modulo x^order.

    The kernel is compared with the span of the determinant relations; any extra
    vector raises UnexpectedRelationFound carrying the report.
    """
    from sympy import QQ
    from sympy.polys.matrices import DomainMatrix

    series = relation_variables(spec, order)
    variables = sorted(series)
    monos = _monomials(variables, degree)
    rows = [_series_product(series, m, order) for m in monos]
    # columns of M^T are monomials; its nullspace is the space of relations
    MT = DomainMatrix([[QQ(rows[r][n].numerator, rows[r][n].denominator) for r in range(len(monos))]
                       for n in range(order)], (order, len(monos)), QQ)
    kernel = MT.nullspace().to_Matrix() if len(monos) else None
    kdim = 0 if kernel is None else kernel.rows
    index = {m: i for i, m in enumerate(monos)}
    expected = [rel for rel in _det_relations(spec, monos) if degree >= 2]
    expected_vecs = []
    for rel in expected:
        v = [Fraction(0)] * len(monos)
        for m, c in rel.items():
            v[index[tuple(sorted(m))]] = c
        expected_vecs.append(v)
    report = ClosureReport(degree, order, len(variables), len(monos), kdim, len(expected_vecs),
                           expected=[_rel_str(rel) for rel in expected])
    for v in expected_vecs:
        if any(sum(rows[r][n] * v[r] for r in range(len(monos))) != 0 for n in range(order)):
            raise ResidualNonZero("a determinant relation fails on the series")
    if kdim > len(expected_vecs):
        basis = [[Fraction(int(kernel[i, j].p), int(kernel[i, j].q)) for j in range(len(monos))] for i in range(kdim)]
        report.extra = [_vec_str(b, monos) for b in _outside_span(basis, expected_vecs)]
        raise UnexpectedRelationFound(
            f"kernel dimension {kdim} exceeds the {len(expected_vecs)} determinant relations", report
        )
    # random relations outside the determinant span must not vanish
    rng = random.Random(seed)
    bad = 0
    for _ in range(samples):
        v = [Fraction(rng.randint(-5, 5)) for _ in monos]
        if _in_span(v, expected_vecs):
            continue
        report.sampled += 1
        if all(sum(rows[r][n] * v[r] for r in range(len(monos))) == 0 for n in range(order)):
            bad += 1
    report.sampled_vanishing = bad
    if bad:
        raise UnexpectedRelationFound(f"{bad} sampled relations outside the determinant span vanish", report)
    return report


def _rank(vectors: list[list[Fraction]]) -> int:
    from sympy import Matrix

    if not vectors:
        return 0
    return Matrix(vectors).rank()


def _in_span(v, basis) -> bool:
    return _rank(basis + [v]) == _rank(basis)


def _outside_span(vectors, basis):
    out, cur = [], list(basis)
    for v in vectors:
        if not _in_span(v, cur):
            out.append(v)
            cur.append(v)
    return out


def _rel_str(rel: Mapping) -> str:
    parts = []
    for m, c in rel.items():
        mono = "*".join(var_name(v) for v in m) or "1"
        parts.append(f"({c})*{mono}")
    return " + ".join(parts)


def _vec_str(v, monos) -> str:
    return _rel_str({m: c for m, c in zip(monos, v) if c != 0})


# ---------------------------------------------------------------------------
# CM basis recognition


@dataclass(frozen=True)
class CMBasis:
    """B_dR P B_b is diagonal with B_dR = [[1, 0], [c, 1]] and B_b built from tau = P12/P11."""

    tau: object
    c: object
    B_dR: tuple
    B_b: tuple
    diagonal: tuple  # (D11, D22) balls
    offdiag_upper: object

    def as_dict(self) -> dict:
        return {
            "tau": None if self.tau is None else str(self.tau),
            "c": str(self.c),
            "B_dR": [[str(x) for x in row] for row in self.B_dR],
            "B_b": [[str(x) for x in row] for row in self.B_b],
            "offdiag_upper": mpmath.nstr(self.offdiag_upper, 5),
        }


def _det_exact(M):
    return M[0][0] * M[1][1] - M[0][1] * M[1][0]


def b_dr(c):
    return ((Fraction(1), Fraction(0)), (c, Fraction(1)))


def b_b(tau):
    tb = tau.conjugate()
    D = tau - tb
    return ((-tb / D, -tau), (1 / D, Fraction(1)))


def _embed_matrix(M, bits):
    return tuple(tuple(_embed(x, bits) for x in row) for row in M)


def _recognize(z: ComplexBall, fld: QuadField | None, height_bound: float, bits: int, what: str):
    try:
        return recognize_algebraic(z, fld, height_bound, bits)
    except (NotFound, AmbiguousCandidate) as exc:
        raise RecognitionFailed(f"could not recognize {what}: {exc}") from exc


def cm_basis_recognition(P: PeriodMatrix | tuple, cm_field: QuadField, field: QuadField | None = None,
                         prec=512, height_bound: float = 40.0, diag_tol: float | None = None) -> CMBasis:
    """Exact de Rham and Betti changes of basis diagonalizing a CM period matrix.

    tau = P12/P11 is recognized in the CM field and c in ``field`` (default the
    CM field).  Both changes of basis have determinant exactly 1.
    """
    bits = as_bits(prec)
    E = P.entries if isinstance(P, PeriodMatrix) else P
    (p11, p12), (p21, p22) = E
    field = field or cm_field
    one, zero = Fraction(1), Fraction(0)
    if p12.contains_zero() and p21.contains_zero():
        ident = ((one, zero), (zero, one))
        return CMBasis(None, zero, ident, ident, (p11, p22), max(p12.abs_upper(), p21.abs_upper()))
    tau = _recognize(p12 / p11, cm_field, height_bound, bits, "tau = P12/P11")
    if not isinstance(tau, QuadFieldElem) or tau.b == 0:
        raise NotCMFiber("tau is not imaginary quadratic")
    tb = tau.conjugate().embed(bits)
    c_ball = -(p22 - tb * p21) / (p12 - tb * p11)
    c = _recognize(c_ball, field, height_bound, bits, "c")
    BdR, Bb = b_dr(c), b_b(tau)
    if _det_exact(BdR) != 1 or _det_exact(Bb) != 1:
        raise RecognitionFailed("change of basis does not have determinant 1")
    D = mat2_mul(mat2_mul(_embed_matrix(BdR, bits), E), _embed_matrix(Bb, bits))
    off = max(D[0][1].abs_upper(), D[1][0].abs_upper())
    tol = mpmath.ldexp(1, -bits // 2) if diag_tol is None else diag_tol
    if off > tol:
        raise RecognitionFailed(f"recognized basis leaves off-diagonal entries of size {mpmath.nstr(off, 5)}")
    return CMBasis(tau, c, BdR, Bb, (D[0][0], D[1][1]), off)


# ---------------------------------------------------------------------------
# CM fibers


@dataclass(frozen=True)
class CMFiber:
    point: object  # Fraction or QuadFieldElem
    lambdas: tuple
    discriminants: tuple

    def as_dict(self) -> dict:
        return {
            "point": str(self.point),
            "abs": float(_embed(self.point, 64).abs_upper()),
            "lambdas": [str(x) for x in self.lambdas],
            "discriminants": list(self.discriminants),
        }


def _roots_deg_le_2(poly) -> list:
    """Exact roots of the linear and quadratic irreducible factors of a sympy Poly over Q."""
    out = []
    for fac, _ in poly.factor_list()[1]:
        cs = [Fraction(int(c.p), int(c.q)) for c in fac.all_coeffs()]
        if len(cs) == 2:
            out.append(-cs[1] / cs[0])
        elif len(cs) == 3:
            a, b, c = cs
            disc = b * b - 4 * a * c
            num, den = disc.numerator * disc.denominator, disc.denominator
            sf = squarefree_part(num)
            # sqrt(disc) = sqrt(sf) * r with r rational
            r = Fraction(int(mpmath.sqrt(num // sf)), den) if sf != 0 else Fraction(0)
            root = QuadFieldElem(-b / (2 * a), r / (2 * a), sf)
            out.extend([root, root.conjugate()])
    return out


def locate_cm_fibers(spec: FamilySpec, max_abs_D: int = 10_000, max_abs: float = 1.0) -> list[CMFiber]:
    """Points s of degree <= 2 with 0 < |s| < max_abs where every coordinate has a rational-j CM fiber."""
    from sympy import Poly, Rational, symbols

    from .cm import rational_singular_moduli

    x = symbols("x")
    moduli = rational_singular_moduli(max_abs_D)
    per_coord = []
    for g in spec.coords:
        P = sum(Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(g.num))
        Q = sum(Rational(c.numerator, c.denominator) * x**i for i, c in enumerate(g.den))
        found = {}
        for j0, D in moduli.items():
            expr = 256 * (P * P - P * Q + Q * Q) ** 3 - j0 * P**2 * (P - Q) ** 2 * Q**2
            poly = Poly(expr, x, domain="QQ")
            if poly.is_zero:
                continue
            for r in _roots_deg_le_2(poly):
                found[r] = D
        per_coord.append(found)
    common = set(per_coord[0])
    for f in per_coord[1:]:
        common &= set(f)
    out = []
    for s in common:
        if s == 0:
            continue
        a = float(_embed(s, 64).abs_upper())
        if a >= max_abs:
            continue
        try:
            lams = tuple(g(s) for g in spec.coords)
        except Exception:
            continue
        out.append(CMFiber(s, lams, tuple(f[s] for f in per_coord)))
    out.sort(key=lambda f: float(_embed(f.point, 64).abs_upper()))
    return out


# ---------------------------------------------------------------------------
# relation builder


@dataclass
class PlaceCertificate:
    embedding: int
    residual: ComplexBall
    proximate: bool = True

    def as_dict(self) -> dict:
        return {
            "embedding": self.embedding,
            "residual_mid": mpmath.nstr(mpmath.hypot(self.residual.mid_re, self.residual.mid_im), 10),
            "residual_rad": mpmath.nstr(self.residual.rad, 5),
        }


@dataclass
class RelationCertificate:
    point: object
    field_disc: int | None
    field_degree: int
    coordinate: int
    polynomial: RelationPolynomial
    places: list
    order_of_vanishing: int
    witness_coefficient: object
    conjugation_coherent: bool
    point_field_degree: int
    n: int
    cm_data: dict = field(default_factory=dict)

    def degree_bound(self) -> dict:
        return {
            "L_s_degree": self.field_degree,
            "K_s_degree": self.point_field_degree,
            "relation_degree": self.polynomial.degree,
            "relation_degree_bound": 2 * self.field_degree,
            "field_degree_bound": f"{self.field_degree} <= 2^{self.n} * c0({self.n}) * {self.point_field_degree}",
        }

    def as_dict(self) -> dict:
        return {
            "point": str(self.point),
            "field": {"disc": self.field_disc, "degree": self.field_degree},
            "places": [p.as_dict() for p in self.places],
            "polynomial": self.polynomial.as_dict(),
            "nontriviality": {
                "order_of_vanishing": self.order_of_vanishing,
                "witness_coefficient": str(self.witness_coefficient),
            },
            "coordinate": self.coordinate,
            "conjugation_coherent": self.conjugation_coherent,
            "degrees": self.degree_bound(),
            "cm_data": self.cm_data,
        }


def _as_exact_point(s):
    if isinstance(s, (QuadFieldElem, Fraction)):
        return s
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        return parse_point(s)
    raise TypeError(f"unsupported point {s!r}")


def parse_point(text: str):
    """Parse a rational or quadratic point such as '1/2', '1/2 + sqrt(-7)/7' or '(1+I)/4'."""
    import sympy

    from sympy.parsing.sympy_parser import implicit_multiplication, parse_expr, standard_transformations

    text = re.sub(r"(?<![A-Za-z])i(?![A-Za-z])", "I", text)
    expr = parse_expr(text, transformations=standard_transformations + (implicit_multiplication,))
    expr = sympy.nsimplify(expr, rational=True)
    expr = sympy.expand(expr)
    if expr.is_Rational:
        return Fraction(int(expr.p), int(expr.q))
    re_part, rad_parts = sympy.Integer(0), []
    for t in sympy.Add.make_args(expr):
        if t.is_Rational:
            re_part += t
        else:
            rad_parts.append(t)
    coeff, d = sympy.Integer(0), None
    for t in rad_parts:
        c, r = t.as_coeff_Mul()
        if r == sympy.I:
            dd = -1
        else:
            base = (r**2)
            if not base.is_Rational:
                raise ValueError(f"point {text!r} is not of degree <= 2")
            dd = int(base)
        sf = squarefree_part(dd)
        scale = sympy.sqrt(sympy.Integer(dd) / sf)
        if d not in (None, sf):
            raise ValueError(f"point {text!r} is not of degree <= 2")
        d = sf
        coeff += c * scale
    coeff = sympy.nsimplify(coeff)
    return QuadFieldElem(Fraction(int(re_part.p), int(re_part.q)), Fraction(int(coeff.p), int(coeff.q)), d)


def _lift(x, d):
    if isinstance(x, QuadFieldElem):
        if x.disc == d:
            return x
        if x.b == 0:
            return QuadFieldElem(x.a, 0, d)
        raise NotImplementedCase("elements of different quadratic fields")
    return QuadFieldElem(to_fraction(x), 0, d)


def _integer_matrix(G, what: str):
    out = []
    for row in G:
        r = []
        for z in row:
            n = int(mpmath.nint(z.mid_re))
            if not z.contains(n):
                raise RecognitionFailed(f"{what} is not an integer matrix (entry {z.str(10)})")
            r.append(n)
        out.append(tuple(r))
    if out[0][0] * out[1][1] - out[0][1] * out[1][0] != 1:
        raise RecognitionFailed(f"{what} does not have determinant 1")
    return tuple(out)


def _local_factor(Ys: tuple, lam0, lam_s, cm0: QuadField, cms: QuadField, L: QuadField, k: int,
                  bits: int, height_bound: float, conjugate: bool):
    """Exact degree-2 factor vanishing at Y(s), computed in one complex embedding.

    With L = B_dR(s) Y B_dR(0)^(-1) = D_s W D_0^(-1) and W = B_b(u)^(-1) B_b(w),
    the products L11 L22 and L12 L21 have ratio W11 W22 / (W12 W21), which only
    depends on u = tau(s) and w = tau(0) in a common integral frame.
    """
    lam0_b = _embed(lam0, bits + 64, conjugate)
    lams_b = _embed(lam_s, bits + 64, conjugate)
    P0 = legendre_periods(lam0_b, bits + 64)
    Ps = legendre_periods(lams_b, bits + 64)
    Pcont = mat2_mul(Ys, P0.entries)
    gamma = _integer_matrix(mat2_mul(mat2_inv(Ps.entries), Pcont), "frame change")
    B0 = cm_basis_recognition(P0, cm0, L, bits + 64, height_bound)
    Bs = cm_basis_recognition(Ps, cms, L, bits + 64, height_bound)
    d = L.d
    if B0.tau is None or Bs.tau is None:
        raise NotImplementedCase("period matrix already diagonal in the Legendre frame")
    tA = _lift(Bs.tau, d)
    g = gamma
    u = (g[0][1] + tA * g[1][1]) / (g[0][0] + tA * g[1][0])
    w = _lift(B0.tau, d)
    # consistency of the exact frame with the continued periods
    u_num = Pcont[0][1] / Pcont[0][0]
    if not u_num.overlaps(u.embed(bits)):
        raise RecognitionFailed("continued periods disagree with the recognized frame")
    ub, wb = u.conjugate(), w.conjugate()
    A = (u - w) * (wb - ub)
    B = -(u - wb) * (w - ub)
    c_s, c_0 = _lift(Bs.c, d), _lift(B0.c, d)
    # L = [[1,0],[c_s,1]] X [[1,0],[-c_0,1]]
    one = QuadFieldElem(1, 0, d)
    X = {(i, j): {(((i, j, k),)): one} for i in (1, 2) for j in (1, 2)}

    def add(*ps):
        out: dict = {}
        for coef, p in ps:
            for m, c in p.items():
                out[m] = out.get(m, 0) + coef * c
        return out

    BX = {(1, 1): X[1, 1], (1, 2): X[1, 2],
          (2, 1): add((c_s, X[1, 1]), (one, X[2, 1])), (2, 2): add((c_s, X[1, 2]), (one, X[2, 2]))}
    Lm = {(1, 1): add((one, BX[1, 1]), (-c_0, BX[1, 2])), (1, 2): BX[1, 2],
          (2, 1): add((one, BX[2, 1]), (-c_0, BX[2, 2])), (2, 2): BX[2, 2]}
    lp = {key: RelationPolynomial.from_dict(v) for key, v in Lm.items()}
    Q1 = lp[1, 1] * lp[2, 2]
    Q2 = lp[1, 2] * lp[2, 1]
    terms: dict = {}
    for m, c in Q1.terms:
        terms[m] = terms.get(m, 0) + A * c
    for m, c in Q2.terms:
        terms[m] = terms.get(m, 0) + B * c
    R = RelationPolynomial.from_dict(terms).normalized()
    info = {"tau_s": str(u), "tau_0": str(w), "c_s": str(c_s), "c_0": str(c_0),
            "frame_change": [list(r) for r in gamma]}
    return R, info


def _field_of(x):
    return x.disc if isinstance(x, QuadFieldElem) and x.b != 0 else None


def build_relation(spec: FamilySpec, point, prec=512, order: int = 50, eval_order: int = 200,
                   tol: float = 1e-20, height_bound: float = 40.0) -> RelationCertificate:
    """Certified homogeneous relation among the values of Y_k at an all-CM fiber."""
    bits = as_bits(prec)
    s = _as_exact_point(point)
    classes = classify_coordinates(spec)
    ok, reason = is_gao_admissible(classes)
    if not ok:
        raise NotGAOAdmissible(reason)
    cm_coords = [k for k, c in enumerate(classes, start=1) if c.kind == CoordKind.SMOOTH_CM]
    if not cm_coords:
        raise NotImplementedCase("relations are only built when some coordinate is CM at x = 0")
    if s == 0:
        raise NonCMFiber("s = 0 is the base point")
    lams = [g(s) for g in spec.coords]
    fibers = [classify_lambda(lam, bits) for lam in lams]
    for k, f in enumerate(fibers, start=1):
        if f.kind != CoordKind.SMOOTH_CM:
            raise NonCMFiber(f"coordinate {k} is not CM at s = {s}")
        if not f.confirmed:
            raise NonCMFiber(f"coordinate {k} only matches a CM point numerically at s = {s}")
    k = cm_coords[0]
    D0, Ds = classes[k - 1].cm_discriminant, fibers[k - 1].cm_discriminant
    discs = {squarefree_part(D) for D in [D0] + [f.cm_discriminant for f in fibers]}
    for x in [s, *lams]:
        d = _field_of(x)
        if d is not None:
            discs.add(d)
    if len(discs) != 1:
        raise NotImplementedCase(
            f"the relation field is a compositum of Q(sqrt(d)) for d in {sorted(discs)}; only quadratic fields are handled"
        )
    d = discs.pop()
    L = QuadField(d)
    K_deg = 2 if _field_of(s) is not None else 1

    Y = normalized_solution(gauss_manin(spec, k), eval_order)
    series = [Y.entry(i, j) for i in (1, 2) for j in (1, 2)]
    for kk, c in enumerate(classes, start=1):
        G = gauss_manin(spec, kk)
        if c.kind == CoordKind.SINGULAR:
            fc = singular_first_column(G, eval_order)
            series += [fc.top, fc.bottom]
        elif kk != k:
            series += normalized_solution(G, eval_order).entries()
    radii = family_radius(series)
    places = []
    for e in (0,):
        try:
            close = proximity(s, "archimedean", [radii], bits, embedding=e)
        except UndecidableAtPrecision:
            close = False
        if close:
            places.append(e)
    if not places:
        raise TrivialRelationProduced(f"|s| is not below the family radius {radii.min_radius:.4g}")

    lam0 = spec.coords[k - 1].value_at_zero()
    cm0, cms = QuadField(squarefree_part(D0)), QuadField(squarefree_part(Ds))
    point_balls = {}
    factors, infos = [], {}
    for conj in (False, True):
        sb = _embed(s, bits + 64, conj)
        try:
            Ys = evaluate_gmatrix(Y, sb, bits + 64, tol=tol / 100)
            method = "series"
        except TruncationDominates:
            Ys = continued_solution(spec.coords[k - 1], sb, bits + 64)
            method = "continuation"
        point_balls[conj] = Ys
        R, info = _local_factor(Ys, lam0, lams[k - 1], cm0, cms, L, k, bits, height_bound, conj)
        info["evaluation"] = method
        factors.append(R)
        infos["conjugate" if conj else "principal"] = info
    coherent = factors[1] == factors[0].galois_conjugate()
    if not coherent:
        raise RecognitionFailed("local factors at conjugate embeddings are not Galois conjugate")
    R = factors[0]
    for _ in places[1:]:
        R = R * factors[0]
    # certificates at each place
    certs = []
    for e in places:
        Ys = point_balls[bool(e)]
        vals = {(i, j, k): Ys[i - 1][j - 1] for i in (1, 2) for j in (1, 2)}
        r = R.evaluate(vals, bits, conjugate=bool(e))
        if not r.contains_zero():
            raise ResidualExcludesZero(f"relation does not vanish at embedding {e}")
        if r.rad > tol:
            raise RecognitionFailed(f"residual radius {mpmath.nstr(r.rad, 5)} exceeds {tol}")
        certs.append(PlaceCertificate(e, r))
    # nontriviality on the generic fiber
    var_series = {(i, j, k): Y.entry(i, j) for i in (1, 2) for j in (1, 2)}
    coeffs = R.substitute(var_series, order)
    nz = next((n for n, c in enumerate(coeffs) if c != 0), None)
    if nz is None:
        raise TrivialRelationProduced(f"R(Y) vanishes modulo x^{order}")
    L_deg = 2
    if R.degree > 2 * L_deg:
        raise RecognitionFailed("relation degree exceeds 2 [L_s:Q]")
    return RelationCertificate(
        point=s, field_disc=L.discriminant, field_degree=L_deg, coordinate=k, polynomial=R,
        places=certs, order_of_vanishing=nz, witness_coefficient=coeffs[nz], conjugation_coherent=coherent,
        point_field_degree=K_deg, n=spec.n, cm_data=infos,
    )
