"""Gauss-Manin connection of pulled-back Legendre curves and its normalized series solutions.

The de Rham basis is omega = dX/(2Y), eta = X dX/(2Y) on Y^2 = X(X-1)(X-lambda).
In this basis the connection in lambda has trace zero, so every normalized
solution has determinant exactly 1 and the polarization is a unit multiple of
the standard symplectic form.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

from .errors import NotDefinedAtChart, NotImplementedCase, NotSingular, ResonanceUnresolved
from .family import (
    FamilySpec,
    RationalMap,
    poly_add,
    poly_deriv,
    poly_mul,
    poly_sub,
    series_inverse,
    series_mul,
)
from .gfunctions import GSeries
from .numerics import QuadFieldElem

Matrix = tuple  # 2x2 tuple of tuples


@dataclass(frozen=True)
class RationalFunction:
    num: tuple
    den: tuple

    def __post_init__(self):
        num, den = list(self.num), list(self.den)
        while num and den and num[0] == 0 and den[0] == 0:
            num, den = num[1:], den[1:]
        if not num:
            den = [Fraction(1)]
        object.__setattr__(self, "num", tuple(num))
        object.__setattr__(self, "den", tuple(den))

    def series(self, order: int) -> list[Fraction]:
        if not self.num:
            return [Fraction(0)] * order
        if self.den[0] == 0:
            raise NotDefinedAtChart("connection entry has a pole at x = 0")
        return series_mul(list(self.num), series_inverse(list(self.den), order), order)

    def at_zero(self) -> Fraction:
        return self.series(1)[0]

    def __neg__(self):
        return RationalFunction(tuple(-c for c in self.num), self.den)


@dataclass(frozen=True)
class GaussManinMatrix:
    entries: tuple  # ((G11, G12), (G21, G22)) of RationalFunction
    coordinate_index: int
    coordinate: RationalMap

    def series(self, order: int) -> list:
        """Coefficient matrices G_0, ..., G_{order-1}."""
        return _connection_series(self, order)

    def residue(self) -> Matrix:
        return tuple(tuple(e.at_zero() for e in row) for row in self.entries)

    def is_nilpotent_residue(self) -> bool:
        (a, b), (c, d) = self.residue()
        return a + d == 0 and a * d - b * c == 0

    def trace(self) -> RationalFunction:
        (a, _), (_, d) = self.entries
        num = poly_add(poly_mul(list(a.num), list(d.den)), poly_mul(list(d.num), list(a.den)))
        return RationalFunction(tuple(num), tuple(poly_mul(list(a.den), list(d.den))))


def gauss_manin(spec: FamilySpec | RationalMap, k: int = 1) -> GaussManinMatrix:
    """Connection matrix of theta = x d/dx on {omega, eta} pulled back along g_k.

    With g = P/Q and W = P'Q - PQ':
        G11 = -x W / (2 Q (P - Q)),  G12 = x W / (2 P (P - Q)),
        G21 = G11,                   G22 = -G11.
    """
    g = spec if isinstance(spec, RationalMap) else _coord(spec, k)
    P, Q = list(g.num), list(g.den)
    W = poly_sub(poly_mul(poly_deriv(P), Q), poly_mul(P, poly_deriv(Q)))
    if not W:
        raise NotDefinedAtChart("constant coordinate map")
    xW = [Fraction(0)] + W
    PmQ = poly_sub(P, Q)
    if not PmQ or not P:
        raise NotDefinedAtChart("coordinate map is identically 0 or 1")
    g11 = RationalFunction(tuple(-c for c in xW), tuple(poly_mul([Fraction(2)], poly_mul(Q, PmQ))))
    g12 = RationalFunction(tuple(xW), tuple(poly_mul([Fraction(2)], poly_mul(P, PmQ))))
    for e in (g11, g12):
        if e.num and e.den[0] == 0:
            raise NotDefinedAtChart("connection has a pole at x = 0 on this chart")
    return GaussManinMatrix(((g11, g12), (g11, -g11)), k, g)


def _coord(spec: FamilySpec, k: int) -> RationalMap:
    if not 1 <= k <= spec.n:
        raise IndexError(f"coordinate index {k} out of range 1..{spec.n}")
    return spec.coords[k - 1]


@lru_cache(maxsize=64)
def _connection_series_cached(g: RationalMap, order: int):
    G = gauss_manin(g)
    cols = [[e.series(order) for e in row] for row in G.entries]
    return [((cols[0][0][n], cols[0][1][n]), (cols[1][0][n], cols[1][1][n])) for n in range(order)]


def _connection_series(G: GaussManinMatrix, order: int):
    return _connection_series_cached(G.coordinate, max(order, 1))[:order]


# ---------------------------------------------------------------------------
# 2x2 helpers over exact scalars


def mat_mul(A, B):
    return (
        (A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
        (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]),
    )


def mat_add(A, B):
    return tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_sub(A, B):
    return tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def mat_scale(A, c):
    return tuple(tuple(a * c for a in row) for row in A)


ZERO = ((Fraction(0), Fraction(0)), (Fraction(0), Fraction(0)))
IDENTITY = ((Fraction(1), Fraction(0)), (Fraction(0), Fraction(1)))


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GMatrix:
    """Truncated normalized solution Y with Y(0) = I and theta Y = G Y - Y G(0)."""

    coefficients: tuple  # Y_0, ..., Y_order
    coordinate_index: int
    residue: Matrix

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def entry(self, i: int, j: int) -> GSeries:
        return GSeries(tuple(Y[i - 1][j - 1] for Y in self.coefficients), (i, j, self.coordinate_index))

    def entries(self) -> list[GSeries]:
        return [self.entry(i, j) for i in (1, 2) for j in (1, 2)]

    def truncate(self, order: int) -> "GMatrix":
        return GMatrix(self.coefficients[: order + 1], self.coordinate_index, self.residue)

    def det_series(self) -> list:
        """Coefficients of det Y through the truncation order."""
        N = self.order + 1
        out = []
        for n in range(N):
            s = 0
            for m in range(n + 1):
                A, B = self.coefficients[m], self.coefficients[n - m]
                s += A[0][0] * B[1][1] - A[0][1] * B[1][0]
            out.append(s)
        return out


@dataclass(frozen=True)
class MonodromyFactor:
    """Unipotent factor [[1, N log x / (2 pi i)], [0, 1]] of a singular coordinate."""

    N_k: Fraction
    residue_entry: Fraction
    pi11: object  # exact P_11 at the degenerate fiber

    def form(self) -> str:
        return f"[[1, {self.N_k}*log(x)/(2*pi*i)], [0, 1]]"


def _ad(G0, Y):
    return mat_sub(mat_mul(G0, Y), mat_mul(Y, G0))


def normalized_solution(G: GaussManinMatrix, order: int = 50) -> GMatrix:
    """Solve n Y_n - [G_0, Y_n] = sum_{m>=1} G_m Y_{n-m} term by term over the rationals.

    For nilpotent G_0 the map Y -> [G_0, Y] is nilpotent of index 3, so
    (n - ad)^(-1) = 1/n + ad/n^2 + ad^2/n^3.
    """
    if order < 0:
        raise ValueError("order must be nonnegative")
    return _solve_cached(G.coordinate, G.coordinate_index, order)


@lru_cache(maxsize=32)
def _solve_cached(g: RationalMap, k: int, order: int) -> GMatrix:
    # reuse a longer cached solution when one exists
    Gs = _connection_series_cached(g, max(order + 1, 1))
    G0 = Gs[0]
    (a, b), (c, d) = G0
    if a + d != 0 or a * d - b * c != 0:
        raise ResonanceUnresolved(
            "residue at x = 0 is not nilpotent (local monodromy is not unipotent on this chart)"
        )
    Ys = [IDENTITY]
    for n in range(1, order + 1):
        R = ZERO
        for m in range(1, n + 1):
            R = mat_add(R, mat_mul(Gs[m], Ys[n - m]))
        A1 = _ad(G0, R)
        A2 = _ad(G0, A1)
        Yn = mat_add(mat_add(mat_scale(R, Fraction(1, n)), mat_scale(A1, Fraction(1, n * n))), mat_scale(A2, Fraction(1, n**3)))
        Ys.append(Yn)
    return GMatrix(tuple(Ys), k, G0)


def ode_residual(G: GaussManinMatrix, Y: GMatrix) -> list:
    """Coefficients of theta Y - G Y + Y G(0) through the truncation order (all zero when exact)."""
    Gs = G.series(Y.order + 1)
    G0 = Gs[0]
    out = []
    for n in range(Y.order + 1):
        acc = mat_scale(Y.coefficients[n], n)
        for m in range(n + 1):
            acc = mat_sub(acc, mat_mul(Gs[m], Y.coefficients[n - m]))
        acc = mat_add(acc, mat_mul(Y.coefficients[n], G0))
        out.append(acc)
    return out


def monodromy_log_coefficient(G: GaussManinMatrix):
    """The entry r of a residue of the form [[0, r], [0, 0]], else None."""
    (a, b), (c, d) = G.residue()
    if a == 0 and c == 0 and d == 0 and b != 0:
        return b
    return None


# The singular fiber of the Legendre family at lambda = 0 has P_11 -> K(0)/(pi i) = -i/2
# and P_21 -> (K(0) - E(0))/(pi i) = 0, so the first column is (-i/2) * (y_11, y_21).
VANISHING_COLUMN = (QuadFieldElem(0, Fraction(-1, 2), -1), Fraction(0))


def monodromy_factor(G: GaussManinMatrix) -> MonodromyFactor:
    """N_k = r / P_11(0)^2 for the vanishing-cycle-first frame."""
    r = monodromy_log_coefficient(G)
    if r is None:
        raise NotSingular("coordinate has no unipotent residue of the vanishing-cycle form")
    d_k = VANISHING_COLUMN[0]
    N = r / (d_k * d_k)
    N = N.a if isinstance(N, QuadFieldElem) and N.is_rational() else N
    return MonodromyFactor(N, r, d_k)


@dataclass(frozen=True)
class FirstColumn:
    top: GSeries
    bottom: GSeries
    d_k: object
    d_prime_k: object


def singular_first_column(G: GaussManinMatrix, order: int = 50) -> FirstColumn:
    """d_k y_{i,1} + d'_k y_{i,2} for i = 1, 2, in the vanishing-cycle-first frame."""
    if all(x == 0 for row in G.residue() for x in row):
        raise NotSingular("coordinate is smooth at x = 0")
    if monodromy_log_coefficient(G) is None:
        raise NotImplementedCase("first column is only tabulated for coordinates with g(0) = 0")
    Y = normalized_solution(G, order)
    d, dp = VANISHING_COLUMN
    k = G.coordinate_index
    top = GSeries(tuple(d * Yn[0][0] + dp * Yn[0][1] for Yn in Y.coefficients), (1, 1, k))
    bottom = GSeries(tuple(d * Yn[1][0] + dp * Yn[1][1] for Yn in Y.coefficients), (2, 1, k))
    return FirstColumn(top, bottom, d, dp)


def family_solutions(spec: FamilySpec, order: int = 50) -> list[GMatrix]:
    return [normalized_solution(gauss_manin(spec, k), order) for k in range(1, spec.n + 1)]
