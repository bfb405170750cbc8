"""Periods and quasi-periods of Legendre curves, connection constants and monodromy.

For Y^2 = X(X-1)(X-lambda) with basis omega = dX/(2Y), eta = X dX/(2Y) the
normalized period matrix (rows omega, eta; columns vanishing cycle, then its
partner) is

    [[ K/(pi i),        K'/pi ],
     [ (K - E)/(pi i),  E'/pi ]]

with K = K(lambda), E = E(lambda), K' = K(1 - lambda), E' = E(1 - lambda) in the
parameter-m convention.  Its determinant is 1/(2 pi i) by Legendre's relation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import mpmath
from flint import acb, arb

from .errors import BranchCutStraddle, DomainError, NonConvergence, TruncationDominates
from .family import FamilySpec, RationalMap
from .gfunctions import GSeries, archimedean_radius
from .numerics import ComplexBall, QuadFieldElem, as_bits, to_fraction, working_precision
from .picard_fuchs import GMatrix, GaussManinMatrix, monodromy_factor

NORMALIZATION = "1/(2 pi i)"


def _ball(x, bits) -> ComplexBall:
    if isinstance(x, ComplexBall):
        return x.with_prec(max(bits, x.prec))
    if isinstance(x, QuadFieldElem):
        return x.embed(bits)
    return ComplexBall(x, bits)


# ---------------------------------------------------------------------------
# AGM, K and E


def _right_sqrt_ab(a: ComplexBall, b: ComplexBall, a1: ComplexBall) -> ComplexBall:
    """sqrt(ab) with the sign making it closer to a1 = (a+b)/2."""
    ratio = 4 * a * b / ((a + b) * (a + b))
    try:
        return a1 * ratio.sqrt()
    except BranchCutStraddle as exc:
        raise NonConvergence("AGM step straddles the branch cut of the right choice") from exc


def _agm_iter(a: ComplexBall, b: ComplexBall, bits: int, with_sum: bool = False):
    """Run the AGM; optionally accumulate sum_{n>=1} 2^(n-1) c_n^2 with c_{n+1} = (a_n - b_n)/2."""
    if a.contains_zero() or b.contains_zero():
        raise NonConvergence("AGM inputs must exclude 0")
    s = ComplexBall(0, bits)
    target = mpmath.ldexp(1, -bits - 4)
    for n in range(1, 4 * bits + 64):
        if (a + b).contains_zero():
            raise NonConvergence("AGM hit a + b = 0 (ill-conditioned branch pattern)")
        c = (a - b) / 2
        a1 = (a + b) / 2
        b1 = _right_sqrt_ab(a, b, a1)
        if with_sum:
            s = s + (2 ** (n - 1)) * c * c
        a, b = a1, b1
        gap = (a - b).abs_upper()
        # converged once the gap is below the target or at the level of the ball radii
        if gap <= max(target * a.abs_upper(), 8 * (a.rad + b.rad)):
            # remaining mean terms lie within |a_n - b_n| of a_n; the sum tail is
            # bounded by 2^(n+2) |c_{n+1}|^2 with |c_{n+1}| <= gap/2
            limit = a.inflate(gap)
            tail = mpmath.ldexp(1, n + 2) * (gap / 2) ** 2
            return limit, s.inflate(tail) if with_sum else None
    raise NonConvergence("AGM did not converge")


def agm(a, b, prec=256) -> ComplexBall:
    """Arithmetic-geometric mean with the right choice of square roots."""
    bits = as_bits(prec)
    work = bits + 30
    m, _ = _agm_iter(_ball(a, work), _ball(b, work), work)
    return m.with_prec(bits)


def elliptic_ke(m, prec=256) -> tuple[ComplexBall, ComplexBall]:
    """Complete elliptic integrals K(m), E(m) from one AGM pass.

    K = pi / (2 M(1, sqrt(1-m))) and E = K (1 - m/2 - sum_{n>=1} 2^(n-1) c_n^2).
    An exactly real 1 - m < 0 takes the boundary value from the upper side.
    """
    bits = as_bits(prec)
    work = bits + 40
    mb = _ball(m, work)
    one = ComplexBall(1, work)
    b0 = (one - mb).sqrt()
    M, s = _agm_iter(one, b0, work, with_sum=True)
    K = ComplexBall.pi(work) / (2 * M)
    E = K * (one - mb / 2 - s)
    return K.with_prec(bits), E.with_prec(bits)


# ---------------------------------------------------------------------------
# period matrices


@dataclass(frozen=True)
class PeriodMatrix:
    entries: tuple  # ((P11, P12), (P21, P22)) of ComplexBall
    coordinate_index: int = 0
    normalization: str = NORMALIZATION
    lam: object = None

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def det(self) -> ComplexBall:
        (a, b), (c, d) = self.entries
        return a * d - b * c

    def conjugate(self) -> "PeriodMatrix":
        return PeriodMatrix(tuple(tuple(e.conjugate() for e in row) for row in self.entries), self.coordinate_index, self.normalization, self.lam)

    def max_rad(self):
        return max(e.rad for row in self.entries for e in row)

    def as_dict(self, digits: int = 30) -> dict:
        return {
            "coordinate": self.coordinate_index,
            "normalization": self.normalization,
            "entries": [[ball_json(e, digits) for e in row] for row in self.entries],
        }


def ball_json(z: ComplexBall, digits: int = 30) -> dict:
    return {
        "mid_re": mpmath.nstr(z.mid_re, digits),
        "mid_im": mpmath.nstr(z.mid_im, digits),
        "rad": mpmath.nstr(z.rad, 5),
    }


def legendre_periods(lam, prec=256, coordinate_index: int = 0) -> PeriodMatrix:
    bits = as_bits(prec)
    work = bits + 20
    lb = _ball(lam, work)
    if lb.contains(0) or lb.contains(1):
        raise DomainError("lambda must exclude 0 and 1")
    K, E = elliptic_ke(lb, work)
    Kp, Ep = elliptic_ke(1 - lb, work)
    pi = ComplexBall.pi(work)
    pii = pi * ComplexBall.exact(0, 1, work)
    entries = ((K / pii, Kp / pi), ((K - E) / pii, Ep / pi))
    entries = tuple(tuple(e.with_prec(bits) for e in row) for row in entries)
    return PeriodMatrix(entries, coordinate_index, NORMALIZATION, lam)


def mat2_mul(A, B):
    return (
        (A[0][0] * B[0][0] + A[0][1] * B[1][0], A[0][0] * B[0][1] + A[0][1] * B[1][1]),
        (A[1][0] * B[0][0] + A[1][1] * B[1][0], A[1][0] * B[0][1] + A[1][1] * B[1][1]),
    )


def mat2_inv(A):
    (a, b), (c, d) = A
    det = a * d - b * c
    return ((d / det, -b / det), (-c / det, a / det))


# ---------------------------------------------------------------------------
# connection constants


@dataclass(frozen=True)
class ConnectionConstants:
    Pi: tuple
    cm_form: ComplexBall | None = None
    x0: object = None
    diagonal: bool = False
    tail_bound: float = 0.0
    basis: object = None

    def as_dict(self, digits: int = 30) -> dict:
        return {
            "cm_basis": None if self.basis is None else self.basis.as_dict(),
            "Pi": [[ball_json(e, digits) for e in row] for row in self.Pi],
            "varpi": None if self.cm_form is None else ball_json(self.cm_form, digits),
            "diagonal": self.diagonal,
            "tail_bound": self.tail_bound,
        }


def evaluate_gmatrix(Y: GMatrix, x0, prec=256, tol: float | None = None):
    """Y(x0) as a 2x2 ball matrix, with the fitted tail bound of each entry folded in."""
    bits = as_bits(prec)
    out, worst = [], 0.0
    for i in (1, 2):
        row = []
        for j in (1, 2):
            s = Y.entry(i, j)
            try:
                R = archimedean_radius(s).radius_estimate if not s.is_zero() else math.inf
            except Exception:
                R = None
            row.append(s.evaluate(x0, bits, radius=R, tail_tol=tol))
        out.append(tuple(row))
    return tuple(out)


def _log_factor(G0, x0, bits):
    """x0^(-G0) = I - G0 log x0 for a nilpotent residue (principal log)."""
    lx = _ball(x0, bits).log()
    (a, b), (c, d) = G0
    one, zero = ComplexBall(1, bits), ComplexBall(0, bits)
    return ((one - lx * float_to_ball(a, bits), zero - lx * float_to_ball(b, bits)),
            (zero - lx * float_to_ball(c, bits), one - lx * float_to_ball(d, bits)))


def float_to_ball(q, bits):
    return ComplexBall(to_fraction(q), bits)


def connection_constants(Y: GMatrix, x0, P: PeriodMatrix, monodromy=None, prec=256,
                         tol: float | None = None, cm=None, diag_tol: float = 1e-25) -> ConnectionConstants:
    """Pi = x0^(-G0) Y(x0)^(-1) P(g(x0)).

    For a CM coordinate pass ``cm`` (a discriminant or a QuadField): Pi is then
    moved to the CM-adapted frame B_dR Pi B_b, checked to be diagonal, and the
    CM period 2 pi i Pi_11 is returned.
    """
    bits = as_bits(prec)
    Yx = evaluate_gmatrix(Y, x0, bits, tol)
    Pi = mat2_mul(mat2_inv(Yx), P.entries)
    G0 = Y.residue
    if any(v != 0 for row in G0 for v in row):
        Pi = mat2_mul(_log_factor(G0, x0, bits), Pi)
    varpi, basis = None, None
    if cm is not None and cm is not False:
        from .numerics import QuadField, squarefree_part
        from .relations import cm_basis_recognition

        fld = cm if isinstance(cm, QuadField) else QuadField(squarefree_part(int(cm)))
        basis = cm_basis_recognition(Pi, fld, fld, bits, diag_tol=diag_tol)
        Pi = mat2_mul(mat2_mul(_exact_matrix(basis.B_dR, bits), Pi), _exact_matrix(basis.B_b, bits))
    diag = all(Pi[i][j].abs_upper() <= diag_tol for i, j in ((0, 1), (1, 0)))
    if basis is not None:
        if not diag:
            raise TruncationDominates("connection matrix is not diagonal within tolerance")
        varpi = Pi[0][0] * ComplexBall.two_pi_i(bits)
    return ConnectionConstants(Pi, varpi, x0, diag, basis=basis)


def _exact_matrix(M, bits):
    return tuple(tuple(x.embed(bits) if isinstance(x, QuadFieldElem) else ComplexBall.exact(to_fraction(x), 0, bits)
                       for x in row) for row in M)


# ---------------------------------------------------------------------------
# analytic continuation along polygons in the lambda-line


def _inv_series(c: ComplexBall, n: int) -> list:
    """Coefficients of 1/(h + c) = sum (-1)^k h^k / c^(k+1)."""
    inv = 1 / c
    out, p = [], inv
    for k in range(n):
        out.append(p if k % 2 == 0 else -p)
        p = p * inv
    return out


def _connection_taylor(lam_c: ComplexBall, n: int):
    """Taylor coefficients in h of M(lam_c + h)."""
    a = _inv_series(lam_c - 1, n)  # 1/(lambda - 1)
    b = _inv_series(lam_c, n)  # 1/lambda
    out = []
    for k in range(n):
        m11 = -a[k] / 2
        m12 = (a[k] - b[k]) / 2
        out.append(((m11, m12), (m11, -m11)))
    return out


def _taylor_step(P, lam_c: ComplexBall, h: ComplexBall, terms: int, bits: int):
    """Propagate dP/dlambda = M P from lam_c to lam_c + h by a Taylor series of the solution."""
    Ms = _connection_taylor(lam_c, terms)
    coeffs = [P]
    for n in range(terms - 1):
        acc = None
        for m in range(n + 1):
            t = mat2_mul(Ms[m], coeffs[n - m])
            acc = t if acc is None else tuple(tuple(x + y for x, y in zip(r1, r2)) for r1, r2 in zip(acc, t))
        coeffs.append(tuple(tuple(x / (n + 1) for x in row) for row in acc))
    # geometric tail: |h| / rho <= q with rho the distance to the nearest singular point
    rho = min(float(lam_c.abs_lower()), float((lam_c - 1).abs_lower()))
    q = float(h.abs_upper()) / rho
    if q >= 0.75:
        raise TruncationDominates("continuation step too long for the local radius")
    size = max(float(e.abs_upper()) for row in P for e in row)
    # the solution is bounded on the disc of radius rho by size * C; use the
    # largest computed coefficient to scale the majorant
    C = max(float(e.abs_upper()) * rho**k for k, Mk in enumerate(coeffs) for row in Mk for e in row)
    tail = max(C, size) * q**terms / (1 - q)
    out = []
    for i in range(2):
        row = []
        for j in range(2):
            acc = ComplexBall(0, bits)
            for Mk in reversed(coeffs):
                acc = acc * h + Mk[i][j]
            row.append(acc.inflate(tail))
        out.append(tuple(row))
    return tuple(out)


def continue_periods(P0, path, prec=256, terms: int = 120, max_ratio: float = 0.4):
    """Continue a solution matrix of dP/dlambda = M P along a polygon of lambda values."""
    bits = as_bits(prec)
    P = P0.entries if isinstance(P0, PeriodMatrix) else P0
    pts = [_ball(p, bits) for p in path]
    for start, end in zip(pts, pts[1:]):
        cur = start
        h = end - start
        rho = min(float(cur.abs_lower()), float((cur - 1).abs_lower()))
        pieces = max(1, math.ceil(float(h.abs_upper()) / (max_ratio * rho)))
        step = h / pieces
        for _ in range(pieces):
            P = _taylor_step(P, cur, step, terms, bits)
            cur = cur + step
    return P


def _lambda_path(g: RationalMap, x: complex, max_ratio: float) -> list[Fraction]:
    """Parameters 0 = t_0 < ... < t_m = 1 with g(t x) sampled finely relative to the distance to {0, 1}."""
    def lam(t):
        return complex(g(complex(x) * float(t)))

    ts = [Fraction(0), Fraction(1)]
    for _ in range(40):
        out, changed = [ts[0]], False
        for a, b in zip(ts, ts[1:]):
            la, lb, lm = lam(a), lam(b), lam((a + b) / 2)
            rho = min(abs(la), abs(la - 1), abs(lb), abs(lb - 1))
            if rho == 0:
                raise DomainError("path meets a singular fiber")
            if abs(lb - la) > max_ratio * rho or abs(lm - (la + lb) / 2) > 0.1 * max_ratio * rho:
                out.append((a + b) / 2)
                changed = True
            out.append(b)
        ts = out
        if not changed:
            return ts
    raise DomainError("could not subdivide the path away from the singular fibers")


def continued_solution(g: RationalMap, x, prec=256, max_ratio: float = 0.25):
    """Y(x) = P(g(x)) P(g(0))^(-1), continuing the Legendre periods along g on the segment [0, x].

    Gives the value of the normalized solution anywhere inside its disc of
    convergence, including where the truncated series converges too slowly.
    """
    bits = as_bits(prec)
    work = bits + 40
    lam0 = g.value_at_zero()
    if lam0 in (0, 1):
        raise DomainError("continuation starts at a singular fiber")
    xb = _ball(x, work)
    ts = _lambda_path(g, complex(xb.mid_re, xb.mid_im), max_ratio)
    lams = [ComplexBall.exact(lam0, 0, work)] + [g(xb * ComplexBall.exact(t, 0, work)) for t in ts[1:]]
    P0 = legendre_periods(lam0, work)
    P1 = continue_periods(P0, lams, work)
    Y = mat2_mul(P1, mat2_inv(P0.entries))
    return tuple(tuple(e.with_prec(bits) for e in row) for row in Y)


@dataclass(frozen=True)
class MonodromyReport:
    T: tuple
    N_numeric: ComplexBall
    N_series: Fraction
    difference: float
    unipotent: bool
    loop_radius: Fraction
    points: int

    def as_dict(self):
        return {
            "T": [[ball_json(e, 25) for e in row] for row in self.T],
            "N_numeric": ball_json(self.N_numeric, 25),
            "N_series": str(self.N_series),
            "difference": self.difference,
            "unipotent": self.unipotent,
            "loop_radius": str(self.loop_radius),
            "points": self.points,
        }


def monodromy(spec: FamilySpec | RationalMap, k: int = 1, loop_radius=Fraction(1, 8), points: int = 16,
              prec=256, G: GaussManinMatrix | None = None) -> MonodromyReport:
    """Continue P_k once counterclockwise around x = 0 along a regular polygon and read off T."""
    from .picard_fuchs import gauss_manin

    g = spec if isinstance(spec, RationalMap) else spec.coords[k - 1]
    G = G or gauss_manin(g)
    bits = as_bits(prec)
    work = bits + 40
    r = to_fraction(loop_radius)
    xs = []
    with mpmath.workprec(work):
        for j in range(points + 1):
            ang = 2 * mpmath.pi * j / points
            if j % points:
                xs.append(ComplexBall(mpmath.mpc(mpmath.cos(ang), mpmath.sin(ang)), work) * r)
            else:
                xs.append(ComplexBall.exact(r, 0, work))
    lams = [g(x) for x in xs]
    lams[0] = lams[-1] = ComplexBall.exact(g(r), 0, work)
    P0 = legendre_periods(g(r), work)
    P1 = continue_periods(P0, lams, work)
    T = mat2_mul(mat2_inv(P0.entries), P1)
    unip = all(
        T[i][j].contains(v) or (T[i][j] - v).abs_upper() < 1e-20
        for (i, j, v) in ((0, 0, 1), (1, 0, 0), (1, 1, 1))
    )
    fac = monodromy_factor(G)
    N_num = T[0][1]
    diff = float((N_num - ComplexBall(fac.N_k, work)).abs_upper())
    T = tuple(tuple(e.with_prec(bits) for e in row) for row in T)
    return MonodromyReport(T, N_num.with_prec(bits), fac.N_k, diff, unip, r, points)
