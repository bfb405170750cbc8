"""Truncated power series with exact coefficients and their per-place analytics."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from flint import acb, arb
from sympy.ntheory import sqrt_mod

from .errors import NotImplementedCase, TooFewCoefficients, TruncationDominates, UndecidableAtPrecision
from .numerics import ComplexBall, QuadFieldElem, _fmpq, as_bits, to_fraction, working_precision

Label = tuple[int, int, int]

MIN_TERMS = 20


@dataclass(frozen=True)
class GSeries:
    """sum a_n x^n for n <= order, with exact rational or quadratic coefficients."""

    coefficients: tuple
    label: Label = (0, 0, 0)

    def __post_init__(self):
        object.__setattr__(self, "coefficients", tuple(self.coefficients))

    @property
    def order(self) -> int:
        return len(self.coefficients) - 1

    def __len__(self):
        return len(self.coefficients)

    def __getitem__(self, n):
        return self.coefficients[n]

    def truncate(self, order: int) -> "GSeries":
        return GSeries(self.coefficients[: order + 1], self.label)

    def scale(self, c) -> "GSeries":
        return GSeries(tuple(c * a for a in self.coefficients), self.label)

    def valuation(self) -> int | None:
        """Index of the first nonzero coefficient, None for the zero series."""
        for n, a in enumerate(self.coefficients):
            if a != 0:
                return n
        return None

    def is_zero(self) -> bool:
        return self.valuation() is None

    def evaluate(self, x, prec=256, radius: float | None = None, tail_tol: float | None = None) -> ComplexBall:
        """Horner evaluation plus a fitted geometric tail bound folded into the radius."""
        bits = as_bits(prec)
        xb = x if isinstance(x, ComplexBall) else _exact_ball(x, bits)
        with working_precision(bits + 20):
            xv = xb.acb
            acc = acb(0)
            for a in reversed(self.coefficients):
                acc = acc * xv + _coeff_acb(a, bits + 20)
            tail = tail_majorant(self, float(xb.abs_upper()), radius)
            if tail_tol is not None and tail > tail_tol:
                raise TruncationDominates(f"tail bound {tail:.3g} exceeds {tail_tol:.3g}")
            if tail:
                t = arb(0, tail)
                acc += acb(t, t)
        return ComplexBall(acc, bits)


def _exact_ball(x, bits: int) -> ComplexBall:
    if isinstance(x, QuadFieldElem):
        return x.embed(bits)
    return ComplexBall.exact(to_fraction(x), 0, bits)


def _coeff_acb(a, bits: int) -> acb:
    if isinstance(a, QuadFieldElem):
        return a.embed(bits).acb
    return acb(_fmpq(to_fraction(a)))


def coeff_abs(a) -> float:
    """Largest absolute value over the complex embeddings of a coefficient."""
    if isinstance(a, QuadFieldElem) and a.b != 0:
        if a.disc < 0:
            return math.sqrt(float(a.norm()))
        r = math.sqrt(a.disc)
        return max(abs(float(a.a) + float(a.b) * r), abs(float(a.a) - float(a.b) * r))
    return abs(float(to_fraction(a.a if isinstance(a, QuadFieldElem) else a)))


def _log_abs(a) -> float:
    """log |a| for a nonzero coefficient, safe for huge numerators and denominators."""
    if isinstance(a, QuadFieldElem) and a.b != 0:
        if a.disc < 0:
            n = a.norm()
            return 0.5 * (math.log(n.numerator) - math.log(n.denominator))
        return math.log(coeff_abs(a))
    q = to_fraction(a.a if isinstance(a, QuadFieldElem) else a)
    return math.log(abs(q.numerator)) - math.log(q.denominator)


def coeff_den(a) -> int:
    """Common denominator of the rational coordinates of a coefficient."""
    if isinstance(a, QuadFieldElem):
        return math.lcm(a.a.denominator, a.b.denominator)
    return to_fraction(a).denominator


# ---------------------------------------------------------------------------
# radii


@dataclass(frozen=True)
class RadiusReport:
    place: object  # "archimedean" or a prime
    radius_estimate: float
    method: str
    exponent: Fraction | None = None  # p-adic: radius = p**exponent exactly
    label: Label | None = None

    @property
    def is_exact(self) -> bool:
        return self.exponent is not None or self.method == "polynomial"

    def as_dict(self) -> dict:
        return {
            "place": self.place,
            "radius": self.radius_estimate,
            "method": self.method,
            "exponent": None if self.exponent is None else str(self.exponent),
            "label": list(self.label) if self.label else None,
        }


def _envelope(logs: dict, n: int, width: int = 8):
    vals = [logs[k] for k in range(max(0, n - width), n + 1) if k in logs]
    return max(vals) if vals else None


def archimedean_radius(series: GSeries) -> RadiusReport:
    """Ratio test on the running max envelope over the last ceil(N/2) coefficients."""
    N = series.order
    if N < MIN_TERMS:
        raise TooFewCoefficients(f"need at least {MIN_TERMS} terms, got order {N}")
    logs = {n: _log_abs(a) for n, a in enumerate(series.coefficients) if a != 0}
    if not logs:
        return RadiusReport("archimedean", math.inf, "polynomial", label=series.label)
    m = N - math.ceil(N / 2)
    top, low = _envelope(logs, N), _envelope(logs, m)
    if top is None:
        if max(logs) < m:
            return RadiusReport("archimedean", math.inf, "polynomial", label=series.label)
        raise TooFewCoefficients("no nonzero coefficients near the truncation order")
    if low is None:
        low = max(v for k, v in logs.items() if k <= m) if any(k <= m for k in logs) else top
    return RadiusReport("archimedean", math.exp((low - top) / (N - m)), "ratio-test", label=series.label)


def vp_rational(q: Fraction, p: int) -> int:
    q = to_fraction(q)
    if q == 0:
        raise ValueError("valuation of 0")
    v, num, den = 0, q.numerator, q.denominator
    while num % p == 0:
        num //= p
        v += 1
    while den % p == 0:
        den //= p
        v -= 1
    return v


def _vp_coeff(a, p: int) -> int:
    if isinstance(a, QuadFieldElem) and a.b != 0:
        # minimum over the places above p, normalized so that v(p) = 1
        return min(quad_valuations(a, p))
    return vp_rational(a.a if isinstance(a, QuadFieldElem) else a, p)


def padic_radius(series: GSeries, p: int, rank: int = 2) -> RadiusReport:
    """Exact p-adic radius from the valuation scan.

    If every coefficient satisfies v_p(a_n) >= -(rank*floor(log_p n) + c) and some
    tail coefficient has v_p(a_n) <= rank*floor(log_p n) + c, the valuations grow
    logarithmically and the radius is exactly 1.  Otherwise the radius is
    p**(min over the tail of v_p(a_n)/n).
    """
    N = series.order
    if N < MIN_TERMS:
        raise TooFewCoefficients(f"need at least {MIN_TERMS} terms, got order {N}")
    vals = {n: _vp_coeff(a, p) for n, a in enumerate(series.coefficients) if a != 0 and n > 0}
    m = N - math.ceil(N / 2)
    tail = {n: v for n, v in vals.items() if n >= max(m, 1)}
    if not tail:
        return RadiusReport(p, math.inf, "polynomial", label=series.label)

    def allowance(n):
        return rank * _ilog(n, p)

    head = [-v - allowance(n) for n, v in vals.items() if n < m]
    offset = max([0, *head])
    lower_ok = all(v >= -(allowance(n) + offset) for n, v in tail.items())
    near = any(v <= allowance(n) + offset for n, v in tail.items())
    if lower_ok and near:
        return RadiusReport(p, 1.0, "valuation-slope (log growth)", Fraction(0), series.label)
    expo = min(Fraction(v, n) for n, v in tail.items())
    return RadiusReport(p, float(p) ** float(expo), "valuation-slope", expo, series.label)


def _ilog(n: int, p: int) -> int:
    k = 0
    while p ** (k + 1) <= n:
        k += 1
    return k


def radius(series: GSeries, place="archimedean") -> RadiusReport:
    if place in ("archimedean", "inf", None):
        return archimedean_radius(series)
    return padic_radius(series, int(place))


@dataclass(frozen=True)
class FamilyRadius:
    place: object
    min_radius: float
    max_radius: float
    min_exponent: Fraction | None
    members: tuple[RadiusReport, ...]

    def as_dict(self):
        return {
            "place": self.place,
            "min": self.min_radius,
            "max": self.max_radius,
            "min_exponent": None if self.min_exponent is None else str(self.min_exponent),
            "members": [r.as_dict() for r in self.members],
        }


def family_radius(series: Iterable[GSeries], place="archimedean") -> FamilyRadius:
    """Radius of a family: min over members is the working value, max is reported too."""
    reports = tuple(radius(s, place) for s in series if not s.is_zero())
    if not reports:
        raise TooFewCoefficients("family has no nonzero series")
    lo = min(reports, key=lambda r: r.radius_estimate)
    hi = max(r.radius_estimate for r in reports)
    return FamilyRadius(place, lo.radius_estimate, hi, lo.exponent, reports)


# ---------------------------------------------------------------------------
# proximity


def quad_valuations(x: QuadFieldElem, p: int) -> list[Fraction]:
    """Valuations of x at the places above p, normalized so that v(p) = 1."""
    if x == 0:
        raise ValueError("valuation of 0")
    if x.b == 0:
        return [Fraction(vp_rational(x.a, p))]
    d = x.disc
    disc = d if d % 4 == 1 else 4 * d
    split = False
    if disc % p != 0:
        if p == 2:
            split = d % 8 == 1
        else:
            split = pow(d % p, (p - 1) // 2, p) == 1
    if not split:
        return [Fraction(vp_rational(x.norm(), p), 2)]
    den = math.lcm(x.a.denominator, x.b.denominator)
    A, B = int(x.a * den), int(x.b * den)
    vn = vp_rational(x.norm() * den * den, p)
    K = abs(vn) + 8
    mod = p**K
    roots = sorted(set(r % mod for r in sqrt_mod(d, mod, all_roots=True)))
    # the two embeddings correspond to roots r and -r modulo p^K
    r = roots[0]
    out = []
    for root in (r, (-r) % mod):
        val = (A + B * root) % mod
        v = K if val == 0 else vp_rational(Fraction(val), p)
        out.append(Fraction(v - vp_rational(Fraction(den), p)))
    return out


def proximity(x_value, place, family_radii: Sequence, prec=256, embedding: int = 0) -> bool:
    """|x|_v < min(1, R_v) at the given place (archimedean or a prime)."""
    radii = [r.min_radius if isinstance(r, FamilyRadius) else r.radius_estimate for r in family_radii]
    if place in ("archimedean", "inf", None):
        R = min([1.0, *radii])
        if isinstance(x_value, ComplexBall):
            xb = x_value
        elif isinstance(x_value, QuadFieldElem):
            xb = x_value.embed(prec, conjugate=bool(embedding))
        else:
            xb = ComplexBall.exact(to_fraction(x_value), 0, as_bits(prec))
        hi, lo = float(xb.abs_upper()), float(xb.abs_lower())
        if hi < R:
            return True
        if lo >= R:
            return False
        raise UndecidableAtPrecision(f"|x| in [{lo}, {hi}] straddles {R}")
    p = int(place)
    exps = []
    for r in family_radii:
        e = r.min_exponent if isinstance(r, FamilyRadius) else r.exponent
        if e is None:
            rv = r.min_radius if isinstance(r, FamilyRadius) else r.radius_estimate
            if rv != math.inf:
                raise NotImplementedCase("finite-place radius without an exact exponent")
            continue
        exps.append(Fraction(e))
    bound = min([Fraction(0), *exps])
    if isinstance(x_value, QuadFieldElem) and x_value.b != 0:
        vs = quad_valuations(x_value, p)
        v = vs[min(embedding, len(vs) - 1)]
    else:
        q = to_fraction(x_value.a if isinstance(x_value, QuadFieldElem) else x_value)
        if q == 0:
            return True
        v = Fraction(vp_rational(q, p))
    # |x|_p = p^(-v) < p^bound
    return -v < bound


# ---------------------------------------------------------------------------
# size proxy and coefficient heights


def size_proxy(series: GSeries) -> float:
    """sigma_N = (1/N) sum_{n<=N} [log den(a_0..a_n)/(n+1) + log+ max_{m<=n} |a_m|]."""
    N = series.order
    if N < 1:
        return 0.0
    total = 0.0
    den, biggest = 1, 0.0
    for n, a in enumerate(series.coefficients):
        if a != 0:
            den = math.lcm(den, coeff_den(a))
            biggest = max(biggest, _log_abs(a))
        total += math.log(den) / (n + 1) + max(0.0, biggest)
    return total / N


@dataclass(frozen=True)
class HeightRow:
    label: Label
    n: int
    log_den: float
    log_abs_max: float


def coefficient_height_table(family: Iterable[GSeries]) -> list[HeightRow]:
    rows = []
    for s in family:
        for n, a in enumerate(s.coefficients):
            if a == 0:
                rows.append(HeightRow(s.label, n, 0.0, 0.0))
            else:
                rows.append(HeightRow(s.label, n, math.log(coeff_den(a)), max(0.0, _log_abs(a))))
    return rows


HEIGHT_COLUMNS = ("label", "n", "log_den", "log_abs_max")


def height_table_csv(rows: Iterable[HeightRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(HEIGHT_COLUMNS)
    for r in rows:
        w.writerow([",".join(map(str, r.label)), r.n, f"{r.log_den:.12g}", f"{r.log_abs_max:.12g}"])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# tail bound


def tail_majorant(series: GSeries, x_abs: float, radius_est: float | None = None, fit: int = 10) -> float:
    """Bound for sum_{n>N} |a_n| |x|^n from |a_n| <= C r^-n fitted on the last coefficients.

    r is 0.9 times the ratio-test radius and C the largest |a_n| r^n over the
    last ``fit`` coefficients.
    """
    N = series.order
    if x_abs == 0:
        return 0.0
    if radius_est is None:
        try:
            radius_est = archimedean_radius(series).radius_estimate
        except TooFewCoefficients:
            raise TruncationDominates("too few coefficients to bound the tail") from None
    if radius_est == math.inf:
        return 0.0
    r = 0.9 * radius_est
    q = x_abs / r
    if q >= 1:
        raise TruncationDominates(f"|x| = {x_abs:.4g} outside the fitted disc of radius {r:.4g}")
    logC = max(
        (_log_abs(a) + n * math.log(r) for n, a in enumerate(series.coefficients) if n > N - fit and a != 0),
        default=None,
    )
    if logC is None:
        return 0.0
    return math.exp(logC + (N + 1) * math.log(q)) / (1 - q)
