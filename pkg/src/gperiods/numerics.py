"""Exact rational and quadratic-field arithmetic, complex balls, recognition.

Rationals are :class:`fractions.Fraction`.  Complex balls wrap ``flint.acb``
(Arb midpoint-radius arithmetic); this module adds the branch-cut policy,
precision bookkeeping and conversions used by the rest of the package.
"""

from __future__ import annotations

import math
import threading
from contextlib import contextmanager
from dataclasses import dataclass
from fractions import Fraction
from numbers import Integral, Rational as _RationalABC

import mpmath
from flint import acb, arb, ctx, fmpq, fmpz

from .errors import AmbiguousCandidate, BranchCutStraddle, DivisorContainsZero, NotFound

Rational = Fraction

_PREC_LOCK = threading.RLock()


@dataclass(frozen=True)
class Precision:
    bits: int = 256

    def __post_init__(self):
        if int(self.bits) < 64:
            raise ValueError("precision must be at least 64 bits")


def as_bits(prec) -> int:
    if isinstance(prec, Precision):
        return prec.bits
    bits = int(prec)
    if bits < 64:
        raise ValueError("precision must be at least 64 bits")
    return bits


@contextmanager
def working_precision(bits: int):
    """Run Arb operations at ``bits`` of precision (process-wide lock)."""
    with _PREC_LOCK:
        saved = ctx.prec
        ctx.prec = bits
        try:
            yield
        finally:
            ctx.prec = saved


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (Integral, _RationalABC)):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x.strip())
    raise TypeError(f"cannot convert {type(x).__name__} to an exact rational")


def squarefree_part(n: int) -> int:
    if n == 0:
        raise ValueError("0 has no squarefree part")
    sign = -1 if n < 0 else 1
    n = abs(n)
    out, p = 1, 2
    while p * p <= n:
        e = 0
        while n % p == 0:
            n //= p
            e += 1
        if e % 2:
            out *= p
        p += 1
    return sign * out * n


def _is_squarefree(d: int) -> bool:
    return d != 0 and squarefree_part(d) == d


# ---------------------------------------------------------------------------
# quadratic fields


@dataclass(frozen=True)
class QuadField:
    """The field Q(sqrt(d)) for a squarefree integer d != 0, 1."""

    d: int

    def __post_init__(self):
        if self.d in (0, 1) or not _is_squarefree(self.d):
            raise ValueError(f"{self.d} is not a squarefree integer other than 0, 1")

    @property
    def discriminant(self) -> int:
        return self.d if self.d % 4 == 1 else 4 * self.d

    @property
    def is_imaginary(self) -> bool:
        return self.d < 0

    def gen(self) -> "QuadFieldElem":
        return QuadFieldElem(0, 1, self.d)

    def __call__(self, a, b=0) -> "QuadFieldElem":
        return QuadFieldElem(a, b, self.d)

    def label(self) -> str:
        return f"Q(sqrt({self.d}))"


class QuadFieldElem:
    """a + b*sqrt(disc) with exact rational a, b and squarefree disc."""

    __slots__ = ("a", "b", "disc")

    def __init__(self, a, b, disc: int):
        a, b = to_fraction(a), to_fraction(b)
        disc = int(disc)
        if disc in (0, 1) or not _is_squarefree(disc):
            raise ValueError(f"{disc} is not a squarefree integer other than 0, 1")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "disc", disc)

    def __setattr__(self, name, value):
        raise AttributeError("QuadFieldElem is immutable")

    @property
    def field(self) -> QuadField:
        return QuadField(self.disc)

    def is_rational(self) -> bool:
        return self.b == 0

    def _coerce(self, other):
        if isinstance(other, QuadFieldElem):
            if other.disc != self.disc:
                if other.b == 0:
                    return QuadFieldElem(other.a, 0, self.disc)
                if self.b == 0:
                    return None
                raise ValueError("elements of different quadratic fields")
            return other
        try:
            return QuadFieldElem(to_fraction(other), 0, self.disc)
        except TypeError:
            return NotImplemented

    def __add__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            return other + self
        return QuadFieldElem(self.a + o.a, self.b + o.b, self.disc)

    __radd__ = __add__

    def __neg__(self):
        return QuadFieldElem(-self.a, -self.b, self.disc)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            return -(other - self)
        return QuadFieldElem(self.a - o.a, self.b - o.b, self.disc)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            return other * self
        return QuadFieldElem(
            self.a * o.a + self.disc * self.b * o.b, self.a * o.b + self.b * o.a, self.disc
        )

    __rmul__ = __mul__

    def norm(self) -> Fraction:
        return self.a * self.a - self.disc * self.b * self.b

    def trace(self) -> Fraction:
        return 2 * self.a

    def conjugate(self) -> "QuadFieldElem":
        return QuadFieldElem(self.a, -self.b, self.disc)

    def inverse(self) -> "QuadFieldElem":
        n = self.norm()
        if n == 0:
            raise ZeroDivisionError("inverse of zero")
        return QuadFieldElem(self.a / n, -self.b / n, self.disc)

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is NotImplemented:
            return o
        if o is None:
            return QuadFieldElem(self.a, 0, other.disc) / other
        return self * o.inverse()

    def __rtruediv__(self, other):
        return self.inverse() * other

    def __pow__(self, e: int):
        e = int(e)
        if e < 0:
            return self.inverse() ** (-e)
        out, base = QuadFieldElem(1, 0, self.disc), self
        while e:
            if e & 1:
                out = out * base
            base = base * base
            e >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, QuadFieldElem):
            if self.b == 0 and other.b == 0:
                return self.a == other.a
            return (self.a, self.b, self.disc) == (other.a, other.b, other.disc)
        try:
            return self.b == 0 and self.a == to_fraction(other)
        except TypeError:
            return NotImplemented

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.disc))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def __repr__(self):
        return f"QuadFieldElem({self.a}, {self.b}, {self.disc})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        root = "i" if self.disc == -1 else f"sqrt({self.disc})"
        tail = root if self.b == 1 else f"-{root}" if self.b == -1 else f"({self.b})*{root}"
        if self.a == 0:
            return tail
        return f"{self.a} + {tail}" if not tail.startswith("-") else f"{self.a} {tail}"

    def min_poly(self) -> list[int]:
        """Primitive integer minimal polynomial, highest degree first."""
        if self.b == 0:
            return [self.a.denominator, -self.a.numerator]
        coeffs = [Fraction(1), -self.trace(), self.norm()]
        den = math.lcm(*(c.denominator for c in coeffs))
        ints = [int(c * den) for c in coeffs]
        g = math.gcd(*ints)
        return [c // g for c in ints]

    def height(self) -> float:
        """Absolute logarithmic Weil height (Mahler measure of the minimal polynomial)."""
        if self.b == 0:
            return rational_height(self.a)
        c2, c1, c0 = self.min_poly()
        with mpmath.workdps(40):
            total = mpmath.log(abs(c2))
            for r in mpmath.polyroots([c2, c1, c0]):
                total += max(mpmath.mpf(0), mpmath.log(abs(r)))
            return float(total / 2)

    def embed(self, prec=256, conjugate: bool = False) -> "ComplexBall":
        """Image under the embedding sending sqrt(disc) to its principal root (or the other one)."""
        bits = as_bits(prec)
        with working_precision(bits):
            root = acb(self.disc).sqrt()
            if conjugate:
                root = -root
            v = acb(_fmpq(self.a)) + acb(_fmpq(self.b)) * root
        return ComplexBall(v, bits)


def rational_height(q) -> float:
    q = to_fraction(q)
    return math.log(max(abs(q.numerator), q.denominator, 1))


def field_height(x) -> float:
    if isinstance(x, QuadFieldElem):
        return x.height()
    return rational_height(x)


def conj_elem(x):
    """Galois conjugate of an exact field element (identity on rationals)."""
    return x.conjugate() if isinstance(x, QuadFieldElem) else x


def _fmpq(q: Fraction) -> fmpq:
    return fmpq(q.numerator, q.denominator)


# ---------------------------------------------------------------------------
# complex balls


def _arb_to_mpf(x: arb):
    man, exp = x.mid().man_exp() if not x.mid().is_zero() else (fmpz(0), fmpz(0))
    return mpmath.mpf(mpmath.libmp.from_man_exp(int(man), int(exp)))


def _mpf_to_arb(x) -> arb:
    if not hasattr(x, "_mpf_"):
        with mpmath.workprec(256):
            x = mpmath.mpf(x)
    sign, man, exp, _ = x._mpf_
    if man == 0:
        return arb(0)
    return arb((fmpz(int(-man if sign else man)), fmpz(int(exp))))


def _upper(x: arb):
    """A float-free upper bound for a nonnegative arb, returned as an mpf."""
    with mpmath.workprec(64):
        m = _arb_to_mpf(x)
        r = _arb_to_mpf(x.rad())
        return (abs(m) + r) * (1 + mpmath.ldexp(1, -60))


class ComplexBall:
    """Immutable complex ball backed by an Arb ``acb`` value.

    ``prec`` records the working precision (bits) used for operations that
    start from this ball.  Binary operations run at the larger of the two.
    """

    __slots__ = ("_v", "prec")

    def __init__(self, value, prec=256):
        bits = as_bits(prec)
        if isinstance(value, ComplexBall):
            v = value._v
        elif isinstance(value, acb):
            v = value
        else:
            v = _exact_to_acb(value, bits)
        object.__setattr__(self, "_v", v)
        object.__setattr__(self, "prec", bits)

    def __setattr__(self, name, value):
        raise AttributeError("ComplexBall is immutable")

    # construction -----------------------------------------------------
    @classmethod
    def exact(cls, re, im=0, prec=256) -> "ComplexBall":
        bits = as_bits(prec)
        with working_precision(bits):
            v = acb(_exact_real(re), _exact_real(im))
        return cls(v, bits)

    @classmethod
    def from_mid_rad(cls, mid_re, mid_im=0, rad=0, prec=256) -> "ComplexBall":
        bits = as_bits(prec)
        with working_precision(bits):
            re = arb(_mid_to_arb(mid_re), _mid_to_arb(rad))
            im = arb(_mid_to_arb(mid_im), _mid_to_arb(rad))
        return cls(acb(re, im), bits)

    @classmethod
    def pi(cls, prec=256) -> "ComplexBall":
        bits = as_bits(prec)
        with working_precision(bits):
            v = acb.pi()
        return cls(v, bits)

    @classmethod
    def two_pi_i(cls, prec=256) -> "ComplexBall":
        bits = as_bits(prec)
        with working_precision(bits):
            v = acb(0, 2 * arb.pi())
        return cls(v, bits)

    # views ------------------------------------------------------------
    @property
    def acb(self) -> acb:
        return self._v

    @property
    def mid_re(self):
        return _arb_to_mpf(self._v.real)

    @property
    def mid_im(self):
        return _arb_to_mpf(self._v.imag)

    @property
    def rad(self):
        """Upper bound for the radius of a disc containing the ball."""
        return _upper(self._v.rad())

    @property
    def real(self) -> "ComplexBall":
        with working_precision(self.prec):
            v = acb(self._v.real)
        return ComplexBall(v, self.prec)

    @property
    def imag(self) -> "ComplexBall":
        with working_precision(self.prec):
            v = acb(self._v.imag)
        return ComplexBall(v, self.prec)

    def mid(self):
        with mpmath.workprec(self.prec):
            return mpmath.mpc(self.mid_re, self.mid_im)

    def abs_upper(self):
        return _upper(self._v.abs_upper())

    def abs_lower(self):
        x = self._v.abs_lower()
        return _arb_to_mpf(x)

    def contains(self, x) -> bool:
        if isinstance(x, ComplexBall):
            return bool(self._v.contains(x._v))
        return bool(self._v.contains(_exact_to_acb(x, max(self.prec, 64), exact=True)))

    def contains_zero(self) -> bool:
        return bool(self._v.contains(acb(0)))

    def overlaps(self, other: "ComplexBall") -> bool:
        return bool(self._v.overlaps(other._v))

    def is_real(self) -> bool:
        im = self._v.imag
        return im.is_zero()

    def __repr__(self):
        return f"ComplexBall({self._v.str(radius=True)}, prec={self.prec})"

    def str(self, digits: int = 20) -> str:
        return self._v.str(digits, radius=True)

    # arithmetic -------------------------------------------------------
    def _other(self, other):
        if isinstance(other, ComplexBall):
            return other
        return ComplexBall(other, self.prec)

    def _bin(self, other, fn):
        try:
            o = self._other(other)
        except TypeError:
            return NotImplemented
        bits = max(self.prec, o.prec)
        with working_precision(bits):
            v = fn(self._v, o._v)
        return ComplexBall(v, bits)

    def __add__(self, other):
        return self._bin(other, lambda a, b: a + b)

    def __radd__(self, other):
        return self._bin(other, lambda a, b: b + a)

    def __sub__(self, other):
        return self._bin(other, lambda a, b: a - b)

    def __rsub__(self, other):
        return self._bin(other, lambda a, b: b - a)

    def __mul__(self, other):
        return self._bin(other, lambda a, b: a * b)

    def __rmul__(self, other):
        return self._bin(other, lambda a, b: b * a)

    def __truediv__(self, other):
        o = self._other(other)
        if o.contains_zero():
            raise DivisorContainsZero("divisor ball contains 0")
        return self._bin(o, lambda a, b: a / b)

    def __rtruediv__(self, other):
        return self._other(other) / self

    def __neg__(self):
        # flint rounds even negation to the context precision
        with working_precision(self.prec):
            v = -self._v
        return ComplexBall(v, self.prec)

    def __pow__(self, e: int):
        e = int(e)
        if e < 0:
            return ComplexBall(1, self.prec) / (self ** (-e))
        with working_precision(self.prec):
            v = self._v ** e
        return ComplexBall(v, self.prec)

    def conjugate(self) -> "ComplexBall":
        with working_precision(self.prec):
            v = self._v.conjugate()
        return ComplexBall(v, self.prec)

    def _check_cut(self, allow_zero: bool):
        re, im = self._v.real, self._v.imag
        if not allow_zero and self.contains_zero():
            raise BranchCutStraddle("ball contains the branch point 0")
        if im.is_zero():
            return  # exact real input: boundary value taken from the upper side
        if im.contains(0) and re.lower() < 0:
            raise BranchCutStraddle("ball straddles the negative real axis")

    def sqrt(self) -> "ComplexBall":
        self._check_cut(allow_zero=True)
        with working_precision(self.prec):
            v = self._v.sqrt()
        return ComplexBall(v, self.prec)

    def log(self) -> "ComplexBall":
        self._check_cut(allow_zero=False)
        with working_precision(self.prec):
            v = self._v.log()
        return ComplexBall(v, self.prec)

    def exp(self) -> "ComplexBall":
        with working_precision(self.prec):
            v = self._v.exp()
        return ComplexBall(v, self.prec)

    def with_prec(self, prec) -> "ComplexBall":
        return ComplexBall(self._v, as_bits(prec))

    def inflate(self, extra) -> "ComplexBall":
        """Add ``extra`` (nonnegative, mpf/float/Fraction) to both component radii."""
        with working_precision(self.prec):
            r = _mid_to_arb(extra)
            re = self._v.real + arb(0, r)
            im = self._v.imag + arb(0, r)
        return ComplexBall(acb(re, im), self.prec)


def _mid_to_arb(x) -> arb:
    if isinstance(x, arb):
        return x
    if isinstance(x, (int, Fraction)):
        return arb(_fmpq(Fraction(x)))
    if isinstance(x, str):
        return arb(x)
    return _mpf_to_arb(x)


def _exact_real(x) -> arb:
    if isinstance(x, arb):
        return x
    if isinstance(x, (Integral, Fraction, _RationalABC)):
        return arb(_fmpq(Fraction(x)))
    if isinstance(x, float):
        return _mpf_to_arb(mpmath.mpf(x))
    if isinstance(x, str):
        return arb(_fmpq(Fraction(x)))
    return _mpf_to_arb(x)


def _exact_to_acb(value, bits: int, exact: bool = False) -> acb:
    with working_precision(bits if not exact else max(bits, 64)):
        if isinstance(value, acb):
            return value
        if isinstance(value, QuadFieldElem):
            return value.embed(bits)._v
        if isinstance(value, complex):
            return acb(_mpf_to_arb(value.real), _mpf_to_arb(value.imag))
        if isinstance(value, mpmath.mpc):
            return acb(_mpf_to_arb(value.real), _mpf_to_arb(value.imag))
        if isinstance(value, (Integral, Fraction, _RationalABC, float, str)) or hasattr(value, "_mpf_"):
            return acb(_exact_real(value))
    raise TypeError(f"cannot convert {type(value).__name__} to a complex ball")


def ball_arith(op: str, args, prec=256) -> ComplexBall:
    """Dispatch one of add, sub, mul, div, sqrt, log, exp, pi on complex balls."""
    bits = as_bits(prec)
    balls = [a if isinstance(a, ComplexBall) else ComplexBall(a, bits) for a in args]
    balls = [b.with_prec(bits) for b in balls]
    if op == "pi":
        return ComplexBall.pi(bits)
    if op == "add":
        out = balls[0]
        for b in balls[1:]:
            out = out + b
        return out
    if op == "sub":
        return balls[0] - balls[1]
    if op == "mul":
        out = balls[0]
        for b in balls[1:]:
            out = out * b
        return out
    if op == "div":
        return balls[0] / balls[1]
    if op == "sqrt":
        return balls[0].sqrt()
    if op == "log":
        return balls[0].log()
    if op == "exp":
        return balls[0].exp()
    raise ValueError(f"unknown operation {op!r}")


def eval_exact(x, prec=256) -> ComplexBall:
    """Embed an exact field element (principal embedding) as a ball."""
    if isinstance(x, ComplexBall):
        return x
    return ComplexBall(x, prec)


# ---------------------------------------------------------------------------
# recognition


def _lll(rows):
    from sympy import QQ, ZZ
    from sympy.polys.matrices import DomainMatrix

    m = DomainMatrix([[ZZ(int(v)) for v in r] for r in rows], (len(rows), len(rows[0])), ZZ)
    return [[int(v) for v in r] for r in m.lll(delta=QQ(99, 100)).to_list()]


def _scale_exponent(z: ComplexBall, bits: int) -> int:
    rad = z.rad
    if rad == 0:
        return bits - 8
    e = int(-mpmath.log(rad, 2)) - 4
    return max(8, min(bits - 8, e))


def _real_relation(x, basis, scale_bits: int):
    """Small integer vector c with c0*x + sum ci*basis_i ~ 0 (x and basis are mpf)."""
    scale = mpmath.ldexp(1, scale_bits)
    vals = [x] + list(basis)
    k = len(vals)
    rows = []
    for i, v in enumerate(vals):
        row = [0] * k + [int(mpmath.nint(v * scale))]
        row[i] = 1
        rows.append(row)
    reduced = _lll(rows)
    best = None
    for r in reduced:
        coeffs = r[:k]
        if coeffs[0] == 0:
            continue
        key = sum(c * c for c in r)
        if best is None or key < best[0]:
            best = (key, coeffs)
    if best is None:
        raise NotFound("lattice reduction found no relation involving z")
    coeffs = best[1]
    if coeffs[0] < 0:
        coeffs = [-c for c in coeffs]
    return coeffs


def separation_bound(field: QuadField | None, height_bound: float) -> float:
    """Lower bound for |a - b| over distinct field elements of height <= height_bound."""
    if field is None:
        return math.exp(-2 * height_bound)
    return math.exp(-2 * (2 * height_bound + math.log(2)))


def recognize_algebraic(z: ComplexBall, field: QuadField | None, height_bound: float, prec=256):
    """Recognize ``z`` as an element of Q (``field=None``) or of a quadratic field.

    Returns a Fraction for Q and a QuadFieldElem otherwise.  Raises
    AmbiguousCandidate when the ball is too wide to separate elements of the
    requested height, and NotFound when no candidate of bounded height fits.
    """
    bits = as_bits(prec)
    if not isinstance(z, ComplexBall):
        z = ComplexBall(z, bits)
    rad = z.rad
    if 8 * rad >= separation_bound(field, height_bound):
        raise AmbiguousCandidate(
            f"ball radius {mpmath.nstr(rad, 5)} cannot separate elements of height <= {height_bound}"
        )
    if rad >= mpmath.ldexp(1, -bits // 2):
        raise NotFound("input ball is wider than 2^-(bits/2); raise the precision")
    tol = mpmath.ldexp(1, -bits // 4)
    scale_bits = _scale_exponent(z, bits)
    with mpmath.workprec(bits + 32):
        re, im = z.mid_re, z.mid_im
        if field is None or field.d < 0:
            if field is None:
                if abs(im) > max(tol, 4 * rad):
                    raise NotFound("ball is not real; no rational candidate")
                parts = [re]
            else:
                parts = [re, im / mpmath.sqrt(-field.d)]
            rats = []
            for part in parts:
                q, p = _real_relation(part, [mpmath.mpf(-1)], scale_bits)
                rats.append(Fraction(p, q))
            cand = rats[0] if field is None else QuadFieldElem(rats[0], rats[1], field.d)
        else:
            if abs(im) > max(tol, 4 * rad):
                raise NotFound("ball is not real; real quadratic candidates only")
            q, p0, p1 = _real_relation(re, [mpmath.mpf(-1), -mpmath.sqrt(field.d)], scale_bits)
            cand = QuadFieldElem(Fraction(p0, q), Fraction(p1, q), field.d)
    if field_height(cand) > height_bound + 1e-12:
        raise NotFound(f"best candidate {cand} exceeds the height bound {height_bound}")
    diff = (z - ComplexBall(cand, bits)).abs_upper()
    if diff > 4 * rad + mpmath.ldexp(1, -bits + 8):
        raise NotFound(f"best candidate {cand} has residual {mpmath.nstr(diff, 5)}")
    return cand
