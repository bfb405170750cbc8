"""Imaginary quadratic orders, reduced forms, CM points and j(tau)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
from flint import acb, arb, fmpq

from .errors import InvalidDiscriminant, NonFundamental, NotReduced
from .numerics import ComplexBall, as_bits, working_precision

HEEGNER = (-3, -4, -7, -8, -11, -19, -43, -67, -163)


def is_discriminant(D: int) -> bool:
    return D < 0 and D % 4 in (0, 1)


def _squarefree(n: int) -> bool:
    return n != 0 and all(e == 1 for e in _factor(abs(n)).values())


def _factor(n: int) -> dict[int, int]:
    out, p = {}, 2
    while p * p <= n:
        while n % p == 0:
            out[p] = out.get(p, 0) + 1
            n //= p
        p += 1 if p == 2 else 2
    if n > 1:
        out[n] = out.get(n, 0) + 1
    return out


def is_fundamental(D: int) -> bool:
    if not is_discriminant(D):
        return False
    if D % 4 == 1:
        return _squarefree(D)
    m = D // 4
    return m % 4 in (2, 3) and _squarefree(m)


def units_count(D: int) -> int:
    return {-3: 6, -4: 4}.get(D, 2)


@dataclass(frozen=True)
class CMOrder:
    D: int
    h: int
    forms: tuple[tuple[int, int, int], ...]
    fundamental: bool = field(default=False)

    @property
    def min_a(self) -> int:
        return min(f[0] for f in self.forms)


def _check(D: int):
    if not isinstance(D, int) and not hasattr(D, "__index__"):
        raise InvalidDiscriminant(f"{D!r} is not an integer")
    D = int(D)
    if not is_discriminant(D):
        raise InvalidDiscriminant(f"{D} is not a negative discriminant (D < 0, D = 0 or 1 mod 4)")
    return D


def reduced_forms(D: int) -> tuple[tuple[int, int, int], ...]:
    """Primitive reduced forms (a, b, c) of discriminant D, enumerated by b."""
    D = _check(D)
    out = []
    bmax = math.isqrt(-D // 3)
    for b in range(D % 2, bmax + 1, 2):
        ac = (b * b - D) // 4
        a = max(b, 1)
        while a * a <= ac:
            if ac % a == 0:
                c = ac // a
                if math.gcd(math.gcd(a, b), c) == 1:
                    out.append((a, b, c))
                    if 0 < b < a < c:
                        out.append((a, -b, c))
            a += 1
    out.sort(key=lambda f: (f[0], abs(f[1]), -f[1]))
    return tuple(out)


def class_number(D: int) -> CMOrder:
    D = _check(D)
    forms = reduced_forms(D)
    return CMOrder(D, len(forms), forms, is_fundamental(D))


def class_number_by_a(D: int) -> int:
    """Independent count of reduced primitive forms, enumerated by a then b."""
    D = _check(D)
    count = 0
    amax = math.isqrt(-D // 3)
    for a in range(1, amax + 1):
        for b in range(-a + 1, a + 1):
            num = b * b - D
            if num % (4 * a):
                continue
            c = num // (4 * a)
            if c < a or (c == a and b < 0):
                continue
            if math.gcd(math.gcd(a, abs(b)), c) == 1:
                count += 1
    return count


def discriminants(max_abs_D: int, fundamental_only: bool = False):
    for n in range(3, max_abs_D + 1):
        D = -n
        if not is_discriminant(D):
            continue
        if fundamental_only and not is_fundamental(D):
            continue
        yield D


def heegner_scan(max_abs_D: int, include_nonfundamental: bool = False) -> list[int]:
    """All D with |D| <= max_abs_D and h(D) = 1, in decreasing order (-3, -4, ...)."""
    return [
        D
        for D in discriminants(max_abs_D, fundamental_only=not include_nonfundamental)
        if len(reduced_forms(D)) == 1
    ]


def cm_scan(max_abs_D: int, fundamental_only: bool = False) -> list[CMOrder]:
    return [class_number(D) for D in discriminants(max_abs_D, fundamental_only)]


# ---------------------------------------------------------------------------
# CM points and the j-function


def form_tau(form, prec=256) -> ComplexBall:
    """The root (-b + sqrt(D))/(2a) of a positive definite form, in the upper half plane."""
    a, b, c = form
    D = b * b - 4 * a * c
    bits = as_bits(prec)
    with working_precision(bits):
        tau = (acb(-b) + acb(0, arb(-D).sqrt())) / (2 * a)
    return ComplexBall(tau, bits)


def _theta_sum(q: acb, qabs_upper: float, exponents, bits: int, sign: bool = False):
    """Sum of (+-1)^n q^e(n) for n >= 0 plus a geometric tail bound folded into the radius."""
    total = acb(0)
    n = 0
    eps = 2.0 ** (-bits - 10)
    while True:
        e = exponents(n)
        term = q ** e
        if sign and n % 2:
            term = -term
        total += term
        n += 1
        nxt = exponents(n)
        if qabs_upper ** nxt < eps:
            tail = qabs_upper ** nxt / (1 - qabs_upper)
            return total + acb(arb(0, tail), arb(0, tail))


def j_of_tau(tau: ComplexBall, prec=256) -> ComplexBall:
    """j(tau) from Jacobi theta series in the nome exp(i pi tau).

    j = 32 (t2^8 + t3^8 + t4^8)^3 / (t2 t3 t4)^8 with tail bounds folded in.
    """
    bits = as_bits(prec)
    tau = tau if isinstance(tau, ComplexBall) else ComplexBall(tau, bits)
    work = bits + 40
    with working_precision(work):
        t = tau.acb
        if not (t.imag > arb(fmpq(1, 2))):
            raise NotReduced("Im(tau) must exceed 1/2; reduce tau first")
        q = (acb(0, arb.pi()) * t).exp()
        qabs = float(q.abs_upper())
        # theta3 = 1 + 2 sum_{n>=1} q^{n^2}, theta4 with alternating signs,
        # theta2 = 2 q^{1/4} sum_{n>=0} q^{n(n+1)}
        s3 = _theta_sum(q, qabs, lambda n: (n + 1) ** 2, work)
        s4 = _theta_sum(q, qabs, lambda n: (n + 1) ** 2, work, sign=True)
        s2 = _theta_sum(q, qabs, lambda n: n * (n + 1), work)
        th3 = 1 + 2 * s3
        th4 = 1 - 2 * s4
        q4 = (acb(0, arb.pi()) * t / 4).exp()
        th2 = 2 * q4 * s2
        num = th2 ** 8 + th3 ** 8 + th4 ** 8
        den = (th2 * th3 * th4) ** 8
        j = 32 * num ** 3 / den
    return ComplexBall(j, bits)


def reduce_tau(tau: ComplexBall, max_steps: int = 200) -> ComplexBall:
    """Move tau into the standard fundamental domain (decisions taken on midpoints)."""
    bits = tau.prec
    t = tau
    for _ in range(max_steps):
        shift = int(round(float(t.mid_re)))
        if shift:
            t = t - shift
        if float(abs(t.mid())) < 1 - 1e-15:
            t = ComplexBall(-1, bits) / t
            continue
        return t
    raise NotReduced("tau reduction did not terminate")


def j_from_any_tau(tau: ComplexBall, prec=256) -> ComplexBall:
    return j_of_tau(reduce_tau(tau), prec)


@dataclass(frozen=True)
class CMPoint:
    D: int
    tau: ComplexBall
    j_value: ComplexBall
    degree: int


def cm_points(D: int, prec=256) -> list[CMPoint]:
    order = class_number(D)
    return [
        CMPoint(D, (tau := form_tau(f, prec)), j_of_tau(tau, prec), order.h) for f in order.forms
    ]


@lru_cache(maxsize=None)
def rational_singular_moduli(max_abs_D: int = 10_000, prec: int = 256) -> dict[int, int]:
    """Integer j-invariants of all class-number-one orders with |D| <= max_abs_D, keyed by j."""
    out: dict[int, int] = {}
    for D in heegner_scan(max_abs_D, include_nonfundamental=True):
        form = reduced_forms(D)[0]
        j = j_of_tau(form_tau(form, prec), prec)
        z = j.acb.real.unique_fmpz()
        if z is None or not j.acb.imag.contains(0):
            raise ArithmeticError(f"j for D={D} is not recognized as an integer")
        out.setdefault(int(z), D)
    return out


def singular_moduli_balls(max_abs_D: int, prec: int = 128) -> list[tuple[int, ComplexBall]]:
    """(D, j(tau)) for every reduced form with |D| <= max_abs_D."""
    out = []
    for D in discriminants(max_abs_D):
        for f in reduced_forms(D):
            out.append((D, j_of_tau(form_tau(f, prec), prec)))
    return out


# ---------------------------------------------------------------------------
# Chowla-Selberg


def kronecker(D: int, a: int) -> int:
    return int(gmpy2.kronecker(D, a))


def chowla_selberg_period(D: int, prec=256) -> ComplexBall:
    """sqrt(pi) * prod_{0<a<|D|} Gamma(a/|D|)^(chi(a) w / (4 h)) as an enclosure."""
    if not is_fundamental(D):
        raise NonFundamental(f"{D} is not a fundamental discriminant")
    bits = as_bits(prec)
    h = class_number(D).h
    w = units_count(D)
    n = -D
    with working_precision(bits + 20):
        total = arb(0)
        for a in range(1, n):
            chi = kronecker(D, a)
            if chi:
                total += chi * arb(fmpq(a, n)).lgamma()
        value = arb.pi().sqrt() * (total * fmpq(w, 4 * h)).exp()
    return ComplexBall(acb(value), bits)
