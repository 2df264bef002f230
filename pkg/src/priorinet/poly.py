"""Dense univariate polynomials with exact rational coefficients.

Coefficients are stored lowest degree first.  Everything here is exact;
the only consumer that needs floats is the numerical eigenvalue fallback
in :mod:`priorinet.spectral`, which does not go through this module.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Sequence

__all__ = ["Poly", "sturm_sequence", "count_roots", "isolate_root", "binomial_series"]


def _trim(coeffs: Sequence[Fraction]) -> tuple[Fraction, ...]:
    end = len(coeffs)
    while end and coeffs[end - 1] == 0:
        end -= 1
    return tuple(coeffs[:end])


class Poly:
    """Polynomial in one indeterminate over the rationals."""

    __slots__ = ("c",)

    def __init__(self, coeffs: Iterable = ()):
        self.c = _trim([c if isinstance(c, Fraction) else Fraction(c) for c in coeffs])

    @classmethod
    def _raw(cls, coeffs: tuple[Fraction, ...]) -> "Poly":
        p = object.__new__(cls)
        p.c = _trim(coeffs)
        return p

    @classmethod
    def const(cls, value) -> "Poly":
        return cls((value,))

    @classmethod
    def monomial(cls, degree: int, coeff=1) -> "Poly":
        if degree < 0:
            raise ValueError("negative degree")
        return cls([0] * degree + [coeff])

    # -- basic protocol ---------------------------------------------------
    @property
    def degree(self) -> int:
        """Degree, with -1 for the zero polynomial."""
        return len(self.c) - 1

    def is_zero(self) -> bool:
        return not self.c

    def lead(self) -> Fraction:
        return self.c[-1] if self.c else Fraction(0)

    def __bool__(self) -> bool:
        return bool(self.c)

    def __eq__(self, other) -> bool:
        if isinstance(other, Poly):
            return self.c == other.c
        if isinstance(other, (int, Fraction)):
            return self.c == _trim((Fraction(other),))
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.c)

    def __repr__(self) -> str:
        if not self.c:
            return "Poly(0)"
        terms = []
        for k, a in enumerate(self.c):
            if a:
                terms.append(f"{a}" if k == 0 else f"{a}*x^{k}")
        return "Poly(" + " + ".join(terms) + ")"

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.const(other)
        a, b = self.c, other.c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for k, v in enumerate(b):
            out[k] += v
        return Poly._raw(tuple(out))

    __radd__ = __add__

    def __neg__(self) -> "Poly":
        return Poly._raw(tuple(-v for v in self.c))

    def __sub__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            other = Poly.const(other)
        return self + (-other)

    def __rsub__(self, other) -> "Poly":
        return Poly.const(other) - self

    def __mul__(self, other) -> "Poly":
        if not isinstance(other, Poly):
            s = Fraction(other)
            if s == 0:
                return Poly()
            return Poly._raw(tuple(v * s for v in self.c))
        a, b = self.c, other.c
        if not a or not b:
            return Poly()
        out = [Fraction(0)] * (len(a) + len(b) - 1)
        for i, x in enumerate(a):
            if x:
                for j, y in enumerate(b):
                    out[i + j] += x * y
        return Poly._raw(tuple(out))

    __rmul__ = __mul__

    def __pow__(self, k: int) -> "Poly":
        result = Poly.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def divmod(self, other: "Poly") -> tuple["Poly", "Poly"]:
        if other.is_zero():
            raise ZeroDivisionError("polynomial division by zero")
        rem = list(self.c)
        db = other.degree
        lb = other.c[-1]
        if len(rem) - 1 < db:
            return Poly(), self
        quot = [Fraction(0)] * (len(rem) - db)
        for k in range(len(rem) - 1, db - 1, -1):
            q = rem[k] / lb
            if q:
                quot[k - db] = q
                for j, v in enumerate(other.c):
                    rem[k - db + j] -= q * v
        return Poly._raw(tuple(quot)), Poly._raw(tuple(rem[:db]))

    def __floordiv__(self, other: "Poly") -> "Poly":
        return self.divmod(other)[0]

    def __mod__(self, other: "Poly") -> "Poly":
        return self.divmod(other)[1]

    def exact_div(self, other: "Poly") -> "Poly":
        q, r = self.divmod(other)
        if r:
            raise ArithmeticError("inexact polynomial division")
        return q

    def monic(self) -> "Poly":
        if not self.c:
            return self
        return self * (1 / self.c[-1])

    def gcd(self, other: "Poly") -> "Poly":
        a, b = self, other
        while b:
            a, b = b, a % b
        return a.monic()

    def derivative(self) -> "Poly":
        return Poly._raw(tuple(k * v for k, v in enumerate(self.c) if k))

    # -- evaluation -------------------------------------------------------
    def __call__(self, x):
        acc = 0 * x if not isinstance(x, (int, Fraction)) else Fraction(0)
        for v in reversed(self.c):
            acc = acc * x + v
        return acc

    def taylor_shift(self, a) -> "Poly":
        """Return ``q`` with ``q(s) = self(s + a)``."""
        a = Fraction(a)
        coeffs = list(self.c)
        n = len(coeffs)
        # repeated synthetic division (Horner's shift)
        for i in range(n):
            for j in range(n - 2, i - 1, -1):
                coeffs[j] += a * coeffs[j + 1]
        return Poly._raw(tuple(coeffs))

    def valuation_at(self, a) -> tuple[int, "Poly"]:
        """Multiplicity ``m`` of the root ``a`` and cofactor ``q`` with
        ``self = (x - a)^m q``.  The zero polynomial is rejected."""
        if not self.c:
            raise ValueError("zero polynomial has no finite valuation")
        a = Fraction(a)
        cur = list(self.c)
        m = 0
        while True:
            # synthetic division by (x - a)
            n = len(cur)
            out = [Fraction(0)] * (n - 1)
            acc = Fraction(0)
            for k in range(n - 1, 0, -1):
                acc = acc * a + cur[k]
                out[k - 1] = acc
            if acc * a + cur[0] != 0:
                return m, Poly._raw(tuple(cur))
            cur = out
            m += 1

    def compose_monomial(self, factor: int) -> "Poly":
        """Substitute ``x -> x**factor``."""
        out = [Fraction(0)] * (factor * self.degree + 1 if self.c else 0)
        for k, v in enumerate(self.c):
            out[k * factor] = v
        return Poly._raw(tuple(out))

    def square_free(self) -> "Poly":
        if self.degree <= 0:
            return self.monic()
        return self.exact_div(self.gcd(self.derivative())).monic()


# -- real root machinery ----------------------------------------------------

def sturm_sequence(p: Poly) -> list[Poly]:
    seq = [p, p.derivative()]
    while seq[-1]:
        r = -(seq[-2] % seq[-1])
        if not r:
            break
        seq.append(r)
    return [q for q in seq if q]


def _sign_changes(seq: list[Poly], x: Fraction) -> int:
    changes = 0
    prev = 0
    for q in seq:
        v = q(x)
        if v == 0:
            continue
        s = 1 if v > 0 else -1
        if prev and s != prev:
            changes += 1
        prev = s
    return changes


def count_roots(p: Poly, lo, hi, seq: list[Poly] | None = None) -> int:
    """Number of distinct real roots of ``p`` in the half-open ``(lo, hi]``."""
    if p.is_zero():
        raise ValueError("zero polynomial has infinitely many roots")
    if p.degree == 0:
        return 0
    if seq is None:
        seq = sturm_sequence(p.square_free())
    return _sign_changes(seq, Fraction(lo)) - _sign_changes(seq, Fraction(hi))


def isolate_root(p: Poly, lo, hi, *, exclude_hi: bool = False, width=Fraction(1, 2**40)):
    """Return a rational interval ``(a, b]`` inside ``(lo, hi]`` holding
    exactly one root of ``p``, or ``None`` when there is none.

    With ``exclude_hi`` a root sitting exactly at ``hi`` is ignored.
    """
    sf = p.square_free()
    seq = sturm_sequence(sf)
    lo, hi = Fraction(lo), Fraction(hi)

    def count(a, b):
        c = _sign_changes(seq, a) - _sign_changes(seq, b)
        if exclude_hi and b == hi and sf(hi) == 0:
            c -= 1
        return c

    if count(lo, hi) <= 0:
        return None
    a, b = lo, hi
    while count(a, b) > 1 or b - a > width:
        mid = (a + b) / 2
        if sf(mid) == 0 and (not exclude_hi or mid != hi):
            return mid, mid
        if count(a, mid) > 0:
            b = mid
        else:
            a = mid
    return a, b


def binomial_series(exponent: Fraction, length: int) -> list[Fraction]:
    """Coefficients of ``(1 - h)**exponent`` up to ``h**(length - 1)``."""
    out = [Fraction(1)]
    coeff = Fraction(1)
    for k in range(1, length):
        coeff = coeff * (exponent - (k - 1)) / k
        out.append(coeff * (-1) ** k)
    return out
