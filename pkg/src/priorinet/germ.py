"""Rational functions of the discount factor and their germs at 1⁻.

A :class:`RationalGerm` is ``num(beta) / den(beta)`` with
``beta = alpha ** (1 / L)``.  Germs are compared by their sign on a left
neighbourhood of ``alpha = 1``, which is decided exactly: strip the powers of
``(beta - 1)`` from numerator and denominator and read the sign of what is
left at ``beta = 1``.

Laurent coefficients are taken in ``h = 1 - alpha``.  Since
``beta = (1 - h) ** (1 / L)`` has a power series in ``h`` with rational
coefficients, the expansion never leaves the rationals.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .poly import Poly, binomial_series

__all__ = [
    "Order",
    "RationalGerm",
    "LaurentGerm",
    "GermContractError",
    "PoleOrderError",
    "germ_compare",
    "laurent_coefficients",
]

DEFAULT_DEPTH = 3


class GermContractError(ValueError):
    """Comparison requested on a germ without an exact representative."""


class PoleOrderError(ArithmeticError):
    """A representative has a pole of order greater than one at 1."""


class Order(enum.IntEnum):
    LESS = -1
    EQUAL = 0
    GREATER = 1


@dataclass(frozen=True)
class RationalGerm:
    """Exact rational function of ``beta``; kept reduced with monic denominator."""

    num: Poly
    den: Poly
    L: int = 1

    def __post_init__(self):
        if self.den.is_zero():
            raise ZeroDivisionError("zero denominator")
        num, den = self.num, self.den
        if num.is_zero():
            num, den = Poly(), Poly.const(1)
        else:
            g = num.gcd(den)
            if g.degree > 0:
                num, den = num.exact_div(g), den.exact_div(g)
            lead = den.lead()
            if lead != 1:
                num, den = num * (1 / lead), den * (1 / lead)
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def const(cls, value, L: int = 1) -> "RationalGerm":
        return cls(Poly.const(value), Poly.const(1), L)

    @classmethod
    def from_alpha(cls, num: Poly, den: Poly) -> "RationalGerm":
        """Build from polynomials in ``alpha`` itself."""
        return cls(num, den, 1)

    def rescale(self, L: int) -> "RationalGerm":
        """Same function written in ``beta' = alpha ** (1 / L)``."""
        if L == self.L:
            return self
        if L % self.L:
            raise ValueError(f"cannot rescale from L={self.L} to L={L}")
        k = L // self.L
        return RationalGerm(self.num.compose_monomial(k), self.den.compose_monomial(k), L)

    def _common(self, other: "RationalGerm") -> tuple["RationalGerm", "RationalGerm"]:
        if self.L == other.L:
            return self, other
        L = self.L * other.L // math.gcd(self.L, other.L)
        return self.rescale(L), other.rescale(L)

    def __add__(self, other) -> "RationalGerm":
        if not isinstance(other, RationalGerm):
            other = RationalGerm.const(other, self.L)
        a, b = self._common(other)
        if a.den == b.den:
            return RationalGerm(a.num + b.num, a.den, a.L)
        return RationalGerm(a.num * b.den + b.num * a.den, a.den * b.den, a.L)

    __radd__ = __add__

    def __neg__(self) -> "RationalGerm":
        return RationalGerm(-self.num, self.den, self.L)

    def __sub__(self, other) -> "RationalGerm":
        if not isinstance(other, RationalGerm):
            other = RationalGerm.const(other, self.L)
        return self + (-other)

    def __rsub__(self, other) -> "RationalGerm":
        return (-self) + other

    def __mul__(self, other) -> "RationalGerm":
        if not isinstance(other, RationalGerm):
            return RationalGerm(self.num * Fraction(other), self.den, self.L)
        a, b = self._common(other)
        return RationalGerm(a.num * b.num, a.den * b.den, a.L)

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return self.num.is_zero()

    def evaluate_beta(self, beta) -> Fraction:
        beta = Fraction(beta)
        return self.num(beta) / self.den(beta)

    def evaluate(self, alpha) -> Fraction:
        """Evaluate at a rational ``alpha`` whose ``L``-th root is rational."""
        from .plds import exact_power

        return self.evaluate_beta(exact_power(Fraction(alpha), Fraction(1, self.L)))

    def pole_order(self) -> int:
        """Order of the pole at ``alpha = 1`` (negative for a zero)."""
        if self.is_zero():
            return -(10**9)
        mn, _ = self.num.valuation_at(1)
        md, _ = self.den.valuation_at(1)
        return md - mn

    def sign_near_one(self) -> int:
        """Sign of the function on ``(1 - delta, 1)`` for small ``delta``."""
        if self.is_zero():
            return 0
        mn, n1 = self.num.valuation_at(1)
        md, d1 = self.den.valuation_at(1)
        s = 1 if n1(1) > 0 else -1
        if d1(1) < 0:
            s = -s
        # (beta - 1)^m is negative for beta < 1 when m is odd
        if (mn + md) % 2:
            s = -s
        return s

    def laurent(self, depth: int = DEFAULT_DEPTH) -> list[Fraction]:
        """Coefficients ``[c_-1, c_0, ..., c_depth]`` in powers of ``1 - alpha``."""
        return laurent_coefficients(self.num, self.den, self.L, depth)


def _series_mul(a: Sequence[Fraction], b: Sequence[Fraction], n: int) -> list[Fraction]:
    out = [Fraction(0)] * n
    for i, x in enumerate(a[:n]):
        if x:
            for j in range(min(len(b), n - i)):
                out[i + j] += x * b[j]
    return out


def _series_inv(a: Sequence[Fraction], n: int) -> list[Fraction]:
    if a[0] == 0:
        raise ZeroDivisionError("series with zero constant term")
    out = [Fraction(0)] * n
    out[0] = 1 / a[0]
    for k in range(1, n):
        acc = Fraction(0)
        for j in range(1, min(k, len(a) - 1) + 1):
            acc += a[j] * out[k - j]
        out[k] = -acc / a[0]
    return out


def _compose_in_s(p: Poly, s_series: Sequence[Fraction], n: int) -> list[Fraction]:
    """Series of ``p(1 + s(h))`` where ``s(h)`` has zero constant term."""
    shifted = p.taylor_shift(1).c  # coefficients in s = beta - 1
    out = [Fraction(0)] * n
    power = [Fraction(1)] + [Fraction(0)] * (n - 1)
    for k, a in enumerate(shifted):
        if k >= n:
            break  # s^k = O(h^k)
        if a:
            for j in range(n):
                out[j] += a * power[j]
        power = _series_mul(power, s_series, n)
    return out


def laurent_coefficients(num: Poly, den: Poly, L: int, depth: int = DEFAULT_DEPTH) -> list[Fraction]:
    """Expansion of ``num(beta)/den(beta)`` about ``h = 1 - alpha = 0``.

    Returns ``depth + 2`` coefficients of ``h^-1, h^0, ..., h^depth``.
    """
    if num.is_zero():
        return [Fraction(0)] * (depth + 2)
    mn, n1 = num.valuation_at(1)
    md, d1 = den.valuation_at(1)
    k = mn - md
    if k < -1:
        raise PoleOrderError(f"pole of order {-k} at alpha = 1")
    length = depth + 2
    beta = binomial_series(Fraction(1, L), length + 1)
    s = [Fraction(0)] + beta[1:]  # beta - 1, divisible by h
    w = s[1:]  # s = h * w, w(0) = -1/L
    a = _compose_in_s(n1, s, length)
    b = _compose_in_s(d1, s, length)
    q = _series_mul(a, _series_inv(b, length), length)
    # (beta - 1)^k = h^k w^k
    if k >= 0:
        q = _series_mul(q, _series_pow(w, k, length), length)
        shifted = [Fraction(0)] * (k + 1) + q
    else:
        q = _series_mul(q, _series_inv(w, length), length)
        shifted = q
    return shifted[:length]


def _series_pow(a: Sequence[Fraction], k: int, n: int) -> list[Fraction]:
    out = [Fraction(1)] + [Fraction(0)] * (n - 1)
    for _ in range(k):
        out = _series_mul(out, a, n)
    return out


@dataclass(frozen=True)
class LaurentGerm:
    """Truncated expansion ``c_-1/(1-alpha) + c_0 + c_1 (1-alpha) + ...``.

    ``coeffs[0]`` is ``c_-1``.  ``exact`` optionally holds the rational
    representative per coordinate; it is authoritative for comparisons.
    """

    coeffs: tuple[tuple[Fraction, ...], ...]
    exact: tuple[RationalGerm, ...] | None = None

    @classmethod
    def from_exact(cls, exact: Sequence[RationalGerm], depth: int = DEFAULT_DEPTH) -> "LaurentGerm":
        per = [g.laurent(depth) for g in exact]
        coeffs = tuple(tuple(c[j] for c in per) for j in range(depth + 2))
        return cls(coeffs, tuple(exact))

    @classmethod
    def scalar(cls, g: RationalGerm, depth: int = DEFAULT_DEPTH) -> "LaurentGerm":
        return cls.from_exact([g], depth)

    @property
    def dim(self) -> int:
        return len(self.coeffs[0]) if self.coeffs else 0

    @property
    def depth(self) -> int:
        return len(self.coeffs) - 2

    @property
    def rho(self) -> tuple[Fraction, ...]:
        return self.coeffs[0]

    @property
    def u(self) -> tuple[Fraction, ...]:
        return self.coeffs[1]

    def component(self, i: int) -> "LaurentGerm":
        return LaurentGerm(
            tuple((c[i],) for c in self.coeffs),
            None if self.exact is None else (self.exact[i],),
        )


def _as_exact(f) -> RationalGerm:
    if isinstance(f, RationalGerm):
        return f
    if isinstance(f, LaurentGerm):
        if f.exact is None:
            raise GermContractError("germ comparison needs an exact representative")
        if len(f.exact) != 1:
            raise GermContractError("germ_compare takes scalar germs")
        return f.exact[0]
    raise TypeError(f"not a germ: {type(f).__name__}")


def germ_compare(f, g) -> Order:
    """Order of two scalar germs near ``alpha = 1⁻``."""
    return Order((_as_exact(f) - _as_exact(g)).sign_near_one())
