"""Exact linear algebra over the rationals and over ``Q[x]``.

Matrices are tuples of row tuples.  Entries are :class:`fractions.Fraction`
(or :class:`~priorinet.poly.Poly` for the polynomial routines).
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

from .poly import Poly

Matrix = tuple[tuple[Fraction, ...], ...]
Vector = tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


def as_matrix(rows) -> Matrix:
    return tuple(tuple(Fraction(v) for v in row) for row in rows)


def as_vector(values) -> Vector:
    return tuple(Fraction(v) for v in values)


def identity(n: int) -> Matrix:
    return tuple(tuple(ONE if i == j else ZERO for j in range(n)) for i in range(n))


def zeros(n: int, m: int | None = None) -> Matrix:
    m = n if m is None else m
    return tuple((ZERO,) * m for _ in range(n))


def transpose(a: Matrix) -> Matrix:
    return tuple(zip(*a)) if a else ()


def add(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def sub(a: Matrix, b: Matrix) -> Matrix:
    return tuple(tuple(x - y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def scale(a: Matrix, s) -> Matrix:
    return tuple(tuple(x * s for x in row) for row in a)


def matmul(a: Matrix, b: Matrix) -> Matrix:
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), ZERO) for col in bt) for row in a)


def matvec(a: Matrix, v: Sequence[Fraction]) -> Vector:
    return tuple(sum((x * y for x, y in zip(row, v)), ZERO) for row in a)


def dot(u: Sequence[Fraction], v: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(u, v)), ZERO)


def matpow(a: Matrix, k: int) -> Matrix:
    result = identity(len(a))
    base = a
    while k:
        if k & 1:
            result = matmul(result, base)
        base = matmul(base, base)
        k >>= 1
    return result


def is_zero(a: Matrix) -> bool:
    return all(x == 0 for row in a for x in row)


def rref(a: Matrix) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form and pivot columns."""
    m = [list(row) for row in a]
    rows = len(m)
    cols = len(m[0]) if m else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        p = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [x - f * y for x, y in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rank(a: Matrix) -> int:
    if not a:
        return 0
    return len(rref(a)[1])


def nullspace(a: Matrix) -> list[Vector]:
    """Basis of the right kernel of ``a``."""
    cols = len(a[0]) if a else 0
    m, pivots = rref(a)
    free = [c for c in range(cols) if c not in pivots]
    basis = []
    for f in free:
        v = [ZERO] * cols
        v[f] = ONE
        for r, p in enumerate(pivots):
            v[p] = -m[r][f]
        basis.append(tuple(v))
    return basis


def solve(a: Matrix, b: Sequence[Fraction]) -> Vector:
    """Solve the square system ``a x = b``; raises on singular ``a``."""
    n = len(a)
    aug = tuple(tuple(row) + (Fraction(bi),) for row, bi in zip(a, b))
    m, pivots = rref(aug)
    if pivots[:n] != list(range(n)) or len(pivots) > n:
        raise ZeroDivisionError("singular linear system")
    return tuple(m[i][n] for i in range(n))


def inverse(a: Matrix) -> Matrix:
    n = len(a)
    aug = tuple(tuple(row) + identity(n)[i] for i, row in enumerate(a))
    m, pivots = rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("singular matrix")
    return tuple(tuple(m[i][n:]) for i in range(n))


def det(a: Matrix) -> Fraction:
    """Determinant by Bareiss elimination (exact)."""
    n = len(a)
    if n == 0:
        return ONE
    m = [list(row) for row in a]
    sign = 1
    prev = ONE
    for k in range(n - 1):
        if m[k][k] == 0:
            p = next((i for i in range(k + 1, n) if m[i][k] != 0), None)
            if p is None:
                return ZERO
            m[k], m[p] = m[p], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev
        prev = m[k][k]
    return sign * m[n - 1][n - 1]


def norm_inf(a: Matrix) -> Fraction:
    return max((sum((abs(x) for x in row), ZERO) for row in a), default=ZERO)


# -- matrices over Q[x] -------------------------------------------------------

PolyMatrix = list[list[Poly]]


def poly_det_adj(a: PolyMatrix, with_adjugate: bool = True) -> tuple[Poly, PolyMatrix | None]:
    """Determinant and adjugate of a square polynomial matrix.

    Fraction-free Gauss-Jordan (Bareiss) on ``[a | I]``: every division is
    exact in ``Q[x]``.  At the end the left block is ``det * I`` and the
    right block is the adjugate.  Returns ``(0, None)`` when ``a`` is
    singular over ``Q(x)``.
    """
    n = len(a)
    if n == 0:
        return Poly.const(1), []
    one, zero = Poly.const(1), Poly()
    width = 2 * n if with_adjugate else n
    m = []
    for i, row in enumerate(a):
        ext = list(row)
        if with_adjugate:
            ext += [one if i == j else zero for j in range(n)]
        m.append(ext)
    sign = 1
    prev = one
    for k in range(n):
        if m[k][k].is_zero():
            # choose the lowest-degree nonzero pivot to limit growth
            cands = [i for i in range(k + 1, n) if not m[i][k].is_zero()]
            if not cands:
                return zero, None
            p = min(cands, key=lambda i: m[i][k].degree)
            m[k], m[p] = m[p], m[k]
            sign = -sign
        piv = m[k][k]
        for i in range(n):
            if i == k:
                continue
            f = m[i][k]
            row_i = m[i]
            row_k = m[k]
            for j in range(width):
                if j == k:
                    continue
                val = row_i[j] * piv - f * row_k[j]
                row_i[j] = val.exact_div(prev) if prev != one else val
            row_i[k] = zero
        prev = piv
    d = m[n - 1][n - 1]
    if sign < 0:
        d = -d
    if not with_adjugate:
        return d, None
    # left block is now diag(d_unsigned); right block is sign * adj scaled
    # consistently, since row swaps only permute rows of [a | I]
    adj = [[m[i][n + j] for j in range(n)] for i in range(n)]
    if sign < 0:
        adj = [[-x for x in row] for row in adj]
    return d, adj
