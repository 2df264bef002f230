import random
from fractions import Fraction as F

import sympy as sp

from oracles import beta, frac_inverse, to_poly_coeffs
from priorinet import linalg
from priorinet.poly import Poly


def rand_matrix(rng, n, m=None):
    return tuple(tuple(F(rng.randint(-3, 3), rng.choice([1, 2])) for _ in range(m or n)) for _ in range(n))


def test_det_rank_nullspace_against_sympy():
    rng = random.Random(1)
    for _ in range(80):
        n = rng.randint(1, 5)
        a = rand_matrix(rng, n)
        S = sp.Matrix([[sp.Rational(x.numerator, x.denominator) for x in row] for row in a])
        assert linalg.det(a) == F(str(S.det()))
        assert linalg.rank(a) == S.rank()
        for v in linalg.nullspace(a):
            assert all(x == 0 for x in linalg.matvec(a, v))
        assert len(linalg.nullspace(a)) == n - S.rank()


def test_inverse_and_solve():
    rng = random.Random(2)
    for _ in range(40):
        a = rand_matrix(rng, 4)
        if linalg.det(a) == 0:
            continue
        inv = linalg.inverse(a)
        assert [list(r) for r in inv] == frac_inverse(a)
        b = [F(rng.randint(-5, 5)) for _ in range(4)]
        assert list(linalg.matvec(a, linalg.solve(a, b))) == b


def test_poly_det_adj_against_sympy():
    rng = random.Random(4)
    for _ in range(25):
        n = rng.randint(1, 4)
        a = [[Poly([F(rng.randint(-2, 2)) for _ in range(rng.randint(0, 3))]) for _ in range(n)] for _ in range(n)]
        d, adj = linalg.poly_det_adj(a)
        S = sp.Matrix(n, n, lambda i, j: sum(int(c) * beta**k for k, c in enumerate(a[i][j].c)))
        ref = sp.expand(S.det())
        assert d.c == Poly(to_poly_coeffs(ref) if ref != 0 else []).c
        if adj is not None:
            # adj(A) A = det(A) I
            for i in range(n):
                for j in range(n):
                    s = Poly()
                    for k in range(n):
                        s = s + adj[i][k] * a[k][j]
                    assert s == (d if i == j else Poly())
