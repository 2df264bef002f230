import json
import random
from fractions import Fraction as F

import pytest

from oracles import frac_inverse, frac_matmul, policy_matrices, sympy_det_I_minus_P, to_poly_coeffs
from priorinet import linalg
from priorinet.petri import BUNDLED_NETS, bundled_net, compile_net, crossing_net, pfau_net
from priorinet.plds import PLDS, Action, MatrixPolynomial, matrix_polynomial, policies, policy_label, policy_restrict
from priorinet.poly import Poly
from priorinet.spectral import (
    FAIL,
    INDETERMINATE,
    PASS,
    PolicyOverflowError,
    active_policies,
    assumptions_report,
    check_A1,
    check_A2,
    check_B1,
    check_B2,
    det_polynomial,
    kato_ratios,
    policy_is_active,
    spectral_projector,
)


def M(*rows):
    return tuple(tuple(F(x) for x in r) for r in rows)


def pfau_policy(label, **kw):
    sys = compile_net(pfau_net(**kw)).plds
    sigma = next(s for s in policies(sys) if policy_label(sys, s) == label)
    return sys, sigma


def test_det_examples():
    sys, sigma = pfau_policy("(1,1,1)")
    r, mats = policy_restrict(sys, sigma)
    P = matrix_polynomial(r, mats)
    assert det_polynomial(P, sys.essential_coords) == Poly([1])
    assert det_polynomial(MatrixPolynomial(2, ())) == Poly([1])


def test_det_all_pfau_policies_against_sympy():
    for kw in ({}, {"tau1": 2, "tau2": 1, "tau3": 3}, {"tau2": 2, "tau3": 2, "eps": F(1, 4)}):
        sys = compile_net(pfau_net(**kw)).plds
        for sigma in policies(sys):
            r, mats = policy_restrict(sys, sigma)
            P = matrix_polynomial(r, mats)
            L = P.rescale_factor
            ref = sympy_det_I_minus_P(policy_matrices(sys, sigma)[1], sys.n, sys.essential_coords, L)
            assert det_polynomial(P, sys.essential_coords).c == tuple(to_poly_coeffs(ref))


def test_det_222_factorization():
    # rows from the reduced dynamics: (1 - 0.7 a)(1 - a^(1/2))(1 - a^2) in beta = a^(1/2)
    sys, sigma = pfau_policy("(2,2,2)")
    P = matrix_polynomial(*policy_restrict(sys, sigma))
    assert P.rescale_factor == 2
    b = Poly([0, 1])
    one = Poly([1])
    expected = (one - b * b * F(7, 10)) * (one - b) * (one - b * b * b * b)
    assert det_polynomial(P, sys.essential_coords) == expected


def test_A1_examples():
    sys, sigma = pfau_policy("(1,2,1)")
    P = matrix_polynomial(*policy_restrict(sys, sigma))
    assert check_A1(P).status == PASS
    bad = MatrixPolynomial(1, ((1, ((2,),)),))
    res = check_A1(bad)
    assert res.status == FAIL
    lo, hi = res.alpha_witness
    assert lo <= F(1, 2) <= hi
    assert check_A1(MatrixPolynomial(1, ())).status == PASS
    assert check_A1(Poly()).status == FAIL  # identically singular
    assert check_A1(Poly([0, 1])).status == FAIL  # root at alpha = 0


def test_A2_examples():
    assert check_A2(M([2])).status == FAIL
    r = check_A2(M([0, 1], [0, 0]))
    assert r.status == PASS and r.fast_path == "nilpotent"
    assert check_A2(M([F(1, 2)])).status == PASS
    assert check_A2(M([1])).status == INDETERMINATE
    assert check_A2(M([0, -1], [1, 0])).status == PASS  # no real eigenvalue


def test_A2_nilpotent_for_compiled_nets():
    for name in BUNDLED_NETS:
        sys = compile_net(bundled_net(name)).plds
        for sigma in policies(sys):
            P = matrix_polynomial(*policy_restrict(sys, sigma))
            assert check_A2(P.at_zero()).fast_path == "nilpotent"


def test_B1_examples():
    r = check_B1(M([0, 1], [1, 0]))
    assert r.status == PASS and r.rank == 1 == r.rank_squared
    r = check_B1(M([1, 1], [0, 1]))
    assert r.status == FAIL and (r.rank, r.rank_squared) == (1, 0)
    assert check_B1(M([0])).status == PASS


def test_B1_fast_path_agrees_with_rank_test():
    rng = random.Random(5)
    for _ in range(50):
        n = rng.randint(1, 5)
        e = [F(rng.randint(1, 4)) for _ in range(n)]
        P = []
        for i in range(n):
            w = [F(rng.randint(0, 3)) for _ in range(n)]
            if not any(w):
                w[rng.randrange(n)] = F(1)
            s = sum(wj * ej for wj, ej in zip(w, e))
            P.append(tuple(wj * e[i] / s for wj in w))  # P e = e, P >= 0
        P = tuple(P)
        fast = check_B1(P, e)
        assert fast.fast_path == "nonneg-stoichiometric"
        assert check_B1(P).status == PASS


def test_projector_examples():
    C = spectral_projector(M([0, 1], [1, 0])).C
    assert C == M([F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)])
    assert spectral_projector(M([F(1, 2)])).C == M([0])
    P = M([F(1, 2), F(1, 2), 0], [F(1, 4), F(1, 4), F(1, 2)], [1, 0, 0])
    C = spectral_projector(P).C
    # rows equal the stationary distribution m (m P = m, sum 1)
    m = C[0]
    assert all(row == m for row in C)
    assert sum(m) == 1
    assert tuple(sum(m[i] * P[i][j] for i in range(3)) for j in range(3)) == m


def _random_stochastic(rng, n):
    rows = []
    for _ in range(n):
        w = [F(rng.randint(0, 4)) for _ in range(n)]
        if not any(w):
            w[rng.randrange(n)] = F(1)
        s = sum(w)
        rows.append(tuple(x / s for x in w))
    return tuple(rows)


def test_projector_identities_exact():
    rng = random.Random(6)
    for _ in range(40):
        P = _random_stochastic(rng, rng.randint(1, 6))
        C = spectral_projector(P).C
        assert linalg.matmul(C, C) == C
        assert linalg.matmul(P, C) == C == linalg.matmul(C, P)


def test_projector_is_resolvent_limit():
    rng = random.Random(7)
    for _ in range(20):
        P = _random_stochastic(rng, rng.randint(1, 5))
        C = spectral_projector(P).C
        n = len(P)
        h = F(1, 2**30)
        R = frac_inverse([[F(int(i == j)) - (1 - h) * P[i][j] for j in range(n)] for i in range(n)])
        err = max(abs(h * R[i][j] - C[i][j]) for i in range(n) for j in range(n))
        assert err < F(1, 10**6)


def test_kato_ratios_bounded():
    rng = random.Random(8)
    for _ in range(10):
        P = _random_stochastic(rng, rng.randint(2, 5))
        C = spectral_projector(P).C
        ratios = kato_ratios(P, C, range(6, 13))
        assert max(ratios) <= 2 * ratios[0] + 1


def test_B2_examples():
    assert check_B2(M([1]), M([0])).status == PASS
    r = check_B2(M([1]), M([-1]))
    assert r.status == FAIL and r.det == 0


def test_B2_single_final_class_positive_delays():
    # irreducible stochastic P1 and slopes (tau-1) P_tau with tau >= 1: det(I + C S) >= 1
    rng = random.Random(9)
    for _ in range(20):
        P = _random_stochastic(rng, 3)
        P = tuple(tuple(x for x in row) for row in P)
        if spectral_projector(P).multiplicity != 1:
            continue
        S = linalg.scale(P, rng.randint(0, 3))
        assert check_B2(spectral_projector(P).C, S).status == PASS


def test_activity_examples():
    one = PLDS(((Action("a", 1, ((1, (1,)),)),),))
    assert active_policies(one) == [(0,)]
    twin = PLDS(((Action("a", 1, ((1, (1,)),)), Action("b", 1, ((1, (1,)),))),))
    assert active_policies(twin) == [(0,), (1,)]
    # a dominated action is never active: 1 + x(t-1) vs 2 + x(t-1)
    dom = PLDS(((Action("a", 1, ((1, (1,)),)), Action("b", 2, ((1, (1,)),))),))
    assert policy_is_active(dom, (0,))[0] and not policy_is_active(dom, (1,))[0]


def test_pfau_report_all_pass():
    rep = assumptions_report(compile_net(pfau_net()).plds)
    assert rep.verdict == PASS and len(rep.records) == 8
    assert rep.exit_code == 0
    assert all(r.active is not None for r in rep.records)
    doc = json.loads(rep.to_json())
    assert doc["policies_examined"] == 8
    assert "verdict: pass" in rep.to_table()
    act = assumptions_report(compile_net(pfau_net()).plds, "active")
    assert 0 < len(act.records) <= 8 and act.verdict == PASS


def test_crossing_report_passes():
    assert assumptions_report(compile_net(crossing_net()).plds).verdict == PASS


def test_failing_system_report():
    sys = PLDS(((Action("a", 0, ((1, (2,)),)),),))
    rep = assumptions_report(sys)
    assert rep.verdict == FAIL and rep.exit_code == 2
    assert rep.records[0].A1.status == FAIL


def test_policy_overflow_guard():
    sys = compile_net(pfau_net()).plds
    with pytest.raises(PolicyOverflowError):
        assumptions_report(sys, max_policies=4)
    assert assumptions_report(sys, max_policies=4, force=True).verdict == PASS


def test_parallel_report_matches_serial():
    sys = compile_net(bundled_net("ems_b")).plds
    a = assumptions_report(sys)
    b = assumptions_report(sys, workers=2)
    assert a.to_json() == b.to_json()
