"""Per-policy spectral conditions.

For a policy ``sigma`` with matrix polynomial ``P(alpha)``:

* A1: ``det(I - P(alpha)) != 0`` on ``[0, 1)``, decided by Sturm counting;
* A2: ``P(0)`` has no real eigenvalue ``>= 1`` (exact nilpotency first);
* B1: eigenvalue 1 of ``P(1)`` is semisimple, i.e.
  ``rank(I - P(1)) == rank((I - P(1))^2)``;
* B2: ``I + C S`` is invertible, ``C`` the spectral projector of ``P(1)``
  at 1 and ``S = sum_tau (tau - 1) P_tau``.
"""

from __future__ import annotations

import itertools
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from . import linalg
from .linalg import Matrix
from .plds import (
    PLDS,
    MatrixPolynomial,
    Policy,
    fmt,
    matrix_polynomial,
    policies,
    policy_count,
    policy_label,
    policy_restrict,
    slope_matrix,
)
from .poly import Poly, count_roots, isolate_root

__all__ = [
    "PASS",
    "FAIL",
    "INDETERMINATE",
    "SKIPPED",
    "det_polynomial",
    "check_A1",
    "check_A2",
    "check_B1",
    "spectral_projector",
    "check_B2",
    "kato_ratios",
    "active_policies",
    "policy_is_active",
    "assumptions_report",
    "PolicyRecord",
    "AssumptionReport",
    "SpectralProjector",
    "PolicyOverflowError",
]

PASS, FAIL, INDETERMINATE, SKIPPED = "pass", "fail", "indeterminate", "skipped"
TOL_MARGIN = 1e-9
MAX_POLICIES = 10**6
ACTIVITY_LIMIT = 4096


class PolicyOverflowError(RuntimeError):
    pass


class ProjectorInconsistency(ArithmeticError):
    """``W^T V`` singular although the eigenvalue was reported semisimple."""


def det_polynomial(P: MatrixPolynomial, coords: Sequence[int] | None = None, L: int | None = None) -> Poly:
    """``d(beta) = det(I - P(alpha))`` with ``beta = alpha ** (1/L)``.

    ``coords`` restricts to a principal submatrix.
    """
    L = P.rescale_factor if L is None else L
    B = P.beta_matrix(L)
    idx = range(P.n) if coords is None else coords
    one = Poly.const(1)
    M = [[(one if i == j else Poly()) - B[i][j] for j in idx] for i in idx]
    d, _ = linalg.poly_det_adj(M, with_adjugate=False)
    return d


@dataclass(frozen=True)
class A1Result:
    status: str
    roots_in_unit: int
    witness: tuple[Fraction, Fraction] | None
    L: int
    det: Poly

    @property
    def alpha_witness(self) -> tuple[Fraction, Fraction] | None:
        if self.witness is None:
            return None
        return self.witness[0] ** self.L, self.witness[1] ** self.L


def check_A1(P: MatrixPolynomial | Poly, L: int | None = None) -> A1Result:
    """No root of the determinant with ``alpha`` in ``[0, 1)``."""
    if isinstance(P, Poly):
        d, L = P, (L or 1)
    else:
        L = P.rescale_factor if L is None else L
        d = det_polynomial(P, L=L)
    if d.is_zero():
        return A1Result(FAIL, -1, None, L, d)
    zero_at_0 = d(Fraction(0)) == 0
    count = count_roots(d, 0, 1) - (1 if d(Fraction(1)) == 0 else 0) + (1 if zero_at_0 else 0)
    if count == 0:
        return A1Result(PASS, 0, None, L, d)
    if zero_at_0:
        witness = (Fraction(0), Fraction(0))
    else:
        witness = isolate_root(d, 0, 1, exclude_hi=True)
    return A1Result(FAIL, count, witness, L, d)


@dataclass(frozen=True)
class A2Result:
    status: str
    fast_path: str | None
    eigenvalue: float | None = None


def check_A2(P0: Matrix, tol_margin: float = TOL_MARGIN) -> A2Result:
    """``P(0)`` has no real eigenvalue in ``[1, inf)``."""
    n = len(P0)
    if n == 0 or linalg.is_zero(linalg.matpow(P0, n)):
        return A2Result(PASS, "nilpotent")
    eig = np.linalg.eigvals(np.array([[float(x) for x in row] for row in P0]))
    real = [float(e.real) for e in eig if abs(e.imag) <= tol_margin * max(1.0, abs(e))]
    if not real:
        return A2Result(PASS, None)
    top = max(real)
    if top >= 1 + tol_margin:
        return A2Result(FAIL, None, top)
    if top > 1 - tol_margin:
        return A2Result(INDETERMINATE, None, top)
    return A2Result(PASS, None, top)


@dataclass(frozen=True)
class B1Result:
    status: str
    rank: int | None
    rank_squared: int | None
    fast_path: str | None


def check_B1(P1: Matrix, invariant: Sequence[Fraction] | None = None) -> B1Result:
    """Semisimplicity of eigenvalue 1 of ``P1``.

    With a positive ``invariant`` (``P1 e = e``) and ``P1 >= 0`` the answer is
    known without elimination: ``P1`` is diagonally similar to a stochastic
    matrix.
    """
    n = len(P1)
    if invariant is not None and all(x >= 0 for row in P1 for x in row):
        e = tuple(Fraction(x) for x in invariant)
        if all(x > 0 for x in e) and linalg.matvec(P1, e) == e:
            return B1Result(PASS, None, None, "nonneg-stoichiometric")
    M = linalg.sub(linalg.identity(n), P1)
    r1 = linalg.rank(M)
    r2 = linalg.rank(linalg.matmul(M, M))
    return B1Result(PASS if r1 == r2 else FAIL, r1, r2, None)


@dataclass(frozen=True)
class SpectralProjector:
    C: Matrix
    multiplicity: int
    exact: bool = True
    tolerance: float = 0.0


def spectral_projector(P1: Matrix) -> SpectralProjector:
    """Projector onto ``ker(I - P1)`` along ``range(I - P1)`` (exact)."""
    n = len(P1)
    M = linalg.sub(linalg.identity(n), P1)
    V = linalg.nullspace(M)
    if not V:
        return SpectralProjector(linalg.zeros(n), 0)
    W = linalg.nullspace(linalg.transpose(M))
    Vm = linalg.transpose(tuple(V))  # n x k
    Wm = linalg.transpose(tuple(W))
    G = linalg.matmul(linalg.transpose(Wm), Vm)  # k x k
    try:
        Gi = linalg.inverse(G)
    except ZeroDivisionError as exc:
        raise ProjectorInconsistency("W^T V is singular: eigenvalue 1 is not semisimple") from exc
    C = linalg.matmul(linalg.matmul(Vm, Gi), linalg.transpose(Wm))
    return SpectralProjector(C, len(V))


def kato_ratios(P1: Matrix, C: Matrix, ks: Sequence[int]) -> list[Fraction]:
    """``||(1-a)(I - a P1)^-1 - C||_inf / (1-a)`` at ``a = 1 - 2^-k`` (exact)."""
    n = len(P1)
    out = []
    for k in ks:
        h = Fraction(1, 2**k)
        a = 1 - h
        R = linalg.inverse(linalg.sub(linalg.identity(n), linalg.scale(P1, a)))
        D = linalg.sub(linalg.scale(R, h), C)
        out.append(linalg.norm_inf(D) / h)
    return out


@dataclass(frozen=True)
class B2Result:
    status: str
    det: Fraction | None


def check_B2(C: Matrix, S: Matrix) -> B2Result:
    n = len(C)
    d = linalg.det(linalg.add(linalg.identity(n), linalg.matmul(C, S)))
    return B2Result(PASS if d != 0 else FAIL, d)


# -- activity -------------------------------------------------------------------

def default_box(sys: PLDS) -> float:
    rmax = max((abs(a.offset) for alist in sys.actions for a in alist), default=Fraction(0))
    return 1e3 * (1 + float(rmax))


def policy_is_active(sys: PLDS, sigma: Policy, M: float | None = None) -> tuple[bool, float]:
    """LP test: can all chosen branches be strictly minimal at once?

    Variables are ``z[j, tau]`` (the delayed values, treated independently)
    and the margin ``delta``, capped at 1.
    """
    M = default_box(sys) if M is None else M
    n = sys.n
    delays = sys.delays
    col = {(j, d): k for k, (j, d) in enumerate(itertools.product(range(n), delays))}
    nv = len(col) + 1
    A, b = [], []
    for i, alist in enumerate(sys.actions):
        chosen = alist[sigma[i]]
        for k, a in enumerate(alist):
            if k == sigma[i] or a.same_form(chosen):
                continue
            # chosen(z) + delta <= a(z)
            row = [0.0] * nv
            for d, r in chosen.coeffs:
                for j, v in enumerate(r):
                    row[col[j, d]] += float(v)
            for d, r in a.coeffs:
                for j, v in enumerate(r):
                    row[col[j, d]] -= float(v)
            row[-1] = 1.0
            A.append(row)
            b.append(float(a.offset - chosen.offset))
    if not A:
        return True, 1.0
    c = np.zeros(nv)
    c[-1] = -1.0
    bounds = [(-M, M)] * (nv - 1) + [(None, 1.0)]
    res = linprog(c, A_ub=np.array(A), b_ub=np.array(b), bounds=bounds, method="highs")
    if res.status != 0:
        return False, float("-inf")
    delta = -float(res.fun)
    return delta > 1e-9, delta


def active_policies(sys: PLDS, M: float | None = None) -> list[Policy]:
    return [s for s in policies(sys) if policy_is_active(sys, s, M)[0]]


# -- report -----------------------------------------------------------------------

@dataclass(frozen=True)
class PolicyRecord:
    policy: Policy
    label: str
    A1: A1Result
    A2: A2Result
    B1: B1Result
    B2: B2Result
    projector_rank: int | None = None
    active: bool | None = None
    activity_margin: float | None = None

    @property
    def status(self) -> str:
        states = [self.A1.status, self.A2.status, self.B1.status, self.B2.status]
        if FAIL in states or SKIPPED in states:
            return FAIL
        if INDETERMINATE in states:
            return INDETERMINATE
        return PASS

    def to_dict(self) -> dict:
        w = self.A1.witness
        return {
            "policy": list(self.policy),
            "label": self.label,
            "status": self.status,
            "active": self.active,
            "activity_margin": self.activity_margin,
            "A1": {
                "status": self.A1.status,
                "roots_in_unit_interval": self.A1.roots_in_unit,
                "witness_beta": None if w is None else [fmt(w[0]), fmt(w[1])],
                "L": self.A1.L,
                "det_coeffs_beta": [fmt(c) for c in self.A1.det.c],
            },
            "A2": {"status": self.A2.status, "fast_path": self.A2.fast_path, "eigenvalue": self.A2.eigenvalue},
            "B1": {
                "status": self.B1.status,
                "rank": self.B1.rank,
                "rank_squared": self.B1.rank_squared,
                "fast_path": self.B1.fast_path,
            },
            "B2": {"status": self.B2.status, "det": None if self.B2.det is None else fmt(self.B2.det)},
            "projector_rank": self.projector_rank,
        }


@dataclass(frozen=True)
class AssumptionReport:
    records: tuple[PolicyRecord, ...]
    scope: str
    box: float | None
    invariant: tuple[Fraction, ...] | None
    policy_total: int

    @property
    def verdict(self) -> str:
        states = [r.status for r in self.records]
        if FAIL in states:
            return FAIL
        if INDETERMINATE in states:
            return INDETERMINATE
        return PASS

    @property
    def exit_code(self) -> int:
        return {PASS: 0, FAIL: 2, INDETERMINATE: 3}[self.verdict]

    def record(self, policy: Sequence[int]) -> PolicyRecord:
        policy = tuple(policy)
        for r in self.records:
            if r.policy == policy:
                return r
        raise KeyError(policy)

    def to_dict(self) -> dict:
        return {
            "format": "priorinet/assumptions",
            "version": 1,
            "verdict": self.verdict,
            "scope": self.scope,
            "box_bound": self.box,
            "stoichiometric_invariant": None if self.invariant is None else [fmt(x) for x in self.invariant],
            "policies_total": self.policy_total,
            "policies_examined": len(self.records),
            "records": [r.to_dict() for r in self.records],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_table(self) -> str:
        head = f"{'policy':<14}{'A1':<15}{'A2':<15}{'B1':<15}{'B2':<15}{'active':<8}"
        lines = [head, "-" * len(head)]
        for r in self.records:
            a2 = r.A2.status + ("*" if r.A2.fast_path else "")
            b1 = r.B1.status + ("*" if r.B1.fast_path else "")
            act = "-" if r.active is None else ("yes" if r.active else "no")
            lines.append(f"{r.label:<14}{r.A1.status:<15}{a2:<15}{b1:<15}{r.B2.status:<15}{act:<8}")
        lines.append(f"verdict: {self.verdict}  ({len(self.records)}/{self.policy_total} policies, * = fast path)")
        return "\n".join(lines)


def check_policy(sys: PLDS, sigma: Policy, invariant=None, L: int | None = None) -> PolicyRecord:
    r, mats = policy_restrict(sys, sigma)
    P = matrix_polynomial(r, mats)
    L = sys.rescale_factor if L is None else L
    a1 = check_A1(P, L)
    a2 = check_A2(P.at_zero())
    P1 = P.at_one()
    b1 = check_B1(P1, invariant)
    proj_rank = None
    if b1.status == PASS:
        try:
            proj = spectral_projector(P1)
            proj_rank = proj.multiplicity
            b2 = check_B2(proj.C, slope_matrix(mats, len(r)))
        except ProjectorInconsistency:
            b2 = B2Result(SKIPPED, None)
    else:
        b2 = B2Result(SKIPPED, None)
    return PolicyRecord(tuple(sigma), policy_label(sys, sigma), a1, a2, b1, b2, proj_rank)


def _check_task(args):
    sys, sigma, invariant, L = args
    return check_policy(sys, sigma, invariant, L)


def assumptions_report(
    sys: PLDS,
    scope: str = "all",
    *,
    force: bool = False,
    max_policies: int = MAX_POLICIES,
    box: float | None = None,
    workers: int = 1,
) -> AssumptionReport:
    """Run A1, A2, B1, B2 on every policy (or only the active ones)."""
    from .petri import stoichiometric_invariant

    if scope not in ("all", "active"):
        raise ValueError("scope must be 'all' or 'active'")
    total = policy_count(sys)
    if total > max_policies and not force:
        raise PolicyOverflowError(f"{total} policies exceed the limit {max_policies}; pass force to proceed")
    invariant = stoichiometric_invariant(sys)
    L = sys.rescale_factor
    box_used = default_box(sys) if box is None else box
    if scope == "active" or total <= ACTIVITY_LIMIT:
        activity = {s: policy_is_active(sys, s, box_used) for s in policies(sys)}
    else:
        activity = {}
    chosen = [s for s in policies(sys) if scope == "all" or activity[s][0]]
    tasks = [(sys, s, invariant, L) for s in chosen]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_check_task, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
    else:
        records = [_check_task(t) for t in tasks]
    records = [
        PolicyRecord(r.policy, r.label, r.A1, r.A2, r.B1, r.B2, r.projector_rank, *activity.get(r.policy, (None, None)))
        for r in records
    ]
    return AssumptionReport(tuple(records), scope, box_used, invariant, total)
