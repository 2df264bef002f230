"""Laurent germs per policy, the germ fixed point, and the invariant half-line.

For a policy ``sigma`` the discounted value ``v(alpha) = (I - P(alpha))^-1 r``
is a vector of rational functions.  We keep it as ``adj(I - P) r / det``,
expand at ``alpha = 1⁻`` and read ``rho = c_-1`` and ``u = c_0``.

A policy is certified when its value is a fixed point of the discounted
operator in the germ order: for every coordinate ``i`` and every action
``a``, ``v_i <= r_i^a + [P^a(alpha)]_i v`` near ``1⁻``.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence

from . import linalg
from .germ import DEFAULT_DEPTH, LaurentGerm, Order, PoleOrderError, RationalGerm
from .linalg import Vector
from .plds import (
    PLDS,
    MatrixPolynomial,
    Policy,
    exact_power,
    fmt,
    matrix_polynomial,
    policies,
    policy_count,
    policy_label,
    policy_restrict,
    slope_matrix,
)
from .poly import Poly

__all__ = [
    "GermSolution",
    "HalfLine",
    "FixedPointCertificate",
    "Solution",
    "AssumptionViolation",
    "InconsistencyError",
    "ContractError",
    "AssumptionsNotMet",
    "policy_germ",
    "lexicographic_residual",
    "compute_t1",
    "solve_halfline",
    "discounted_fixed_point",
    "certify_policy",
]


class AssumptionViolation(ArithmeticError):
    """The policy's value is not in the germ field (singular or double pole)."""


class InconsistencyError(RuntimeError):
    """A search that the theory says must succeed came back empty."""

    def __init__(self, message: str, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or []


class ContractError(ValueError):
    pass


class AssumptionsNotMet(RuntimeError):
    def __init__(self, report):
        super().__init__(f"assumption check verdict: {report.verdict}")
        self.report = report


@lru_cache(maxsize=4096)
def resolvent(P: MatrixPolynomial, L: int) -> tuple[Poly, tuple[tuple[Poly, ...], ...] | None]:
    """``det(I - P)`` and ``adj(I - P)`` in ``beta``; depends on ``P`` only, so
    a parameter sweep that only moves offsets reuses it."""
    B = P.beta_matrix(L)
    one = Poly.const(1)
    M = [[(one if i == j else Poly()) - B[i][j] for j in range(P.n)] for i in range(P.n)]
    d, adj = linalg.poly_det_adj(M)
    if adj is None:
        return d, None
    return d, tuple(tuple(row) for row in adj)


@dataclass(frozen=True)
class GermSolution:
    policy: Policy
    germ: LaurentGerm
    numerators: tuple[Poly, ...]
    denominator: Poly
    L: int
    exactness: str = "exact"

    @property
    def rho(self) -> Vector:
        return self.germ.rho

    @property
    def u(self) -> Vector:
        return self.germ.u

    def value_at_beta(self, beta) -> Vector:
        beta = Fraction(beta)
        d = self.denominator(beta)
        return tuple(nm(beta) / d for nm in self.numerators)

    def value_at(self, alpha) -> Vector:
        return self.value_at_beta(exact_power(Fraction(alpha), Fraction(1, self.L)))


def policy_germ(sys: PLDS, sigma: Sequence[int], depth: int = DEFAULT_DEPTH, cross_check: bool = True) -> GermSolution:
    """Exact value ``v^sigma`` as rational functions and its Laurent germ."""
    sigma = tuple(sigma)
    r, mats = policy_restrict(sys, sigma)
    P = matrix_polynomial(r, mats)
    L = sys.rescale_factor
    d, adj = resolvent(P, L)
    if adj is None or d.is_zero():
        raise AssumptionViolation(f"det(I - P(alpha)) vanishes identically for policy {sigma}")
    nums = tuple(sum((adj[i][j] * r[j] for j in range(sys.n) if r[j]), Poly()) for i in range(sys.n))
    exact = tuple(RationalGerm(nm, d, L) for nm in nums)
    try:
        germ = LaurentGerm.from_exact(exact, depth)
    except PoleOrderError as exc:
        raise AssumptionViolation(f"policy {sigma}: {exc}") from exc
    if cross_check:
        _check_rho(P, mats, r, germ.rho, sigma)
    return GermSolution(sigma, germ, nums, d, L)


def _check_rho(P: MatrixPolynomial, mats, r, rho, sigma) -> None:
    from .spectral import ProjectorInconsistency, spectral_projector

    try:
        C = spectral_projector(P.at_one()).C
    except ProjectorInconsistency:
        return  # B1 fails; the germ itself already guards the pole order
    n = len(r)
    M = linalg.add(linalg.identity(n), linalg.matmul(C, slope_matrix(mats, n)))
    try:
        expected = linalg.solve(M, linalg.matvec(C, r))
    except ZeroDivisionError:
        return
    if tuple(expected) != tuple(rho):
        raise InconsistencyError(
            f"policy {sigma}: germ rho {list(map(str, rho))} disagrees with projector formula {list(map(str, expected))}"
        )


# -- certificate ----------------------------------------------------------------

def _row_beta(action, n: int, L: int) -> list[Poly]:
    """``[P^a(alpha)]_i`` as polynomials in ``beta``."""
    coeffs: list[dict[int, Fraction]] = [{} for _ in range(n)]
    for d, row in action.coeffs:
        k = int(d * L)
        for j, v in enumerate(row):
            if v:
                coeffs[j][k] = coeffs[j].get(k, Fraction(0)) + v
    out = []
    for c in coeffs:
        arr = [Fraction(0)] * (max(c) + 1 if c else 0)
        for k, v in c.items():
            arr[k] = v
        out.append(Poly(arr))
    return out


def certify_policy(sys: PLDS, sol: GermSolution) -> dict[tuple[int, int], Order]:
    """``germ_compare(v_i, r_i^a + [P^a(alpha)]_i v)`` for every ``(i, a)``.

    All ``v_j`` share the denominator ``det``, so each comparison is the sign
    near 1⁻ of a single rational function.
    """
    n, L = sys.n, sol.L
    d = sol.denominator
    out = {}
    for i, alist in enumerate(sys.actions):
        for k, a in enumerate(alist):
            row = _row_beta(a, n, L)
            rhs = d * a.offset
            for j in range(n):
                if row[j]:
                    rhs = rhs + row[j] * sol.numerators[j]
            diff = RationalGerm(sol.numerators[i] - rhs, d, L)
            out[i, k] = Order(diff.sign_near_one())
    return out


def _certified(comparisons: dict[tuple[int, int], Order], sigma: Policy) -> bool:
    for (i, k), o in comparisons.items():
        if o == Order.GREATER:
            return False
        if k == sigma[i] and o != Order.EQUAL:
            return False
    return True


# -- lexicographic system --------------------------------------------------------

def lexicographic_residual(sys: PLDS, rho: Sequence, u: Sequence):
    """Residuals of the ``rho`` and ``u`` equations and the argmin sets ``A*_i``."""
    n = sys.n
    rho = tuple(Fraction(x) for x in rho)
    u = tuple(Fraction(x) for x in u)
    eta_res, u_res, argmins = [], [], []
    for i, alist in enumerate(sys.actions):
        vals = [linalg.dot(a.total_row(n), rho) for a in alist]
        best = min(vals)
        star = tuple(k for k, v in enumerate(vals) if v == best)
        eta_res.append(rho[i] - best)
        cand = [
            alist[k].offset - rho[i] + linalg.dot(alist[k].total_row(n), u) - linalg.dot(alist[k].slope_row(n), rho)
            for k in star
        ]
        u_res.append(u[i] - min(cand))
        argmins.append(star)
    return tuple(eta_res), tuple(u_res), tuple(argmins)


def compute_t1(sys: PLDS, rho: Sequence, u: Sequence, argmins=None):
    """Smallest ``t1 >= 0`` making ``u + rho (t + t1)`` a solution for ``t >= 0``.

    For ``a`` outside ``A*_i`` the branch grows strictly faster than ``x_i``;
    it stays above ``x_i`` for all ``t >= 0`` once it does at ``t = 0``:
    ``(P^a(1)_i rho - rho_i) t1 >= u_i - r_i^a - P^a(1)_i u + sum_tau tau P^a_tau,i rho``.
    Returns ``(t1, binding)`` with ``binding`` the ``(i, a)`` attaining the max.
    """
    eta, ures, star = lexicographic_residual(sys, rho, u)
    if any(eta) or any(ures):
        raise ContractError("compute_t1 needs (rho, u) solving the lexicographic system")
    if argmins is not None and tuple(map(tuple, argmins)) != star:
        raise ContractError("argmin sets do not match (rho, u)")
    n = sys.n
    rho = tuple(Fraction(x) for x in rho)
    u = tuple(Fraction(x) for x in u)
    t1, binding = Fraction(0), None
    for i, alist in enumerate(sys.actions):
        for k, a in enumerate(alist):
            if k in star[i]:
                continue
            P1 = a.total_row(n)
            gap = linalg.dot(P1, rho) - rho[i]
            num = u[i] - a.offset - linalg.dot(P1, u) + linalg.dot(a.moment_row(n), rho)
            cand = num / gap
            if cand > t1:
                t1, binding = cand, (i, k)
    return t1, binding


# -- results ---------------------------------------------------------------------

@dataclass(frozen=True)
class HalfLine:
    u: Vector
    rho: Vector
    t1: Fraction
    sigma_star: Policy
    argmins: tuple[tuple[int, ...], ...]

    def at(self, t) -> Vector:
        t = Fraction(t)
        return tuple(ui + ri * (t + self.t1) for ui, ri in zip(self.u, self.rho))


@dataclass(frozen=True)
class FixedPointCertificate:
    sigma_star: Policy
    comparisons: dict
    certified: tuple[Policy, ...]
    eta_residual: Vector
    u_residual: Vector
    t1: Fraction
    binding: tuple[int, int] | None
    skipped: tuple[tuple[Policy, str], ...] = ()


@dataclass(frozen=True)
class Solution:
    halfline: HalfLine
    certificate: FixedPointCertificate
    germ: GermSolution
    labels: tuple[str, ...]
    policy_label: str
    assumption_verdict: str | None = None

    @property
    def rho(self) -> Vector:
        return self.halfline.rho

    @property
    def u(self) -> Vector:
        return self.halfline.u

    @property
    def t1(self) -> Fraction:
        return self.halfline.t1

    def to_dict(self) -> dict:
        hl, cert = self.halfline, self.certificate
        return {
            "format": "priorinet/solution",
            "version": 1,
            "labels": list(self.labels),
            "rho": [fmt(x) for x in hl.rho],
            "u": [fmt(x) for x in hl.u],
            "t1": fmt(hl.t1),
            "policy": list(hl.sigma_star),
            "policy_label": self.policy_label,
            "argmins": [list(a) for a in hl.argmins],
            "certificate": {
                "certified_policies": [list(p) for p in cert.certified],
                "comparisons": {f"{i},{a}": int(o) for (i, a), o in sorted(cert.comparisons.items())},
                "eta_residual": [fmt(x) for x in cert.eta_residual],
                "u_residual": [fmt(x) for x in cert.u_residual],
                "t1_binding": None if cert.binding is None else list(cert.binding),
                "skipped_policies": [{"policy": list(p), "reason": why} for p, why in cert.skipped],
            },
            "germ": [[fmt(x) for x in c] for c in self.germ.germ.coeffs],
            "assumptions": self.assumption_verdict,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _evaluate_policy(args):
    sys, sigma, depth = args
    try:
        sol = policy_germ(sys, sigma, depth)
    except AssumptionViolation as exc:
        return sigma, None, None, str(exc)
    comps = certify_policy(sys, sol)
    return sigma, sol, comps, None


def solve_halfline(
    sys: PLDS,
    *,
    force: bool = False,
    report=None,
    depth: int = DEFAULT_DEPTH,
    workers: int = 1,
    max_policies: int | None = None,
    first_only: bool = False,
) -> Solution:
    """Search the policies for a germ fixed point and build the half-line.

    Unless ``force`` is set the assumptions are checked first (or taken from
    ``report``) and :class:`AssumptionsNotMet` is raised when they fail.
    """
    from .spectral import MAX_POLICIES, PolicyOverflowError, assumptions_report

    limit = MAX_POLICIES if max_policies is None else max_policies
    total = policy_count(sys)
    if total > limit and not force:
        raise PolicyOverflowError(f"{total} policies exceed the limit {limit}")
    verdict = None
    if report is None and not force:
        report = assumptions_report(sys, max_policies=limit)
    if report is not None:
        verdict = report.verdict
        if verdict != "pass" and not force:
            raise AssumptionsNotMet(report)

    tasks = [(sys, s, depth) for s in policies(sys)]
    results = []
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_evaluate_policy, tasks))
    else:
        for t in tasks:
            res = _evaluate_policy(t)
            results.append(res)
            if first_only and res[1] is not None and _certified(res[2], res[0]):
                break

    certified, skipped, diagnostics = [], [], []
    chosen = None
    for sigma, sol, comps, why in results:
        if sol is None:
            skipped.append((sigma, why))
            continue
        if _certified(comps, sigma):
            certified.append(sigma)
            if chosen is None:
                chosen = (sigma, sol, comps)
        else:
            bad = [k for k, o in comps.items() if o == Order.GREATER or (k[1] == sigma[k[0]] and o != Order.EQUAL)]
            diagnostics.append({"policy": sigma, "violations": bad})
    if chosen is None:
        raise InconsistencyError("no policy certifies a germ fixed point", diagnostics + [{"skipped": skipped}])
    sigma, sol, comps = chosen
    rho, u = sol.rho, sol.u
    eta, ures, star = lexicographic_residual(sys, rho, u)
    if any(eta) or any(ures):
        raise InconsistencyError(
            "certified germ does not solve the lexicographic system",
            [{"eta_residual": eta, "u_residual": ures}],
        )
    t1, binding = compute_t1(sys, rho, u, star)
    hl = HalfLine(rho=rho, u=u, t1=t1, sigma_star=sigma, argmins=star)
    cert = FixedPointCertificate(sigma, comps, tuple(certified), eta, ures, t1, binding, tuple(skipped))
    return Solution(hl, cert, sol, sys.labels, policy_label(sys, sigma), verdict)


def discounted_fixed_point(sys: PLDS, alpha, *, beta=None) -> tuple[Vector, Policy]:
    """Solve ``v = T_alpha(v)`` exactly by trying every policy.

    ``beta`` (with ``alpha = beta**L``) may be given instead of ``alpha``
    when fractional delays make ``alpha**tau`` irrational.
    """
    L = sys.rescale_factor
    if beta is not None:
        beta = Fraction(beta)
        alpha = beta**L
    else:
        alpha = Fraction(alpha)
        beta = exact_power(alpha, Fraction(1, L))
    if not 0 <= alpha < 1:
        raise ValueError("alpha must lie in [0, 1)")
    n = sys.n
    for sigma in policies(sys):
        r, mats = policy_restrict(sys, sigma)
        P = matrix_polynomial(r, mats).evaluate_beta(beta, L)
        try:
            v = linalg.solve(linalg.sub(linalg.identity(n), P), r)
        except ZeroDivisionError:
            continue
        if _T_beta(sys, v, beta, L) == v:
            return v, sigma
    raise InconsistencyError(f"no policy gives a fixed point of T_alpha at alpha={alpha}")


def _T_beta(sys: PLDS, v, beta: Fraction, L: int) -> Vector:
    out = []
    for alist in sys.actions:
        best = None
        for a in alist:
            val = a.offset
            for d, row in a.coeffs:
                val += beta ** int(d * L) * linalg.dot(row, v)
            if best is None or val < best:
                best = val
        out.append(best)
    return tuple(out)
