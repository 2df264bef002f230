"""Piecewise linear time-delay systems and their per-policy linear parts.

A system has ``n`` coordinates.  Coordinate ``i`` owns a finite list of
actions; an action is an affine form ``offset + sum_tau row_tau . x(t - tau)``
and ``x_i(t)`` is the minimum over the actions of coordinate ``i``.
Delays are nonnegative rationals; a rational delay set is handled by the
substitution ``beta = alpha ** (1 / L)`` where ``L`` is the common
denominator.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence

from . import linalg
from .linalg import Matrix, Vector
from .poly import Poly

__all__ = [
    "Action",
    "PLDS",
    "Policy",
    "MatrixPolynomial",
    "PLDSValidationError",
    "policy_restrict",
    "matrix_polynomial",
    "slope_matrix",
    "eval_T_alpha",
    "exact_power",
    "policies",
    "policy_count",
    "policy_label",
    "plds_to_dict",
    "plds_from_dict",
    "dump_plds",
    "load_plds",
]

FORMAT_PLDS = "priorinet/plds"
FORMAT_VERSION = 1

Policy = tuple[int, ...]


class PLDSValidationError(ValueError):
    """Raised when a system or policy violates the data-model invariants."""


def _frac(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        raise TypeError("floats are not accepted; pass a Fraction or a 'p/q' string")
    return Fraction(value)


def fmt(x: Fraction) -> str:
    """Exact string rendering used in every document format."""
    return str(x)


@dataclass(frozen=True)
class Action:
    """One affine branch ``offset + sum_tau coeffs[tau] . x(t - tau)``.

    ``coeffs`` holds ``(delay, row)`` pairs sorted by delay.  Delays with an
    all-zero row are dropped so that two actions with the same affine form
    compare equal.
    """

    id: str
    offset: Fraction
    coeffs: tuple[tuple[Fraction, Vector], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "offset", _frac(self.offset))
        merged: dict[Fraction, list[Fraction]] = {}
        width = None
        for delay, row in self.coeffs:
            delay = _frac(delay)
            row = [_frac(v) for v in row]
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise PLDSValidationError(f"action {self.id!r}: ragged coefficient rows")
            if delay in merged:
                merged[delay] = [a + b for a, b in zip(merged[delay], row)]
            else:
                merged[delay] = row
        clean = tuple(
            (d, tuple(merged[d])) for d in sorted(merged) if any(v != 0 for v in merged[d])
        )
        object.__setattr__(self, "coeffs", clean)

    def row(self, delay, n: int) -> Vector:
        delay = _frac(delay)
        for d, r in self.coeffs:
            if d == delay:
                return r
        return (Fraction(0),) * n

    def total_row(self, n: int) -> Vector:
        """Row of ``P^a(1)``."""
        out = [Fraction(0)] * n
        for _, r in self.coeffs:
            for j, v in enumerate(r):
                out[j] += v
        return tuple(out)

    def slope_row(self, n: int) -> Vector:
        """Row of ``S^a = sum_tau (tau - 1) P^a_tau``."""
        out = [Fraction(0)] * n
        for d, r in self.coeffs:
            w = d - 1
            if w:
                for j, v in enumerate(r):
                    out[j] += w * v
        return tuple(out)

    def moment_row(self, n: int) -> Vector:
        """``sum_tau tau * P^a_tau`` (row)."""
        out = [Fraction(0)] * n
        for d, r in self.coeffs:
            if d:
                for j, v in enumerate(r):
                    out[j] += d * v
        return tuple(out)

    def same_form(self, other: "Action") -> bool:
        return self.offset == other.offset and self.coeffs == other.coeffs


@dataclass(frozen=True)
class PLDS:
    """The compiled system: per-coordinate action lists over a delay set.

    ``inputs`` maps the coordinates that are exogenous clocks (compiled
    input transitions) to their rate.  ``labels`` names coordinates.
    """

    actions: tuple[tuple[Action, ...], ...]
    delays: tuple[Fraction, ...] = ()
    labels: tuple[str, ...] = ()
    inputs: tuple[tuple[int, Fraction], ...] = ()

    def __post_init__(self):
        acts = tuple(tuple(a) for a in self.actions)
        object.__setattr__(self, "actions", acts)
        n = len(acts)
        used = set()
        for i, alist in enumerate(acts):
            if not alist:
                raise PLDSValidationError(f"coordinate {i} has no action")
            ids = [a.id for a in alist]
            if len(set(ids)) != len(ids):
                raise PLDSValidationError(f"coordinate {i} has duplicate action ids {ids}")
            for a in alist:
                for d, r in a.coeffs:
                    if len(r) != n:
                        raise PLDSValidationError(
                            f"action {a.id!r} of coordinate {i}: row length {len(r)} != {n}"
                        )
                    used.add(d)
        delays = set(_frac(d) for d in self.delays) | used
        if any(d < 0 for d in delays):
            raise PLDSValidationError("delays must be nonnegative")
        object.__setattr__(self, "delays", tuple(sorted(delays)))
        labels = tuple(self.labels) if self.labels else tuple(f"x{i + 1}" for i in range(n))
        if len(labels) != n:
            raise PLDSValidationError("labels length does not match the coordinate count")
        object.__setattr__(self, "labels", labels)
        inputs = tuple(sorted((int(i), _frac(rate)) for i, rate in dict(self.inputs).items()))
        for i, rate in inputs:
            if not 0 <= i < n:
                raise PLDSValidationError(f"input coordinate {i} out of range")
        object.__setattr__(self, "inputs", inputs)

    @property
    def n(self) -> int:
        return len(self.actions)

    @property
    def rescale_factor(self) -> int:
        return _lcm_denominators(self.delays)

    @property
    def max_delay(self) -> Fraction:
        return max(self.delays, default=Fraction(0))

    @property
    def input_coords(self) -> tuple[int, ...]:
        return tuple(i for i, _ in self.inputs)

    @property
    def essential_coords(self) -> tuple[int, ...]:
        skip = set(self.input_coords)
        return tuple(i for i in range(self.n) if i not in skip)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def with_offsets(self, offsets: Mapping[tuple[int, int], Fraction]) -> "PLDS":
        """Copy with replaced offsets keyed by ``(coordinate, action index)``."""
        acts = []
        for i, alist in enumerate(self.actions):
            row = []
            for k, a in enumerate(alist):
                if (i, k) in offsets:
                    a = Action(a.id, _frac(offsets[i, k]), a.coeffs)
                row.append(a)
            acts.append(tuple(row))
        return PLDS(tuple(acts), self.delays, self.labels, self.inputs)


def _lcm_denominators(values: Iterable[Fraction]) -> int:
    out = 1
    for v in values:
        out = out * v.denominator // math.gcd(out, v.denominator)
    return out


# -- policies -----------------------------------------------------------------

def policy_count(sys: PLDS) -> int:
    return math.prod(len(a) for a in sys.actions)


def policies(sys: PLDS) -> Iterator[Policy]:
    """All policies in lexicographic (coordinate, action index) order."""
    return itertools.product(*(range(len(a)) for a in sys.actions))


def _check_policy(sys: PLDS, sigma: Sequence[int]) -> Policy:
    sigma = tuple(sigma)
    if len(sigma) != sys.n:
        raise PLDSValidationError(f"policy has {len(sigma)} entries, system has {sys.n} coordinates")
    for i, a in enumerate(sigma):
        if not 0 <= a < len(sys.actions[i]):
            raise PLDSValidationError(f"policy picks unknown action {a} at coordinate {i}")
    return sigma


def policy_label(sys: PLDS, sigma: Policy, coords: Sequence[int] | None = None) -> str:
    """1-based action tuple over ``coords`` (default: essential coordinates)."""
    coords = sys.essential_coords if coords is None else coords
    return "(" + ",".join(str(sigma[i] + 1) for i in coords) + ")"


def exact_power(alpha: Fraction, tau: Fraction) -> Fraction:
    """``alpha ** tau`` for rational ``tau``, raising if the result is irrational."""
    alpha, tau = _frac(alpha), _frac(tau)
    if tau == 0:
        return Fraction(1)
    if tau.denominator == 1:
        return alpha ** int(tau)
    q = tau.denominator
    num = _iroot(alpha.numerator, q)
    den = _iroot(alpha.denominator, q)
    if num is None or den is None:
        raise ValueError(f"{alpha}**{tau} is not rational; evaluate in beta = alpha**(1/L) instead")
    return Fraction(num, den) ** tau.numerator


def _iroot(x: int, k: int) -> int | None:
    if x < 0:
        return None
    if x < 2:
        return x
    r = int(round(x ** (1.0 / k)))
    for cand in (r - 1, r, r + 1):
        if cand >= 0 and cand**k == x:
            return cand
    # float guess can be far off for huge integers; fall back to Newton
    y = 1 << ((x.bit_length() + k - 1) // k)
    while True:
        z = ((k - 1) * y + x // y ** (k - 1)) // k
        if z >= y:
            break
        y = z
    return y if y**k == x else None


@dataclass(frozen=True)
class MatrixPolynomial:
    """``P(alpha) = sum_tau terms[tau] alpha**tau`` with rational exponents."""

    n: int
    terms: tuple[tuple[Fraction, Matrix], ...]

    def __post_init__(self):
        terms = tuple(sorted(((_frac(e), linalg.as_matrix(m)) for e, m in self.terms), key=lambda t: t[0]))
        object.__setattr__(self, "terms", terms)

    @property
    def rescale_factor(self) -> int:
        return _lcm_denominators(e for e, _ in self.terms)

    def coefficient(self, exponent) -> Matrix:
        exponent = _frac(exponent)
        for e, m in self.terms:
            if e == exponent:
                return m
        return linalg.zeros(self.n)

    def at_zero(self) -> Matrix:
        return self.coefficient(0)

    def at_one(self) -> Matrix:
        out = linalg.zeros(self.n)
        for _, m in self.terms:
            out = linalg.add(out, m)
        return out

    def evaluate(self, alpha) -> Matrix:
        alpha = _frac(alpha)
        out = linalg.zeros(self.n)
        for e, m in self.terms:
            out = linalg.add(out, linalg.scale(m, exact_power(alpha, e)))
        return out

    def evaluate_beta(self, beta, L: int | None = None) -> Matrix:
        """Evaluate at ``alpha = beta**L``; exact for any rational ``beta``."""
        L = self.rescale_factor if L is None else L
        beta = _frac(beta)
        out = linalg.zeros(self.n)
        for e, m in self.terms:
            k = e * L
            if k.denominator != 1:
                raise ValueError(f"rescale factor {L} does not clear exponent {e}")
            out = linalg.add(out, linalg.scale(m, beta ** int(k)))
        return out

    def beta_matrix(self, L: int | None = None) -> list[list[Poly]]:
        """Entries as polynomials in ``beta = alpha**(1/L)``."""
        L = self.rescale_factor if L is None else L
        n = self.n
        entries = [[{} for _ in range(n)] for _ in range(n)]
        for e, m in self.terms:
            k = e * L
            if k.denominator != 1:
                raise ValueError(f"rescale factor {L} does not clear exponent {e}")
            k = int(k)
            for i in range(n):
                for j in range(n):
                    if m[i][j]:
                        entries[i][j][k] = entries[i][j].get(k, Fraction(0)) + m[i][j]
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                d = entries[i][j]
                coeffs = [Fraction(0)] * (max(d) + 1 if d else 0)
                for k, v in d.items():
                    coeffs[k] = v
                row.append(Poly(coeffs))
            out.append(row)
        return out


def policy_restrict(sys: PLDS, sigma: Sequence[int]) -> tuple[Vector, dict[Fraction, Matrix]]:
    """Offsets ``r^sigma`` and coefficient matrices ``P^sigma_tau`` of a policy."""
    sigma = _check_policy(sys, sigma)
    n = sys.n
    offsets = tuple(sys.actions[i][a].offset for i, a in enumerate(sigma))
    mats: dict[Fraction, Matrix] = {}
    for d in sys.delays:
        mats[d] = tuple(tuple(sys.actions[i][a].row(d, n)) for i, a in enumerate(sigma))
    return offsets, mats


def matrix_polynomial(offsets: Vector, mats: Mapping[Fraction, Matrix]) -> MatrixPolynomial:
    n = len(offsets)
    return MatrixPolynomial(n, tuple((d, m) for d, m in mats.items() if not linalg.is_zero(m)))


def slope_matrix(mats: Mapping[Fraction, Matrix], n: int | None = None) -> Matrix:
    """``S = sum_tau (tau - 1) P_tau`` (pass ``n`` when ``mats`` may be empty)."""
    if n is None:
        n = len(next(iter(mats.values()))) if mats else 0
    out = linalg.zeros(n)
    for d, m in mats.items():
        out = linalg.add(out, linalg.scale(m, _frac(d) - 1))
    return out


def eval_T_alpha(sys: PLDS, v: Sequence, alpha) -> Vector:
    """Discounted operator: ``min_a (r_i^a + [P^a(alpha)]_i v)`` per coordinate."""
    if len(v) != sys.n:
        raise PLDSValidationError("dimension mismatch")
    v = [_frac(x) for x in v]
    alpha = _frac(alpha)
    powers: dict[Fraction, Fraction] = {}
    out = []
    for alist in sys.actions:
        best = None
        for a in alist:
            val = a.offset
            for d, row in a.coeffs:
                if d not in powers:
                    powers[d] = exact_power(alpha, d)
                val += powers[d] * linalg.dot(row, v)
            if best is None or val < best:
                best = val
        out.append(best)
    return tuple(out)


# -- serialization ------------------------------------------------------------

def plds_to_dict(sys: PLDS) -> dict:
    actions = []
    for i, alist in enumerate(sys.actions):
        for a in alist:
            actions.append(
                {
                    "coord": i,
                    "id": a.id,
                    "offset": fmt(a.offset),
                    "coeffs": [{"delay": fmt(d), "row": [fmt(v) for v in r]} for d, r in a.coeffs],
                }
            )
    return {
        "format": FORMAT_PLDS,
        "version": FORMAT_VERSION,
        "n": sys.n,
        "delays": [fmt(d) for d in sys.delays],
        "labels": list(sys.labels),
        "inputs": [{"coord": i, "rate": fmt(r)} for i, r in sys.inputs],
        "actions": actions,
    }


def plds_from_dict(doc: Mapping) -> PLDS:
    if doc.get("format", FORMAT_PLDS) != FORMAT_PLDS:
        raise PLDSValidationError(f"not a PLDS document: format={doc.get('format')!r}")
    if int(doc.get("version", FORMAT_VERSION)) > FORMAT_VERSION:
        raise PLDSValidationError(f"unsupported PLDS version {doc.get('version')}")
    try:
        n = int(doc["n"])
        per: list[list[Action]] = [[] for _ in range(n)]
        for item in doc["actions"]:
            i = int(item["coord"])
            if not 0 <= i < n:
                raise PLDSValidationError(f"action coordinate {i} out of range")
            coeffs = tuple((Fraction(c["delay"]), tuple(Fraction(v) for v in c["row"])) for c in item.get("coeffs", ()))
            per[i].append(Action(str(item["id"]), Fraction(item["offset"]), coeffs))
        sys = PLDS(
            tuple(tuple(a) for a in per),
            tuple(Fraction(d) for d in doc.get("delays", ())),
            tuple(doc.get("labels", ())),
            tuple((int(x["coord"]), Fraction(x["rate"])) for x in doc.get("inputs", ())),
        )
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        if isinstance(exc, PLDSValidationError):
            raise
        raise PLDSValidationError(f"malformed PLDS document: {exc!r}") from exc
    return sys


def dump_plds(sys: PLDS, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(plds_to_dict(sys), fh, indent=2)
        fh.write("\n")


def load_plds(path) -> PLDS:
    with open(path, encoding="utf-8") as fh:
        return plds_from_dict(json.load(fh))
