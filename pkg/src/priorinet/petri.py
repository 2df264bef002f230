"""Timed Petri nets with priority and preselection rules.

Counters ``z_q(t)`` count firings of transition ``q`` up to time ``t``.
Each upstream place ``p`` of ``q`` bounds ``z_q(t)`` by the tokens it has
received and matured, which gives one affine action per place:

* plain place:        ``m_p + sum_{q' in p_in} z_q'(t - tau_p)``
* preselection place: ``pi_q * (m_p + sum_{q' in p_in} z_q'(t - tau_p))``
* priority place:     plain form minus ``z_q'(t)`` for every ``q'`` served
  before ``q`` and minus ``z_q'(t - eps)`` for every ``q'`` served after.

An input transition with rate ``lam`` becomes the clock coordinate
``x0(t) = lam + x0(t - 1)``, so that ``x0(t) = lam * t`` on a linear history.
"""

from __future__ import annotations

import heapq
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from importlib import resources
from typing import Mapping

import numpy as np
from scipy.optimize import linprog

from . import linalg
from .plds import PLDS, Action, fmt, plds_to_dict

__all__ = [
    "Place",
    "PetriNet",
    "Violation",
    "NetError",
    "CompilationReport",
    "validate_net",
    "priority_total_order",
    "compile_net",
    "discounted_equations",
    "stoichiometric_invariant",
    "net_to_dict",
    "net_from_dict",
    "load_net",
    "dump_net",
    "bundled_net",
    "BUNDLED_NETS",
    "pfau_net",
    "crossing_net",
    "ems_b_net",
]

FORMAT_NET = "priorinet/net"
FORMAT_VERSION = 1
BUNDLED_NETS = ("pfau", "crossing", "ems_b")

CLOCK_DELAY = Fraction(1)


class NetError(ValueError):
    """Structural problem that prevents compilation."""


@dataclass(frozen=True)
class Place:
    id: str
    marking: Fraction = Fraction(0)
    holding: Fraction = Fraction(0)

    def __post_init__(self):
        object.__setattr__(self, "marking", Fraction(self.marking))
        object.__setattr__(self, "holding", Fraction(self.holding))


@dataclass(frozen=True)
class Violation:
    kind: str
    subject: str
    message: str

    def __str__(self) -> str:
        return f"[{self.kind}] {self.subject}: {self.message}"


@dataclass(frozen=True)
class PetriNet:
    places: tuple[Place, ...]
    transitions: tuple[str, ...]
    arcs: tuple[tuple[str, str], ...]
    preselection: tuple[tuple[str, tuple[tuple[str, Fraction], ...]], ...] = ()
    priority: tuple[tuple[str, tuple[str, ...]], ...] = ()
    inputs: tuple[tuple[str, Fraction], ...] = ()
    epsilon: Fraction | None = None
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "places", tuple(self.places))
        object.__setattr__(self, "transitions", tuple(self.transitions))
        object.__setattr__(self, "arcs", tuple((str(a), str(b)) for a, b in self.arcs))
        presel = self.preselection.items() if isinstance(self.preselection, Mapping) else self.preselection
        object.__setattr__(
            self,
            "preselection",
            tuple(
                (p, tuple((q, Fraction(v)) for q, v in (probs.items() if isinstance(probs, Mapping) else probs)))
                for p, probs in presel
            ),
        )
        prio = self.priority.items() if isinstance(self.priority, Mapping) else self.priority
        object.__setattr__(self, "priority", tuple((p, tuple(order)) for p, order in prio))
        inputs = self.inputs.items() if isinstance(self.inputs, Mapping) else self.inputs
        object.__setattr__(self, "inputs", tuple((q, Fraction(r)) for q, r in inputs))
        if self.epsilon is not None:
            object.__setattr__(self, "epsilon", Fraction(self.epsilon))

    # -- lookups ----------------------------------------------------------
    @cached_property
    def place_map(self) -> dict[str, Place]:
        return {p.id: p for p in self.places}

    @cached_property
    def upstream(self) -> dict[str, list[str]]:
        """Upstream nodes of every node, in declaration order of the arcs' sources."""
        order = {p.id: k for k, p in enumerate(self.places)}
        order.update({q: k for k, q in enumerate(self.transitions)})
        out: dict[str, list[str]] = {}
        for a, b in self.arcs:
            out.setdefault(b, [])
            if a not in out[b]:
                out[b].append(a)
        for v in out.values():
            v.sort(key=lambda x: order.get(x, 1 << 30))
        return out

    @cached_property
    def downstream(self) -> dict[str, list[str]]:
        order = {p.id: k for k, p in enumerate(self.places)}
        order.update({q: k for k, q in enumerate(self.transitions)})
        out: dict[str, list[str]] = {}
        for a, b in self.arcs:
            out.setdefault(a, [])
            if b not in out[a]:
                out[a].append(b)
        for v in out.values():
            v.sort(key=lambda x: order.get(x, 1 << 30))
        return out

    @cached_property
    def preselection_map(self) -> dict[str, dict[str, Fraction]]:
        return {p: dict(probs) for p, probs in self.preselection}

    @cached_property
    def priority_map(self) -> dict[str, tuple[str, ...]]:
        return dict(self.priority)

    @cached_property
    def input_map(self) -> dict[str, Fraction]:
        return dict(self.inputs)

    def q_in(self, q: str) -> list[str]:
        return self.upstream.get(q, [])

    def p_in(self, p: str) -> list[str]:
        return self.upstream.get(p, [])

    def p_out(self, p: str) -> list[str]:
        return self.downstream.get(p, [])

    def transition_kind(self, q: str) -> str:
        """``input``, ``preselection``, ``priority`` or ``plain`` (derived)."""
        if q in self.input_map:
            return "input"
        ups = self.q_in(q)
        if any(p in self.preselection_map for p in ups):
            return "preselection"
        if any(p in self.priority_map for p in ups):
            return "priority"
        return "plain"

    def effective_epsilon(self) -> Fraction | None:
        """The eps delay used for priority terms, or None without priorities."""
        if self.epsilon is not None:
            return self.epsilon
        if not self.priority:
            return None
        positive = [p.holding for p in self.places if p.holding > 0]
        return min(positive) / 2 if positive else Fraction(1, 2)

    def parameter_key(self, name: str) -> str:
        """Resolve a bare parameter name to ``marking:<place>`` or ``rate:<transition>``."""
        if ":" in name:
            kind, ident = name.split(":", 1)
            if kind == "marking" and ident in self.place_map:
                return name
            if kind == "rate" and ident in self.input_map:
                return name
            raise KeyError(f"unknown parameter {name!r}")
        if name in self.place_map:
            return f"marking:{name}"
        if name in self.input_map:
            return f"rate:{name}"
        raise KeyError(f"{name!r} is neither a place marking nor an input rate")

    def parameter_values(self) -> dict[str, Fraction]:
        vals = {f"marking:{p.id}": p.marking for p in self.places}
        vals.update({f"rate:{q}": r for q, r in self.inputs})
        return vals

    def with_parameters(self, values: Mapping[str, object]) -> "PetriNet":
        """Copy with markings / input rates replaced (bare or qualified names)."""
        marks, rates = {}, {}
        for name, v in values.items():
            key = self.parameter_key(name)
            kind, ident = key.split(":", 1)
            (marks if kind == "marking" else rates)[ident] = Fraction(v)
        places = tuple(Place(p.id, marks.get(p.id, p.marking), p.holding) for p in self.places)
        inputs = tuple((q, rates.get(q, r)) for q, r in self.inputs)
        return PetriNet(places, self.transitions, self.arcs, self.preselection, self.priority, inputs, self.epsilon, self.name)


# -- validation ---------------------------------------------------------------

def validate_net(net: PetriNet) -> list[Violation]:
    out: list[Violation] = []
    pids = [p.id for p in net.places]
    tids = list(net.transitions)
    for ident in set(pids) & set(tids):
        out.append(Violation("duplicate-id", ident, "used both as place and transition"))
    for ids, what in ((pids, "place"), (tids, "transition")):
        seen = set()
        for x in ids:
            if x in seen:
                out.append(Violation("duplicate-id", x, f"{what} declared twice"))
            seen.add(x)
    pset, tset = set(pids), set(tids)
    for a, b in net.arcs:
        if a not in pset | tset or b not in pset | tset:
            out.append(Violation("unknown-node", f"{a}->{b}", "arc references an undeclared node"))
        elif (a in pset) == (b in pset):
            out.append(Violation("arc-direction", f"{a}->{b}", "arcs must join a place and a transition"))
    for p in net.places:
        if p.marking < 0:
            out.append(Violation("marking", p.id, f"negative marking {p.marking}"))
        if p.holding < 0:
            out.append(Violation("holding", p.id, f"negative holding time {p.holding}"))
    for q, rate in net.inputs:
        if q not in tset:
            out.append(Violation("unknown-node", q, "input refers to an undeclared transition"))
            continue
        if rate < 0:
            out.append(Violation("input-rate", q, f"negative rate {rate}"))
        if net.q_in(q):
            out.append(Violation("input-upstream", q, "input transitions cannot have upstream places"))
    for q in tids:
        if q not in net.input_map and not net.q_in(q):
            out.append(Violation("no-upstream", q, "transition has no upstream place and is not an input"))

    presel = net.preselection_map
    prio = net.priority_map
    for p, probs in net.preselection:
        if p not in pset:
            out.append(Violation("unknown-node", p, "preselection on an undeclared place"))
            continue
        if p in prio:
            out.append(Violation("rule-conflict", p, "place carries both a preselection and a priority rule"))
        items = dict(probs)
        total = sum(items.values(), Fraction(0))
        if any(v < 0 for v in items.values()):
            out.append(Violation("preselection-distribution", p, "negative routing probability"))
        if total != 1:
            out.append(Violation("preselection-distribution", p, f"probabilities sum to {total}, not 1"))
        if set(items) != set(net.p_out(p)):
            out.append(
                Violation("preselection-targets", p, "probabilities must cover exactly the downstream transitions")
            )
        for q in items:
            if q in tset and len(net.q_in(q)) != 1:
                out.append(
                    Violation("preselection-upstream", q, f"preselection target has {len(net.q_in(q))} upstream places, needs exactly 1")
                )
    for p, order in net.priority:
        if p not in pset:
            out.append(Violation("unknown-node", p, "priority on an undeclared place"))
            continue
        if len(set(order)) != len(order) or set(order) != set(net.p_out(p)):
            out.append(Violation("priority-order", p, "order must list each downstream transition exactly once"))
    for p in pids:
        if len(net.p_out(p)) > 1 and p not in presel and p not in prio:
            out.append(Violation("unresolved-conflict", p, "several downstream transitions but no priority or preselection rule"))
    try:
        priority_total_order(net)
    except NetError as exc:
        out.append(Violation("priority-cycle", "priority", str(exc)))
    eps = net.epsilon
    if eps is not None:
        positive = [p.holding for p in net.places if p.holding > 0]
        if eps <= 0:
            out.append(Violation("epsilon", "epsilon", "epsilon must be positive"))
        elif positive and eps >= min(positive):
            out.append(Violation("epsilon", "epsilon", f"epsilon {eps} is not smaller than every positive holding time"))
    return out


def priority_total_order(net: PetriNet) -> list[str]:
    """A linear extension of all priority orders, ties broken by transition id."""
    succ: dict[str, set[str]] = {q: set() for q in net.transitions}
    indeg = {q: 0 for q in net.transitions}
    for _, order in net.priority:
        for a, b in zip(order, order[1:]):
            for x in (a, b):
                if x not in succ:
                    succ[x] = set()
                    indeg[x] = 0
            if b not in succ[a]:
                succ[a].add(b)
                indeg[b] += 1
    heap = [q for q, d in indeg.items() if d == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        q = heapq.heappop(heap)
        out.append(q)
        for b in succ[q]:
            indeg[b] -= 1
            if indeg[b] == 0:
                heapq.heappush(heap, b)
    if len(out) != len(indeg):
        stuck = sorted(q for q, d in indeg.items() if d > 0)
        raise NetError(f"priority orders are inconsistent (cycle through {', '.join(stuck)})")
    return out


# -- compilation ----------------------------------------------------------------

OffsetForm = tuple[tuple[str, Fraction], ...]


@dataclass
class _Row:
    id: str
    offset: dict[str, Fraction]
    terms: dict[tuple[int, Fraction], Fraction]


def _add_to(d: dict, key, value) -> None:
    v = d.get(key, 0) + value
    if v:
        d[key] = v
    else:
        d.pop(key, None)


@dataclass(frozen=True)
class CompilationReport:
    net: PetriNet
    plds: PLDS
    coordinates: tuple[str, ...]
    eliminated: tuple[str, ...]
    total_order: tuple[str, ...]
    epsilon: Fraction | None
    offset_forms: tuple[tuple[OffsetForm, ...], ...]

    @property
    def parameters(self) -> tuple[str, ...]:
        keys = sorted({k for forms in self.offset_forms for f in forms for k, _ in f})
        return tuple(keys)

    def coordinate(self, transition: str) -> int:
        return self.coordinates.index(transition)

    def patch(self, values: Mapping[str, object]) -> PLDS:
        """The compiled system with markings / rates replaced, without recompiling."""
        current = self.net.parameter_values()
        for name, v in values.items():
            current[self.net.parameter_key(name)] = Fraction(v)
        offsets = {}
        for i, forms in enumerate(self.offset_forms):
            for k, form in enumerate(forms):
                offsets[i, k] = sum((c * current[key] for key, c in form), Fraction(0))
        sys = self.plds.with_offsets(offsets)
        rates = tuple((i, current[f"rate:{self.coordinates[i]}"]) for i, _ in sys.inputs)
        return PLDS(sys.actions, sys.delays, sys.labels, rates)

    def to_dict(self) -> dict:
        return {
            "net": self.net.name,
            "coordinates": list(self.coordinates),
            "eliminated": list(self.eliminated),
            "total_order": list(self.total_order),
            "epsilon": None if self.epsilon is None else fmt(self.epsilon),
            "offset_forms": [
                [{key: fmt(c) for key, c in form} for form in forms] for forms in self.offset_forms
            ],
            "plds": plds_to_dict(self.plds),
        }


def compile_net(net: PetriNet, *, reduce: bool = True, check: bool = True) -> CompilationReport:
    """Emit the counter equations of ``net`` as a PLDS."""
    if check:
        bad = validate_net(net)
        if bad:
            raise NetError("net does not validate: " + "; ".join(map(str, bad)))
    order = priority_total_order(net)
    eps = net.effective_epsilon()
    index = {q: i for i, q in enumerate(net.transitions)}
    rows: list[list[_Row]] = []
    for q in net.transitions:
        i = index[q]
        if q in net.input_map:
            rows.append([_Row("clock", {f"rate:{q}": Fraction(1)}, {(i, CLOCK_DELAY): Fraction(1)})])
            continue
        acts = []
        for p in net.q_in(q):
            place = net.place_map[p]
            weight = net.preselection_map.get(p, {}).get(q, Fraction(1))
            offset = {f"marking:{p}": weight}
            terms: dict[tuple[int, Fraction], Fraction] = {}
            for src in net.p_in(p):
                _add_to(terms, (index[src], place.holding), weight)
            if p in net.priority_map:
                rank = net.priority_map[p]
                me = rank.index(q)
                for k, other in enumerate(rank):
                    if k < me:
                        _add_to(terms, (index[other], Fraction(0)), Fraction(-1))
                    elif k > me:
                        _add_to(terms, (index[other], eps), Fraction(-1))
            acts.append(_Row(p, offset, terms))
        if not acts:
            raise NetError(f"transition {q} has no upstream place and is not an input")
        rows.append(acts)

    alive = list(range(len(rows)))
    eliminated: list[str] = []
    if reduce:
        inputs = {index[q] for q in net.input_map}
        rates = {index[q]: lam for q, lam in net.input_map.items()}
        params = net.parameter_values()
        changed = True
        while changed:
            changed = False
            for j in alive:
                if j in inputs or len(rows[j]) != 1:
                    continue
                sub = rows[j][0]
                if any(k == j for k, _ in sub.terms):
                    continue
                if not _substitutable(rows, alive, j, sub):
                    continue
                if not _vanishes_on_history(sub, params, rates):
                    continue
                for i in alive:
                    if i == j:
                        continue
                    for act in rows[i]:
                        _substitute(act, j, sub)
                alive.remove(j)
                eliminated.append(net.transitions[j])
                changed = True
                break

    new_index = {old: k for k, old in enumerate(alive)}
    n = len(alive)
    actions, forms = [], []
    params = net.parameter_values()
    for old in alive:
        alist, flist = [], []
        for act in rows[old]:
            by_delay: dict[Fraction, list[Fraction]] = {}
            for (k, d), c in act.terms.items():
                by_delay.setdefault(d, [Fraction(0)] * n)[new_index[k]] += c
            offset = sum((c * params[key] for key, c in act.offset.items()), Fraction(0))
            alist.append(Action(act.id, offset, tuple((d, tuple(r)) for d, r in by_delay.items())))
            flist.append(tuple(sorted(act.offset.items())))
        actions.append(tuple(alist))
        forms.append(tuple(flist))
    coords = tuple(net.transitions[k] for k in alive)
    inputs = tuple((new_index[index[q]], r) for q, r in net.inputs if index[q] in new_index)
    sys = PLDS(tuple(actions), (), coords, inputs)
    return CompilationReport(net, sys, coords, tuple(eliminated), tuple(order), eps, tuple(forms))


def _substitutable(rows, alive, j, sub: _Row) -> bool:
    # refuse a substitution that would make some row depend on itself at delay 0
    for i in alive:
        if i == j:
            continue
        for act in rows[i]:
            for (k, d), c in act.terms.items():
                if k != j:
                    continue
                for (k2, d2), _ in sub.terms.items():
                    if k2 == i and d + d2 == 0:
                        return False
    return True


def _vanishes_on_history(sub: _Row, params, rates) -> bool:
    # The substitution is exact for t > 0 only; it is also exact on the
    # initial segment when the row is zero there (zero history, clocks lam*s).
    const = sum((c * params[key] for key, c in sub.offset.items()), Fraction(0))
    slope = Fraction(0)
    for (k, d), c in sub.terms.items():
        lam = rates.get(k, Fraction(0))
        const -= c * lam * d
        slope += c * lam
    return const == 0 and slope == 0


def _substitute(act: _Row, j: int, sub: _Row) -> None:
    hits = [(d, c) for (k, d), c in act.terms.items() if k == j]
    for d, c in hits:
        del act.terms[j, d]
        for key, w in sub.offset.items():
            _add_to(act.offset, key, c * w)
        for (k2, d2), c2 in sub.terms.items():
            _add_to(act.terms, (k2, d + d2), c * c2)


def discounted_equations(report: CompilationReport, alpha) -> list[list[tuple[str, Fraction, tuple[Fraction, ...]]]]:
    """Per coordinate, the discounted affine forms ``(action id, r, row of P^a(alpha))``."""
    from .plds import exact_power

    alpha = Fraction(alpha)
    sys = report.plds
    out = []
    for alist in sys.actions:
        forms = []
        for a in alist:
            row = [Fraction(0)] * sys.n
            for d, r in a.coeffs:
                w = exact_power(alpha, d)
                for j, v in enumerate(r):
                    row[j] += w * v
            forms.append((a.id, a.offset, tuple(row)))
        out.append(forms)
    return out


def stoichiometric_invariant(sys: PLDS) -> tuple[Fraction, ...] | None:
    """Positive ``e`` with ``P^a(1)_i e = e_i`` for all ``i`` and ``a``, or None.

    Feasibility comes from an LP with ``e >= 1``; the certificate is then
    rebuilt exactly in a rational basis of the constraint kernel and checked.
    """
    n = sys.n
    rows = []
    for i, alist in enumerate(sys.actions):
        for a in alist:
            r = list(a.total_row(n))
            r[i] -= 1
            if any(r):
                rows.append(tuple(r))
    if not rows:
        return (Fraction(1),) * n
    basis = linalg.nullspace(tuple(rows))
    if not basis:
        return None
    A = np.array([[float(x) for x in r] for r in rows])
    res = linprog(np.ones(n), A_eq=A, b_eq=np.zeros(len(rows)), bounds=[(1, None)] * n, method="highs")
    if res.status != 0:
        return None
    B = np.array([[float(x) for x in v] for v in basis]).T  # n x k
    coef, *_ = np.linalg.lstsq(B, res.x, rcond=None)
    for limit in (10**3, 10**6, 10**9):
        c = [Fraction(float(x)).limit_denominator(limit) for x in coef]
        e = [sum((ck * v[j] for ck, v in zip(c, basis)), Fraction(0)) for j in range(n)]
        if all(x > 0 for x in e):
            m = min(e)
            return tuple(x / m for x in e)
    return None


# -- serialization ----------------------------------------------------------------

def net_to_dict(net: PetriNet) -> dict:
    doc = {
        "format": FORMAT_NET,
        "version": FORMAT_VERSION,
        "name": net.name,
        "places": [{"id": p.id, "marking": fmt(p.marking), "holding": fmt(p.holding)} for p in net.places],
        "transitions": [{"id": q} for q in net.transitions],
        "arcs": [{"from": a, "to": b} for a, b in net.arcs],
        "preselection": [{"place": p, "probs": {q: fmt(v) for q, v in probs}} for p, probs in net.preselection],
        "priority": [{"place": p, "order": list(order)} for p, order in net.priority],
        "inputs": [{"transition": q, "rate": fmt(r)} for q, r in net.inputs],
    }
    if net.epsilon is not None:
        doc["epsilon"] = fmt(net.epsilon)
    return doc


def net_from_dict(doc: Mapping) -> PetriNet:
    if doc.get("format", FORMAT_NET) != FORMAT_NET:
        raise NetError(f"not a net document: format={doc.get('format')!r}")
    if int(doc.get("version", FORMAT_VERSION)) > FORMAT_VERSION:
        raise NetError(f"unsupported net version {doc.get('version')}")
    try:
        places = tuple(
            Place(str(p["id"]), Fraction(p.get("marking", "0")), Fraction(p.get("holding", "0"))) for p in doc["places"]
        )
        transitions = tuple(str(t["id"]) if isinstance(t, Mapping) else str(t) for t in doc["transitions"])
        arcs = tuple((str(a["from"]), str(a["to"])) for a in doc.get("arcs", ()))
        presel = tuple(
            (str(x["place"]), tuple((str(q), Fraction(v)) for q, v in x["probs"].items())) for x in doc.get("preselection", ())
        )
        prio = tuple((str(x["place"]), tuple(str(q) for q in x["order"])) for x in doc.get("priority", ()))
        inputs = tuple((str(x["transition"]), Fraction(x["rate"])) for x in doc.get("inputs", ()))
        eps = doc.get("epsilon")
    except (KeyError, TypeError, ValueError, ZeroDivisionError) as exc:
        raise NetError(f"malformed net document: {exc!r}") from exc
    return PetriNet(places, transitions, arcs, presel, prio, inputs, None if eps is None else Fraction(eps), str(doc.get("name", "")))


def load_net(path) -> PetriNet:
    with open(path, encoding="utf-8") as fh:
        return net_from_dict(json.load(fh))


def dump_net(net: PetriNet, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(net_to_dict(net), fh, indent=2)
        fh.write("\n")


def bundled_net(name: str) -> PetriNet:
    if name not in BUNDLED_NETS:
        raise KeyError(f"no bundled net {name!r}; choose from {BUNDLED_NETS}")
    text = resources.files("priorinet").joinpath("data", f"{name}.json").read_text(encoding="utf-8")
    return net_from_dict(json.loads(text))


# -- reference nets -----------------------------------------------------------------

_F = Fraction


def pfau_net(
    *,
    lam=1,
    tau1=1,
    tau2=1,
    tau3=1,
    eps=None,
    pi_U=Fraction(2, 5),
    pi_VU=Fraction(3, 10),
    N_A=Fraction(13, 20),
    N_P=Fraction(3, 5),
) -> PetriNet:
    """Two-level emergency call center.

    Calls arrive at rate ``lam`` and wait for a first-level operator (pool
    ``N_A``).  After ``tau1`` a call is non urgent, urgent or very urgent.
    Urgent and very urgent calls need a second-level responder (pool
    ``N_P``); very urgent ones are served first and keep the operator busy
    for ``tau2`` in a three-way call.  Urgent calls hold the responder for
    ``tau2``, very urgent ones for ``tau2 + tau3``.
    """
    tau1, tau2, tau3 = _F(tau1), _F(tau2), _F(tau3)
    pi_U, pi_VU = _F(pi_U), _F(pi_VU)
    places = (
        Place("p_inc", 0, 0),
        Place("N_A", _F(N_A), 0),
        Place("p_arrivals", 0, tau1),
        Place("p_U", 0, 0),
        Place("p_VU1", 0, 0),
        Place("N_P", _F(N_P), 0),
        Place("p_VU2", 0, tau2),
        Place("p_consult", 0, tau3),
        Place("p_Uh", 0, tau2),
    )
    transitions = ("z0", "z1", "z2", "z2p", "z2pp", "z3", "z3p", "z4", "z5", "z6")
    arcs = (
        ("z0", "p_inc"), ("p_inc", "z1"), ("N_A", "z1"), ("z1", "p_arrivals"),
        ("p_arrivals", "z2"), ("p_arrivals", "z2p"), ("p_arrivals", "z2pp"),
        ("z2", "N_A"), ("z2p", "N_A"), ("z2p", "p_U"), ("z2pp", "p_VU1"),
        ("p_U", "z3"), ("N_P", "z3"), ("p_VU1", "z3p"), ("N_P", "z3p"),
        ("z3p", "p_VU2"), ("p_VU2", "z4"), ("z4", "N_A"), ("z4", "p_consult"),
        ("p_consult", "z5"), ("z5", "N_P"), ("z3", "p_Uh"), ("p_Uh", "z6"), ("z6", "N_P"),
    )
    presel = (("p_arrivals", (("z2", 1 - pi_U - pi_VU), ("z2p", pi_U), ("z2pp", pi_VU))),)
    prio = (("N_P", ("z3p", "z3")),)
    return PetriNet(places, transitions, arcs, presel, prio, (("z0", _F(lam)),), None if eps is None else _F(eps), "pfau")


def crossing_net(
    *,
    tau_c=1,
    tau_s=3,
    tau_w=2,
    A=1,
    cars_s=0,
    cars_w=0,
    eps=None,
    pi_ns=Fraction(1, 2),
    pi_nw=Fraction(1, 2),
    pi_es=Fraction(1, 2),
    pi_ew=Fraction(1, 2),
) -> PetriNet:
    """Two circular roads sharing one crossing; cars from the north go first.

    ``A`` tokens mark the crossing as free, ``cars_s`` / ``cars_w`` are the
    cars initially circling the north-south / east-west road.
    """
    places = (
        Place("A", _F(A), 0),
        Place("p_north", 0, _F(tau_c)),
        Place("p_east", 0, _F(tau_c)),
        Place("p_south", _F(cars_s), _F(tau_s)),
        Place("p_west", _F(cars_w), _F(tau_w)),
    )
    transitions = ("zn", "ze", "zns", "znw", "zes", "zew")
    arcs = (
        ("A", "zn"), ("A", "ze"), ("zn", "p_north"), ("ze", "p_east"),
        ("p_north", "zns"), ("p_north", "znw"), ("p_east", "zes"), ("p_east", "zew"),
        ("zns", "p_south"), ("zes", "p_south"), ("znw", "p_west"), ("zew", "p_west"),
        ("zns", "A"), ("znw", "A"), ("zes", "A"), ("zew", "A"),
        ("p_south", "zn"), ("p_west", "ze"),
    )
    presel = (
        ("p_north", (("zns", _F(pi_ns)), ("znw", _F(pi_nw)))),
        ("p_east", (("zes", _F(pi_es)), ("zew", _F(pi_ew)))),
    )
    prio = (("A", ("zn", "ze")),)
    return PetriNet(places, transitions, arcs, presel, prio, (), None if eps is None else _F(eps), "crossing")


def ems_b_net(
    *,
    lam=1,
    tau1=1,
    tau2=1,
    tau3=1,
    eps=None,
    pi=Fraction(1, 2),
    split=Fraction(1, 2),
    N_A=1,
    N_R=1,
    N_P=1,
) -> PetriNet:
    """Call center with a reservoir of assistants who brief the second level.

    Routing transitions ``z3r``, ``w5`` and ``w5p`` are inserted in front of
    the synchronizing transitions so that every preselection target has a
    single upstream place.  Reservoir priority: ``z5`` over ``z5p`` over
    ``z3``; second-level priority: ``z5`` over ``z5p``.
    """
    places = (
        Place("p_inc", 0, 0),
        Place("N_A", _F(N_A), 0),
        Place("p_arrivals", 0, _F(tau1)),
        Place("p_route", 0, 0),
        Place("N_R", _F(N_R), 0),
        Place("p_synchro", 0, _F(tau2)),
        Place("p_waiting", 0, 0),
        Place("p_w5", 0, 0),
        Place("p_w5p", 0, 0),
        Place("N_P", _F(N_P), 0),
        Place("p_synchro2", 0, _F(tau2)),
        Place("p_synchro3", 0, _F(tau2)),
        Place("p_consult", 0, _F(tau3)),
        Place("p_consult2", 0, _F(tau3)),
    )
    transitions = ("z0", "z1", "z2", "z3r", "z3", "z4", "w5", "w5p", "z5", "z5p", "z6", "z6p", "z7", "z7p")
    arcs = (
        ("z0", "p_inc"), ("p_inc", "z1"), ("N_A", "z1"), ("z1", "p_arrivals"),
        ("p_arrivals", "z2"), ("p_arrivals", "z3r"), ("z2", "N_A"),
        ("z3r", "p_route"), ("p_route", "z3"), ("N_R", "z3"), ("z3", "p_synchro"),
        ("p_synchro", "z4"), ("z4", "N_A"), ("z4", "N_R"), ("z4", "p_waiting"),
        ("p_waiting", "w5"), ("p_waiting", "w5p"), ("w5", "p_w5"), ("w5p", "p_w5p"),
        ("p_w5", "z5"), ("N_R", "z5"), ("N_P", "z5"),
        ("p_w5p", "z5p"), ("N_R", "z5p"), ("N_P", "z5p"),
        ("z5", "p_synchro2"), ("p_synchro2", "z6"), ("z6", "N_R"), ("z6", "p_consult"),
        ("p_consult", "z7"), ("z7", "N_P"),
        ("z5p", "p_synchro3"), ("p_synchro3", "z6p"), ("z6p", "N_R"), ("z6p", "p_consult2"),
        ("p_consult2", "z7p"), ("z7p", "N_P"),
    )
    presel = (
        ("p_arrivals", (("z2", 1 - _F(pi)), ("z3r", _F(pi)))),
        ("p_waiting", (("w5", _F(split)), ("w5p", 1 - _F(split)))),
    )
    prio = (("N_R", ("z5", "z5p", "z3")), ("N_P", ("z5", "z5p")))
    return PetriNet(places, transitions, arcs, presel, prio, (("z0", _F(lam)),), None if eps is None else _F(eps), "ems_b")
