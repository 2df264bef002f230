"""Forward simulation of the delay system on an exact time grid.

The grid step is the gcd of the delays, so every ``x(t - tau)`` is a grid
value.  Terms with ``tau = 0`` are resolved within a step by evaluating the
coordinates in a topological order of the zero-delay dependency graph.
"""

from __future__ import annotations

import csv
import heapq
import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

from .plds import PLDS

__all__ = [
    "Trajectory",
    "SimulationError",
    "grid_step",
    "zero_delay_order",
    "simulate",
    "estimate_throughput",
    "halfline_residual",
    "write_csv",
    "linear_history",
]


class SimulationError(ValueError):
    pass


def grid_step(delays: Sequence[Fraction]) -> Fraction:
    positive = [Fraction(d) for d in delays if d > 0]
    if not positive:
        return Fraction(1)
    den = 1
    for d in positive:
        den = den * d.denominator // math.gcd(den, d.denominator)
    g = 0
    for d in positive:
        g = math.gcd(g, int(d * den))
    return Fraction(g, den)


def zero_delay_order(sys: PLDS, priority: Sequence[int] | None = None) -> list[int]:
    """Topological order of ``j -> i`` (row ``i`` reads ``x_j(t)``), ties by ``priority``."""
    n = sys.n
    rank = {i: k for k, i in enumerate(priority)} if priority is not None else {i: i for i in range(n)}
    succ = [set() for _ in range(n)]
    indeg = [0] * n
    for i, alist in enumerate(sys.actions):
        deps = set()
        for a in alist:
            for d, row in a.coeffs:
                if d == 0:
                    deps.update(j for j, v in enumerate(row) if v)
        for j in deps:
            if j == i:
                raise SimulationError(f"coordinate {sys.labels[i]} depends on itself with zero delay")
            succ[j].add(i)
            indeg[i] += 1
    heap = [(rank.get(i, n + i), i) for i in range(n) if indeg[i] == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, j = heapq.heappop(heap)
        out.append(j)
        for i in succ[j]:
            indeg[i] -= 1
            if indeg[i] == 0:
                heapq.heappush(heap, (rank.get(i, n + i), i))
    if len(out) != n:
        cyc = [sys.labels[i] for i in range(n) if indeg[i] > 0]
        raise SimulationError("cyclic zero-delay dependency among " + ", ".join(cyc))
    return out


@dataclass
class Trajectory:
    step: Fraction
    tau_bar: Fraction
    values: list[tuple]
    labels: tuple[str, ...]
    exact: bool = True
    argmins: list[tuple] | None = None
    warnings: list[str] = field(default_factory=list)

    @property
    def offset(self) -> int:
        """Index of ``t = 0``."""
        return int(self.tau_bar / self.step)

    @property
    def horizon(self) -> Fraction:
        return (len(self.values) - 1 - self.offset) * self.step

    def time(self, k: int) -> Fraction:
        return (k - self.offset) * self.step

    def index(self, t) -> int:
        q = Fraction(t) / self.step
        if q.denominator != 1:
            raise SimulationError(f"time {t} is not on the grid (step {self.step})")
        return int(q) + self.offset

    def at(self, t) -> tuple:
        return self.values[self.index(t)]

    def times(self) -> list[Fraction]:
        return [self.time(k) for k in range(len(self.values))]


def linear_history(u: Sequence, rho: Sequence, shift=0) -> Callable:
    """History ``s -> u + rho (s + shift)``."""
    u = [Fraction(x) for x in u]
    rho = [Fraction(x) for x in rho]
    shift = Fraction(shift)
    return lambda s: tuple(a + b * (s + shift) for a, b in zip(u, rho))


def _default_history(sys: PLDS) -> Callable:
    rates = dict(sys.inputs)
    return lambda s: tuple(rates.get(i, Fraction(0)) * s for i in range(sys.n))


def simulate(
    sys: PLDS,
    horizon,
    history: Callable | Sequence | None = None,
    *,
    step: Fraction | None = None,
    exact: bool = True,
    priority: Sequence[int] | None = None,
    record_argmins: bool = False,
) -> Trajectory:
    """Run ``x_i(t) = min_a (r_i^a + sum_tau P^a_tau,i x(t - tau))`` for ``0 < t <= horizon``.

    ``history`` maps a grid time ``s`` in ``[-tau_bar, 0]`` to a vector (a
    callable), or is a constant vector.  Default: zero, except input clocks
    which follow ``lam * s``.
    """
    h = grid_step(sys.delays) if step is None else Fraction(step)
    for d in sys.delays:
        if (d / h).denominator != 1:
            raise SimulationError(f"step {h} does not divide delay {d}")
    tau_bar = sys.max_delay
    if (tau_bar / h).denominator != 1:
        raise SimulationError("step does not divide the largest delay")
    if history is None:
        history = _default_history(sys)
    elif not callable(history):
        const = tuple(Fraction(x) for x in history)
        history = lambda s, c=const: c  # noqa: E731
    order = zero_delay_order(sys, priority)
    conv = (lambda x: x) if exact else float

    k0 = int(tau_bar / h)
    values: list[tuple] = []
    for k in range(k0 + 1):
        s = (k - k0) * h
        vec = history(s)
        if len(vec) != sys.n:
            raise SimulationError("history has the wrong dimension")
        values.append(tuple(conv(Fraction(x) if exact else x) for x in vec))

    # actions as (offset, [(lag in steps, [(j, coeff)])])
    compiled = []
    for alist in sys.actions:
        acts = []
        for a in alist:
            terms = []
            for d, row in a.coeffs:
                lag = int(d / h)
                terms.append((lag, [(j, conv(v)) for j, v in enumerate(row) if v]))
            acts.append((conv(a.offset), terms))
        compiled.append(acts)

    steps = Fraction(horizon) / h
    if steps.denominator != 1 or steps < 0:
        raise SimulationError(f"horizon {horizon} is not a nonnegative multiple of the step {h}")
    total = int(steps)
    argmins = [] if record_argmins else None
    n = sys.n
    for k in range(k0 + 1, k0 + 1 + total):
        cur = [None] * n
        chosen = [None] * n if record_argmins else None
        for i in order:
            best, arg = None, []
            for idx, (off, terms) in enumerate(compiled[i]):
                val = off
                for lag, entries in terms:
                    src = cur if lag == 0 else values[k - lag]
                    for j, c in entries:
                        val += c * src[j]
                if best is None or val < best:
                    best, arg = val, [idx]
                elif val == best:
                    arg.append(idx)
            cur[i] = best
            if record_argmins:
                chosen[i] = tuple(arg)
        values.append(tuple(cur))
        if record_argmins:
            argmins.append(tuple(chosen))
    traj = Trajectory(h, tau_bar, values, sys.labels, exact, argmins)
    dec = [
        sys.labels[i]
        for i in range(n)
        if any(values[k][i] < values[k - 1][i] for k in range(k0 + 1, len(values)))
    ]
    if dec:
        msg = "nonmonotone counters: " + ", ".join(dec)
        traj.warnings.append(msg)
        warnings.warn(msg, RuntimeWarning, stacklevel=2)
    return traj


def estimate_throughput(traj: Trajectory, window) -> tuple:
    window = Fraction(window)
    if (window / traj.step).denominator != 1 or window <= 0:
        raise SimulationError(f"window {window} is not a positive multiple of the step {traj.step}")
    if traj.horizon < 2 * window:
        raise SimulationError("horizon must be at least twice the window")
    end = traj.values[-1]
    start = traj.values[-1 - int(window / traj.step)]
    w = window if traj.exact else float(window)
    return tuple((a - b) / w for a, b in zip(end, start))


def halfline_residual(traj: Trajectory, hl, tail: str = "half"):
    """``sup_t |x(t) - (u + rho (t + t1))|_inf`` over the tail (or all) of ``t >= 0``."""
    start = traj.offset + (len(traj.values) - 1 - traj.offset) // 2 if tail == "half" else traj.offset
    worst = 0
    for k in range(start, len(traj.values)):
        t = traj.time(k)
        ref = hl.at(t)
        for x, y in zip(traj.values[k], ref):
            dev = abs(x - (y if traj.exact else float(y)))
            if dev > worst:
                worst = dev
    return worst


def write_csv(traj: Trajectory, path, *, precision: int = 6, exact_sidecar: bool = False, t_min=None) -> None:
    n = len(traj.labels)
    header = ["t"] + [f"x_{i + 1}" for i in range(n)]
    k_start = 0 if t_min is None else traj.index(t_min)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for k in range(k_start, len(traj.values)):
            t = traj.time(k)
            w.writerow([f"{float(t):.{precision}f}"] + [f"{float(x):.{precision}f}" for x in traj.values[k]])
    if exact_sidecar and traj.exact:
        with open(str(path) + ".exact.csv", "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            for k in range(k_start, len(traj.values)):
                w.writerow([str(traj.time(k))] + [str(x) for x in traj.values[k]])
