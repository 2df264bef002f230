"""Parameter sweeps over markings and input rates.

Markings and rates only enter the offsets, so the net is compiled and its
assumptions checked once; each cell patches the offsets and solves.
"""

from __future__ import annotations

import csv
import io
import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .petri import CompilationReport, PetriNet, compile_net
from .plds import fmt

__all__ = ["parse_range", "SweepCell", "run_sweep", "sweep_csv"]


def parse_range(text: str) -> tuple[str, list[Fraction]]:
    """``NAME=lo:hi:step`` (inclusive) or ``NAME=v1,v2,...``."""
    if "=" not in text:
        raise ValueError(f"expected NAME=lo:hi:step, got {text!r}")
    name, spec = text.split("=", 1)
    name = name.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError(f"expected lo:hi:step in {text!r}")
        lo, hi, step = (Fraction(p.strip()) for p in parts)
        if step <= 0:
            raise ValueError("step must be positive")
        values = []
        v = lo
        while v <= hi:
            values.append(v)
            v += step
        return name, values
    return name, [Fraction(p.strip()) for p in spec.split(",") if p.strip()]


@dataclass(frozen=True)
class SweepCell:
    params: tuple[tuple[str, Fraction], ...]
    status: str
    rho: tuple[Fraction, ...] | None = None
    u: tuple[Fraction, ...] | None = None
    t1: Fraction | None = None
    policy: str | None = None
    message: str = ""


def _solve_cell(args) -> SweepCell:
    from .solver import AssumptionViolation, InconsistencyError, solve_halfline

    report, assumptions, params = args
    sys = report.patch(dict(params))
    try:
        sol = solve_halfline(sys, report=assumptions, force=assumptions is None)
    except (InconsistencyError, AssumptionViolation) as exc:
        return SweepCell(params, "error", message=str(exc))
    return SweepCell(params, "ok", sol.rho, sol.u, sol.t1, sol.policy_label)


def run_sweep(
    net: PetriNet | CompilationReport,
    vary: Mapping[str, Sequence] | Sequence[tuple[str, Sequence]],
    *,
    fixed: Mapping[str, object] | None = None,
    workers: int = 1,
    check: bool = True,
) -> tuple[CompilationReport, object, list[SweepCell]]:
    """Solve every cell of the grid ``vary`` (first parameter varies slowest)."""
    from .spectral import assumptions_report

    report = net if isinstance(net, CompilationReport) else compile_net(net)
    items = list(vary.items()) if isinstance(vary, Mapping) else list(vary)
    for name, _ in items:
        report.net.parameter_key(name)  # raises on structural parameters
    base = {k: Fraction(v) for k, v in (fixed or {}).items()}
    if base:
        report = CompilationReport(
            report.net.with_parameters(base),
            report.patch(base),
            report.coordinates,
            report.eliminated,
            report.total_order,
            report.epsilon,
            report.offset_forms,
        )
    assumptions = assumptions_report(report.plds) if check else None
    names = [n for n, _ in items]
    grid = [tuple(zip(names, map(Fraction, combo))) for combo in itertools.product(*(v for _, v in items))]
    if assumptions is not None and assumptions.verdict != "pass":
        cells = [SweepCell(p, "assumptions-" + assumptions.verdict) for p in grid]
        return report, assumptions, cells
    tasks = [(report, assumptions, p) for p in grid]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_solve_cell, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        cells = [_solve_cell(t) for t in tasks]
    return report, assumptions, cells


def sweep_csv(report: CompilationReport, cells: Sequence[SweepCell]) -> str:
    labels = report.coordinates
    names = [n for n, _ in cells[0].params] if cells else []
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(names + [f"rho_{k + 1}" for k in range(len(labels))] + ["t1", "policy", "status"])
    for c in cells:
        rho = [fmt(x) for x in c.rho] if c.rho is not None else [""] * len(labels)
        w.writerow(
            [fmt(v) for _, v in c.params] + rho + ["" if c.t1 is None else fmt(c.t1), c.policy or "", c.status]
        )
    return buf.getvalue()
