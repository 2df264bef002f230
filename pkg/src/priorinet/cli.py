"""Command-line front end: ``priorinet validate|compile|assumptions|solve|simulate|sweep``.

Exit codes: 0 ok, 2 check failure, 3 indeterminate, 4 input error,
5 internal inconsistency.
"""

from __future__ import annotations

import argparse
import csv
import datetime as _dt
import hashlib
import io
import json
import os
import random
import sys
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from . import __version__
from .petri import BUNDLED_NETS, NetError, PetriNet, compile_net, net_from_dict, net_to_dict, validate_net
from .plds import FORMAT_PLDS, PLDS, PLDSValidationError, fmt, plds_from_dict, plds_to_dict

EXIT_OK, EXIT_FAIL, EXIT_INDETERMINATE, EXIT_INPUT, EXIT_INCONSISTENT = 0, 2, 3, 4, 5


class InputError(ValueError):
    pass


@dataclass
class RunConfig:
    input: str
    kind: str
    command: str
    options: dict
    out: Path | None
    threads: int
    seed: int
    format: str


@dataclass
class LoadedInput:
    kind: str  # "net" or "plds"
    net: PetriNet | None
    plds: PLDS | None
    digest: str


def load_input(spec: str) -> LoadedInput:
    """A net or PLDS file (told apart by its ``format`` field) or a bundled net name."""
    path = Path(spec)
    if path.is_file():
        raw = path.read_bytes()
        try:
            doc = json.loads(raw)
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise InputError(f"{spec}: not a JSON document ({exc})") from exc
        digest = hashlib.sha256(raw).hexdigest()
    elif spec in BUNDLED_NETS:
        from .petri import bundled_net

        doc = net_to_dict(bundled_net(spec))
        digest = hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()
    else:
        raise InputError(f"{spec}: no such file or bundled net (bundled: {', '.join(BUNDLED_NETS)})")
    if not isinstance(doc, dict):
        raise InputError(f"{spec}: expected a JSON object")
    if doc.get("format") == FORMAT_PLDS:
        return LoadedInput("plds", None, plds_from_dict(doc), digest)
    return LoadedInput("net", net_from_dict(doc), None, digest)


def _threads(value) -> int:
    if value is not None:
        return max(1, int(value))
    env = os.environ.get("PRIORINET_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"PRIORINET_THREADS={env!r} is not an integer") from exc
    return 1


class Output:
    """Single writer for all documents of a run."""

    def __init__(self, out: Path | None):
        self.out = out
        self.written: list[str] = []
        if out is not None:
            out.mkdir(parents=True, exist_ok=True)

    def emit(self, name: str, text: str, *, echo: bool = True) -> None:
        if not text.endswith("\n"):
            text += "\n"
        if self.out is None:
            if echo:
                sys.stdout.write(text)
            return
        (self.out / name).write_text(text, encoding="utf-8")
        self.written.append(name)

    def note(self, text: str) -> None:
        print(text, file=sys.stderr if self.out is None else sys.stdout)

    def manifest(self, cfg: RunConfig, digest: str | None, exit_code: int) -> None:
        if self.out is None:
            return
        doc = {
            "tool": "priorinet",
            "version": __version__,
            "command": cfg.command,
            "input": cfg.input,
            "input_kind": cfg.kind,
            "input_sha256": digest,
            "options": cfg.options,
            "threads": cfg.threads,
            "seed": cfg.seed,
            "format": cfg.format,
            "outputs": sorted(self.written),
            "exit_code": exit_code,
            "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        }
        (self.out / "manifest.json").write_text(json.dumps(doc, indent=2) + "\n", encoding="utf-8")


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()


def _as_plds(inp: LoadedInput) -> PLDS:
    if inp.plds is not None:
        return inp.plds
    return compile_net(inp.net).plds


def _need_net(inp: LoadedInput, cmd: str) -> PetriNet:
    if inp.net is None:
        raise InputError(f"{cmd} needs a net document, got a PLDS")
    return inp.net


# -- commands ---------------------------------------------------------------


def cmd_validate(inp: LoadedInput, args, out: Output) -> int:
    net = _need_net(inp, "validate")
    bad = validate_net(net)
    if args.format == "csv":
        out.emit("violations.csv", _csv([["kind", "subject", "message"]] + [[v.kind, v.subject, v.message] for v in bad]))
    else:
        doc = {"valid": not bad, "violations": [{"kind": v.kind, "subject": v.subject, "message": v.message} for v in bad]}
        out.emit("violations.json", json.dumps(doc, indent=2))
    out.note(f"{len(bad)} violation(s)" if bad else "net is valid")
    return EXIT_FAIL if bad else EXIT_OK


def cmd_compile(inp: LoadedInput, args, out: Output) -> int:
    net = _need_net(inp, "compile")
    bad = validate_net(net)
    if bad:
        for v in bad:
            out.note(f"{v.kind}: {v.subject}: {v.message}")
        return EXIT_FAIL
    rep = compile_net(net, reduce=not args.no_reduce, check=False)
    out.emit("plds.json", json.dumps(plds_to_dict(rep.plds), indent=2))
    meta = rep.to_dict()
    meta.pop("plds")
    out.emit("compile_report.json", json.dumps(meta, indent=2), echo=False)
    out.note(f"{rep.plds.n} coordinates: {', '.join(rep.coordinates)}; eliminated: {', '.join(rep.eliminated) or '-'}")
    return EXIT_OK


def cmd_assumptions(inp: LoadedInput, args, out: Output) -> int:
    from .spectral import assumptions_report

    sys_ = _as_plds(inp)
    rep = assumptions_report(sys_, args.scope, force=args.force, workers=args.threads)
    if args.format == "csv":
        rows = [["policy", "A1", "A2", "B1", "B2", "active", "status"]]
        for r in rep.records:
            act = "" if r.active is None else str(r.active).lower()
            rows.append([r.label, r.A1.status, r.A2.status, r.B1.status, r.B2.status, act, r.status])
        out.emit("assumptions.csv", _csv(rows))
    else:
        out.emit("assumptions.json", rep.to_json())
    out.note(rep.to_table())
    return rep.exit_code


def _solve(sys_: PLDS, args):
    from .solver import solve_halfline

    return solve_halfline(sys_, force=args.force, depth=args.depth, workers=args.threads)


def cmd_solve(inp: LoadedInput, args, out: Output) -> int:
    sol = _solve(_as_plds(inp), args)
    if args.format == "csv":
        rows = [["coordinate", "rho", "u"]] + [[l, fmt(r), fmt(u)] for l, r, u in zip(sol.labels, sol.rho, sol.u)]
        rows.append(["t1", fmt(sol.t1), ""])
        rows.append(["policy", sol.policy_label, ""])
        out.emit("solution.csv", _csv(rows))
    else:
        out.emit("solution.json", sol.to_json())
    out.note(f"policy {sol.policy_label}  rho = ({', '.join(map(fmt, sol.rho))})  t1 = {fmt(sol.t1)}")
    return EXIT_OK


def _read_history(path: str, sys_: PLDS):
    """CSV with columns ``t,x_1..x_n`` (exact rationals or decimals) on the grid."""
    table = {}
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or len(rows[0]) != sys_.n + 1:
        raise InputError(f"{path}: expected header t,x_1..x_{sys_.n}")
    for row in rows[1:]:
        try:
            vals = [Fraction(x) for x in row]
        except ValueError as exc:
            raise InputError(f"{path}: bad number in {row}") from exc
        table[vals[0]] = tuple(vals[1:])

    def hist(s):
        if s not in table:
            raise InputError(f"{path}: history has no row for t = {s}")
        return table[s]

    return hist


def _random_history(sys_: PLDS, seed: int):
    rng = random.Random(seed)
    rates = dict(sys_.inputs)
    base = [Fraction(rng.randint(0, 20), 4) for _ in range(sys_.n)]
    slope = [rates.get(i, Fraction(rng.randint(0, 4), 4)) for i in range(sys_.n)]
    return lambda s: tuple(b + m * s for b, m in zip(base, slope))


def cmd_simulate(inp: LoadedInput, args, out: Output) -> int:
    from .simulator import estimate_throughput, halfline_residual, linear_history, simulate, write_csv

    sys_ = _as_plds(inp)
    sol, why = None, None
    try:
        sol = _solve(sys_, args)
    except Exception as exc:  # the trajectory is still useful without a reference half-line
        why = f"{type(exc).__name__}: {exc}"
    if args.history == "zero":
        history = None
    elif args.history == "halfline":
        if sol is None:
            raise InputError(f"--history halfline needs a solution ({why})")
        history = linear_history(sol.u, sol.rho, sol.t1)
    elif args.history == "random":
        history = _random_history(sys_, args.seed)
    else:
        history = _read_history(args.history, sys_)
    traj = simulate(sys_, Fraction(args.horizon), history, exact=args.exact)
    window = Fraction(args.window) if args.window else None
    if window is None:
        q = (traj.horizon / 4) / traj.step
        window = max(1, int(q)) * traj.step
    summary = {
        "labels": list(sys_.labels),
        "step": fmt(traj.step),
        "horizon": fmt(traj.horizon),
        "exact": traj.exact,
        "window": fmt(window),
        "warnings": traj.warnings,
    }
    try:
        thr = estimate_throughput(traj, window)
        summary["throughput"] = [fmt(x) if traj.exact else repr(x) for x in thr]
    except ValueError as exc:
        summary["throughput"] = None
        summary["throughput_error"] = str(exc)
    if sol is not None:
        summary["rho"] = [fmt(x) for x in sol.rho]
        res = halfline_residual(traj, sol.halfline, tail="half")
        summary["halfline_residual_tail"] = fmt(res) if traj.exact else repr(res)
        if summary["throughput"] is not None:
            summary["throughput_error_vs_rho"] = repr(max(abs(float(a) - float(b)) for a, b in zip(thr, sol.rho)))
    else:
        summary["solver"] = why
    if out.out is None:
        buf = io.StringIO()
        _write_traj(traj, buf, args.precision)
        sys.stdout.write(buf.getvalue())
    else:
        write_csv(traj, out.out / "trajectory.csv", precision=args.precision, exact_sidecar=args.exact_sidecar)
        out.written.append("trajectory.csv")
        if args.exact_sidecar and traj.exact:
            out.written.append("trajectory.csv.exact.csv")
    out.emit("summary.json", json.dumps(summary, indent=2), echo=False)
    out.note(json.dumps(summary, indent=2))
    return EXIT_OK


def _write_traj(traj, fh, precision):
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["t"] + [f"x_{i + 1}" for i in range(len(traj.labels))])
    for k, vals in enumerate(traj.values):
        w.writerow([f"{float(traj.time(k)):.{precision}f}"] + [f"{float(x):.{precision}f}" for x in vals])


def _parse_set(items) -> dict:
    fixed = {}
    for item in items or ():
        if "=" not in item:
            raise InputError(f"--set expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        try:
            fixed[k.strip()] = Fraction(v.strip())
        except ValueError as exc:
            raise InputError(f"--set {item!r}: bad value") from exc
    return fixed


def cmd_sweep(inp: LoadedInput, args, out: Output) -> int:
    from .sweep import parse_range, run_sweep, sweep_csv

    net = _need_net(inp, "sweep")
    if not args.vary:
        raise InputError("sweep needs at least one --vary NAME=lo:hi:step")
    try:
        vary = [parse_range(v) for v in args.vary]
    except (ValueError, ZeroDivisionError) as exc:
        raise InputError(str(exc)) from exc
    fixed = _parse_set(args.set)
    try:
        for name in [n for n, _ in vary] + list(fixed):
            net.parameter_key(name)
    except (KeyError, NetError) as exc:
        raise InputError(str(exc)) from exc
    report, assumptions, cells = run_sweep(net, vary, fixed=fixed, workers=args.threads)
    if args.format == "json":
        doc = {
            "coordinates": list(report.coordinates),
            "assumptions": None if assumptions is None else assumptions.verdict,
            "cells": [
                {
                    "params": {k: fmt(v) for k, v in c.params},
                    "status": c.status,
                    "rho": None if c.rho is None else [fmt(x) for x in c.rho],
                    "u": None if c.u is None else [fmt(x) for x in c.u],
                    "t1": None if c.t1 is None else fmt(c.t1),
                    "policy": c.policy,
                    "message": c.message,
                }
                for c in cells
            ],
        }
        out.emit("sweep.json", json.dumps(doc, indent=2))
    else:
        out.emit("sweep.csv", sweep_csv(report, cells))
    bad = sum(c.status != "ok" for c in cells)
    out.note(f"{len(cells)} cells, {bad} failed; columns rho_k follow coordinates {', '.join(report.coordinates)}")
    if assumptions is not None and assumptions.verdict != "pass":
        return assumptions.exit_code
    return EXIT_OK if bad == 0 else EXIT_FAIL


COMMANDS = {
    "validate": cmd_validate,
    "compile": cmd_compile,
    "assumptions": cmd_assumptions,
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    S = argparse.SUPPRESS
    common.add_argument("--out", type=Path, default=S, help="output directory (default: stdout)")
    common.add_argument("--threads", type=int, default=S, help="worker processes (env PRIORINET_THREADS)")
    common.add_argument("--seed", type=int, default=S, help="seed for randomized histories")
    common.add_argument("--format", choices=("json", "csv"), default=S)

    p = argparse.ArgumentParser(prog="priorinet", description=__doc__.splitlines()[0], parents=[common])
    p.add_argument("--version", action="version", version=f"priorinet {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_, parents=[common])
        sp.add_argument("input", help="net or PLDS JSON file, or a bundled net name")
        return sp

    add("validate", "check a net for structural violations")
    sp = add("compile", "compile a net to its counter equations")
    sp.add_argument("--no-reduce", action="store_true", help="keep every transition as a coordinate")
    sp = add("assumptions", "check Assumptions A and B for every policy")
    sp.add_argument("--scope", choices=("all", "active"), default="all")
    sp.add_argument("--force", action="store_true", help="ignore the policy count limit")
    for name, help_ in (("solve", "compute the invariant half-line"), ("simulate", "simulate the delay system")):
        sp = add(name, help_)
        sp.add_argument("--force", action="store_true", help="solve even if the assumptions fail")
        sp.add_argument("--depth", type=int, default=3, help="Laurent coefficients kept")
    sp.add_argument("--horizon", default="100")
    sp.add_argument("--history", default="zero", help="zero | halfline | random | CSV file")
    sp.add_argument("--exact", action="store_true", help="exact rational arithmetic (slow on long horizons)")
    sp.add_argument("--exact-sidecar", action="store_true", help="also write exact values (with --exact)")
    sp.add_argument("--window", default=None, help="throughput window (default horizon/4)")
    sp.add_argument("--precision", type=int, default=6)
    sp = add("sweep", "solve over a grid of markings / input rates")
    sp.add_argument("--vary", action="append", metavar="NAME=lo:hi:step")
    sp.add_argument("--set", action="append", metavar="NAME=VALUE", help="fix a parameter for the whole sweep")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    # global flags share one action object between parsers, so defaults go here
    for name, default in (("out", None), ("threads", None), ("seed", 0), ("format", None)):
        if not hasattr(args, name):
            setattr(args, name, default)
    from .simulator import SimulationError
    from .solver import AssumptionsNotMet, InconsistencyError
    from .spectral import PolicyOverflowError

    out = Output(args.out)
    digest, kind = None, None
    code = EXIT_INPUT
    try:
        args.threads = _threads(args.threads)
        if args.format is None:
            args.format = "csv" if args.command == "sweep" else "json"
        inp = load_input(args.input)
        digest, kind = inp.digest, inp.kind
        code = COMMANDS[args.command](inp, args, out)
    except AssumptionsNotMet as exc:
        out.note(exc.report.to_table())
        code = exc.report.exit_code
    except InconsistencyError as exc:
        out.note(f"inconsistency: {exc}")
        code = EXIT_INCONSISTENT
    except (InputError, NetError, PLDSValidationError, PolicyOverflowError, SimulationError, OSError) as exc:
        out.note(f"error: {exc}")
        code = EXIT_INPUT
    opts = {k: (str(v) if isinstance(v, Path) else v) for k, v in sorted(vars(args).items())
            if k not in ("out", "threads", "seed", "format", "command", "input")}
    cfg = RunConfig(args.input, kind or "unknown", args.command, opts, args.out, args.threads
                    if isinstance(args.threads, int) else 1, args.seed, args.format or "json")
    out.manifest(cfg, digest, code)
    return code


if __name__ == "__main__":
    raise SystemExit(main())
