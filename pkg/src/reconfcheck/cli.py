"""Command-line front end: ``reconfcheck {check,scaling,trace}``."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .domain import ConfigurationError
from .jacobi import SolverSettings
from .oracle import NotFlatGround
from .overload import reports_csv
from .pipeline import run_check
from .scaling import exponents, rows_csv, run_scaling
from .scenario import ScenarioError, load

EXIT_USAGE = 1


def _settings(doc, args) -> SolverSettings:
    s = doc.settings()
    changes = {}
    if args.iterations is not None:
        changes["max_iterations"] = args.iterations
    if args.beta is not None:
        changes["beta"] = args.beta
    if args.gamma is not None:
        changes["gamma"] = args.gamma
    return dataclasses.replace(s, **changes)


def _run(args):
    doc = load(args.scenario)
    return run_check(doc, seed=args.seed, settings=_settings(doc, args),
                     simplified=True if args.simplified_stability else None,
                     fidelity=args.fidelity_bb1, verify=getattr(args, "verify", False),
                     policy=args.policy)


def cmd_check(args) -> int:
    out = _run(args)
    rep = out.report
    if args.trace:
        Path(args.trace).write_text(out.trace.to_lines())
    if args.csv:
        Path(args.csv).write_text(reports_csv(out.overload.reports))
    if args.convergence:
        lines = ["round,residual,state_changes"] + [f"{i},{r!r},{c}" for i, r, c in rep.convergence]
        Path(args.convergence).write_text("\n".join(lines) + "\n")
    sys.stdout.write(rep.to_json(timing=args.timing))
    return rep.exit_code


def cmd_trace(args) -> int:
    out = _run(args)
    cfg, trace = out.config, out.trace
    n = len(cfg.real_ids)
    E = sum(1 for p, q in cfg.connections if not cfg.is_virtual(p) and not cfg.is_virtual(q))
    degree_sum = sum(cfg.degree(p) for p in cfg.ids)
    phases = trace.totals_by_phase()
    checks = {
        "tree_build": trace.count("Tree", "tree") == 2 * E - (n - 1)
        and trace.count("TreeAck", "tree") == n - 1 and trace.count("AggregateUp", "tree") == n - 1,
        "aggregations": all(phases.get(ph, 0) == n - 1 for ph in phases if ph not in ("tree", "jacobi")),
        "jacobi_states": trace.count("JacobiState") == out.jacobi.iterations * degree_sum,
        "locality": not trace.non_local(cfg),
    }
    summary = {
        "scenario": out.report.scenario,
        "real_modules": n,
        "logical_nodes": len(cfg.ids),
        "iterations": out.jacobi.iterations,
        "degree_sum": degree_sum,
        "by_kind": trace.totals_by_kind(),
        "by_phase": phases,
        "inter_module": len(trace.records) - trace.count(internal=True),
        "internal": trace.count(internal=True),
        "frames": trace.frames_total(),
        "bytes": trace.bytes_total(),
        "rounds": {ph: trace.rounds(ph) for ph in phases},
        "checks": checks,
    }
    if args.trace:
        Path(args.trace).write_text(trace.to_lines())
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return 0 if all(checks.values()) else EXIT_USAGE


def _sizes(text: str) -> list[int]:
    out = []
    for part in text.split(","):
        if "-" in part:
            a, b = part.split("-")
            out += list(range(int(a), int(b) + 1))
        else:
            out.append(int(part))
    return out


def cmd_scaling(args) -> int:
    settings = SolverSettings(beta=args.beta if args.beta is not None else 2 / 3,
                              gamma=args.gamma if args.gamma is not None else 1e-4)
    rows = run_scaling(args.family, _sizes(args.sizes), args.tolerances, settings, args.max_iterations)
    text = rows_csv(rows)
    if args.csv:
        Path(args.csv).write_text(text)
    sys.stdout.write(text)
    for tol, p in exponents(rows).items():
        sys.stdout.write(f"# exponent tol={tol!r}: {'n/a' if p is None else f'{p:.3f}'}\n")
    return 0


def _common(sp, verify=True):
    sp.add_argument("--scenario", required=True, help="scenario YAML file")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--iterations", type=int, help="override solver.max_iterations")
    sp.add_argument("--beta", type=float)
    sp.add_argument("--gamma", type=float)
    sp.add_argument("--simplified-stability", action="store_true")
    sp.add_argument("--fidelity-bb1", action="store_true", help="4-byte floats and 17-byte message frames")
    sp.add_argument("--policy", choices=("random", "sync"), default="random", help="message scheduler")
    sp.add_argument("--trace", help="write line-delimited message records here")
    if verify:
        sp.add_argument("--verify", action="store_true", help="append centralized-oracle deltas")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="reconfcheck", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("check", help="run the full check on a scenario")
    _common(c)
    c.add_argument("--csv", help="write per-connection rows here")
    c.add_argument("--convergence", help="write the convergence log here")
    c.add_argument("--timing", action="store_true", help="include wall time in the report")
    c.set_defaults(func=cmd_check)

    t = sub.add_parser("trace", help="message accounting for a scenario")
    _common(t, verify=False)
    t.set_defaults(func=cmd_trace)

    s = sub.add_parser("scaling", help="iterations-to-tolerance study")
    s.add_argument("--family", default="fixed-arm", choices=("fixed-arm", "chain", "slab"))
    s.add_argument("--sizes", default="4-16", help="e.g. 4-16 or 4,8,12")
    s.add_argument("--tolerances", type=float, nargs="+", default=[1e-3])
    s.add_argument("--beta", type=float)
    s.add_argument("--gamma", type=float)
    s.add_argument("--max-iterations", type=int, default=5_000_000)
    s.add_argument("--csv", help="write the table here as well")
    s.set_defaults(func=cmd_scaling)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, ConfigurationError, NotFlatGround, ValueError, OSError) as exc:
        sys.stderr.write(f"reconfcheck: error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
