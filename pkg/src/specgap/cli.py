"""Command-line front end.

Exit codes: 0 when every check passed, 1 when a verification failed, 2 for
usage errors and exceeded budgets.  Reports are JSON (``schema: 1``) unless
``--format csv`` is given, and always embed the run configuration.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import aldous, boxstudy
from .errors import BudgetExceeded, SpecgapError
from .graphcore import (
    Graph,
    emit_graph6,
    make_box,
    make_complete,
    make_cycle,
    make_path,
    make_star,
    parse_graph6,
    read_graph_file,
)
from .lumping import build_quotient, occupancy_map, position_map, projection_audit
from .operators import DEFAULT_STATE_BUDGET, exclusion_generator, interchange_generator, rw_generator
from .report import SCHEMA_VERSION, AuditReport, compare, dumps, rows_to_csv
from .spectral import DEFAULT_SEED, DEFAULT_TOL, DENSE_THRESHOLD, spectral_gap

log = logging.getLogger("specgap")


@dataclass
class RunConfig:
    seed: int = DEFAULT_SEED
    dense_threshold: int = DENSE_THRESHOLD
    state_budget: int = DEFAULT_STATE_BUDGET
    tolerance: float = DEFAULT_TOL
    output: str | None = None
    format: str = "json"

    def solver(self) -> aldous.SolverOptions:
        return aldous.SolverOptions(self.dense_threshold, self.state_budget, self.tolerance, self.seed)


class UsageError(SpecgapError):
    pass


def parse_graph_spec(spec: str, budget: int = DEFAULT_STATE_BUDGET) -> Graph:
    """``path:L``, ``box:d:L``, ``complete:n``, ``cycle:n``, ``star:k``, ``g6:<s>``, ``file:<path>``."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "path":
            return make_path(int(rest))
        if kind == "box":
            d, L = rest.split(":")
            return make_box(int(d), int(L), budget)
        if kind == "complete":
            return make_complete(int(rest))
        if kind == "cycle":
            return make_cycle(int(rest))
        if kind == "star":
            return make_star(int(rest))
        if kind == "g6":
            return parse_graph6(rest)
        if kind == "file":
            return read_graph_file(rest)
    except (ValueError, OSError) as exc:
        raise UsageError(f"bad graph spec {spec!r}: {exc}") from None
    raise UsageError(f"unknown graph spec {spec!r}")


def _graph_info(G: Graph) -> dict:
    info = {"n": G.n, "edges": G.num_edges}
    if G.n <= 62:
        info["graph6"] = emit_graph6(G)
    return info


def _check_dict(c) -> dict:
    return {"name": c.name, "lhs": c.lhs, "relation": c.relation, "rhs": c.rhs, "holds": c.holds, "note": c.note}


# ---------------------------------------------------------------------------
# subcommands: each returns (payload, passed, csv rows, csv columns)


def cmd_gap(args, cfg: RunConfig):
    G = parse_graph_spec(args.graph, cfg.state_budget)
    if args.process == "rw":
        gen = rw_generator(G)
    elif args.process == "ip":
        gen = interchange_generator(G, cfg.state_budget)
    else:
        if args.particles is None:
            raise UsageError("--particles is required for the exclusion process")
        gen = exclusion_generator(G, args.particles, cfg.state_budget)
    res = spectral_gap(gen, method=args.method, dense_threshold=cfg.dense_threshold, tol=cfg.tolerance, seed=cfg.seed)
    check = compare("residual <= tolerance", res.residual, "<=", cfg.tolerance, 0.0)
    payload = {"graph": _graph_info(G), "process": args.process, "particles": args.particles, "states": gen.size,
               "result": res.summary(), "checks": [_check_dict(check)]}
    row = dict(payload["result"], process=args.process, states=gen.size)
    return payload, check.holds, [row], ["process", "states", "gap", "residual", "method", "iterations", "seed"]


def cmd_verify_aldous(args, cfg: RunConfig):
    summary = aldous.batch_verify(args.nmax, args.rel_tol, cfg.solver(), jobs=args.jobs)
    payload = summary.to_dict()
    passed = not summary.failures and payload["contraction_violations"] == 0
    return payload, passed, payload["rows"], aldous.CSV_COLUMNS


def cmd_alpha(args, cfg: RunConfig):
    G = parse_graph_spec(args.graph, cfg.state_budget)
    audit = aldous.alpha_sequence(G, cfg.solver())
    payload = {
        "graph": _graph_info(G),
        "prefix_gaps": audit.prefix_gaps,
        "alpha": audit.alpha,
        "alpha_n": audit.alpha_n,
        "lambda_rw": audit.lambda_rw,
        "lambda_ip": audit.lambda_ip,
        "bound_holds": audit.bound_holds,
        "prefix_gaps_nonincreasing": audit.prefix_gaps_nonincreasing,
    }
    rows = [{"k": k, "prefix_gap": g, "alpha": a} for k, g, a in zip(range(2, G.n + 1), audit.prefix_gaps, audit.alpha)]
    return payload, audit.bound_holds is not False, rows, ["k", "prefix_gap", "alpha"]


def cmd_box_study(args, cfg: RunConfig):
    rows = boxstudy.asymptotic_report(args.dim, args.lmax, with_ip=args.with_ip, dense_threshold=cfg.dense_threshold, seed=cfg.seed)
    report = AuditReport(f"box-study[d={args.dim}]")
    for r in rows:
        report.add(compare(f"L={r['L']} beta <= gamma", r["beta"], "<=", r["gamma"], 1e-9))
        if r["lambda_ip"] is not None:
            report.add(compare(f"L={r['L']} lambda_ip <= lambda_rw", r["lambda_ip"], "<=", r["gamma"], 1e-9))
    for a, b in zip(rows, rows[1:]):
        report.add(compare(f"gamma decreasing at L={b['L']}", b["gamma"], "<=", a["gamma"], 0.0))
    payload = {"d": args.dim, "rows": rows, "checks": [_check_dict(c) for c in report.checks]}
    return payload, report.passed, rows, boxstudy.REPORT_COLUMNS


def cmd_corollary_audit(args, cfg: RunConfig):
    audit = boxstudy.corollary_audit(args.dim, args.L, args.k, args.M, tol=cfg.tolerance, dense_threshold=cfg.dense_threshold)
    payload = audit.to_dict()
    rows = [dict(_check_dict(c), vector=i) for i, r in enumerate(audit.reports) for c in r.checks]
    return payload, audit.passed, rows, ["vector", "name", "lhs", "relation", "rhs", "holds", "note"]


def cmd_lump_audit(args, cfg: RunConfig):
    G = parse_graph_spec(args.graph, cfg.state_budget)
    kind, _, m = args.map.partition(":")
    try:
        m = int(m)
        g = {"position": position_map, "occupancy": occupancy_map}[kind](G.n, m)
    except (KeyError, ValueError) as exc:
        raise UsageError(f"bad map spec {args.map!r}: {exc}") from None
    gen = interchange_generator(G, cfg.state_budget)
    if gen.size > cfg.dense_threshold:
        raise BudgetExceeded("lump audit (dense eigensolve)", gen.size, cfg.dense_threshold, "dense_threshold")
    report = projection_audit(gen, g, cfg.tolerance)
    target = rw_generator(G) if kind == "position" else exclusion_generator(G, m, cfg.state_budget)
    diff = np.abs(build_quotient(gen, g).qprime.to_dense() - target.to_dense()).max()
    report.add(compare(f"quotient == {'rw' if kind == 'position' else 'exclusion'} generator", float(diff), "<=", 1e-12, 0.0))
    payload = dict(report.to_dict(), graph=_graph_info(G), map=args.map)
    rows = [_check_dict(c) for c in report.checks]
    return payload, report.passed, rows, ["name", "lhs", "relation", "rhs", "holds", "note"]


COMMANDS = {
    "gap": cmd_gap,
    "verify-aldous": cmd_verify_aldous,
    "alpha": cmd_alpha,
    "box-study": cmd_box_study,
    "corollary-audit": cmd_corollary_audit,
    "lump-audit": cmd_lump_audit,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=DEFAULT_SEED, help="solver seed (SPECGAP_SEED overrides)")
    common.add_argument("--dense-threshold", type=int, default=DENSE_THRESHOLD)
    common.add_argument("--state-budget", type=int, default=DEFAULT_STATE_BUDGET)
    common.add_argument("--tol", type=float, default=DEFAULT_TOL, help="residual tolerance")
    common.add_argument("--output", "-o", help="write the report here instead of stdout")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="worker processes for batch commands")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="specgap", description="Spectral gaps of interchange, exclusion and random-walk processes.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gap", parents=[common], help="spectral gap of one process on one graph")
    p.add_argument("--process", choices=["rw", "ip", "ex"], required=True)
    p.add_argument("--particles", type=int)
    p.add_argument("--graph", required=True)
    p.add_argument("--method", choices=["auto", "dense", "lanczos"], default="auto")

    p = sub.add_parser("verify-aldous", parents=[common], help="compare gaps on every connected graph up to nmax vertices")
    p.add_argument("--nmax", type=int, required=True)
    p.add_argument("--rel-tol", type=float, default=1e-8)

    p = sub.add_parser("alpha", parents=[common], help="prefix gaps and the alpha lower bound")
    p.add_argument("--graph", required=True)

    p = sub.add_parser("box-study", parents=[common], help="gamma/beta table for boxes")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--lmax", type=int, required=True)
    p.add_argument("--with-ip", action="store_true")

    p = sub.add_parser("corollary-audit", parents=[common], help="boundary-layer estimates on G'(L,k)")
    p.add_argument("--dim", type=int, required=True)
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--M", type=int, required=True)

    p = sub.add_parser("lump-audit", parents=[common], help="eigenvector projection through a lumping map")
    p.add_argument("--graph", required=True)
    p.add_argument("--map", required=True, help="position:m or occupancy:m")
    return parser


def _emit(text: str, cfg: RunConfig) -> None:
    if cfg.output:
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 2
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    seed = args.seed
    if os.environ.get("SPECGAP_SEED"):
        try:
            seed = int(os.environ["SPECGAP_SEED"])
        except ValueError:
            print(f"specgap: SPECGAP_SEED must be an integer, got {os.environ['SPECGAP_SEED']!r}", file=sys.stderr)
            return 2
    cfg = RunConfig(seed, args.dense_threshold, args.state_budget, args.tol, args.output, args.format)
    try:
        payload, passed, rows, columns = COMMANDS[args.command](args, cfg)
    except (SpecgapError, ValueError) as exc:
        print(f"specgap: {exc}", file=sys.stderr)
        return 2
    if cfg.format == "csv":
        _emit(rows_to_csv(rows, columns), cfg)
    else:
        doc = {"schema": SCHEMA_VERSION, "command": args.command, "config": asdict(cfg), "passed": bool(passed), "report": payload}
        _emit(dumps(doc), cfg)
    return 0 if passed else 1


if __name__ == "__main__":
    sys.exit(main())
