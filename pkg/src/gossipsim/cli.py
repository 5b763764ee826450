"""Command-line front end: ``gen-graphs``, ``run`` and ``curves``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import metrics
from .experiment import (
    PRESETS,
    ExperimentError,
    ExperimentPlan,
    emit_curves,
    generate_graph_set,
    load_manifest,
    run_experiment,
    sweep_v0,
    write_graph_set,
)
from .protocol import POLICIES
from .topology import ConstraintUnsatisfiable

EXIT_OK, EXIT_USAGE, EXIT_RUN, EXIT_CONSTRAINT = 0, 1, 2, 3

log = logging.getLogger("gossipsim")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _policy_list(text: str) -> list[str]:
    names = [p.strip() for p in text.split(",") if p.strip()]
    bad = [p for p in names if p not in POLICIES]
    if not names or bad:
        raise argparse.ArgumentTypeError(f"unknown policy {bad or text!r}; choose from {sorted(POLICIES)}")
    return names


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="gossipsim", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    g = sub.add_parser("gen-graphs", help="generate overlay graphs as DOT files")
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--edges-per-node", type=int, default=2)
    g.add_argument("--d-max", type=int, default=8)
    g.add_argument("--count", type=int, default=20)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out-dir", required=True)

    r = sub.add_parser("run", help="run a sweep and write per-run and aggregated results")
    r.add_argument("--manifest", help="replay the plan recorded in a manifest.json")
    r.add_argument("--graphs", default="gen:count=20", help="directory of .dot files or gen:n=..,count=.. spec")
    r.add_argument("--policy", type=_policy_list, default=["fixed-prob"], help="comma-separated policies")
    r.add_argument("--preset", choices=sorted(PRESETS))
    r.add_argument("--sigma", type=float)
    r.add_argument("--delta", type=float)
    r.add_argument("--alpha", type=float)
    r.add_argument("--t-mon", type=int)
    v = r.add_mutually_exclusive_group()
    v.add_argument("--v0", type=float, action="append", help="single value; repeatable")
    v.add_argument("--sweep-v0", type=int, metavar="K", help="K values i/K, i=1..K (default 25)")
    r.add_argument("--steps", type=int, default=5000)
    r.add_argument("--ttl", type=int, default=8)
    r.add_argument("--cache", type=int, default=256)
    r.add_argument("--mean-intergen", type=float, default=200.0)
    r.add_argument("--seeds", type=int, default=3)
    r.add_argument("--master-seed", type=int, default=0)
    r.add_argument("--out", required=True)
    r.add_argument("--jobs", type=int, default=os.cpu_count() or 1)

    c = sub.add_parser("curves", help="turn aggregated.csv into coverage/delay vs rho tables")
    c.add_argument("--in", dest="in_dir", required=True)
    c.add_argument("--rho-min", type=float, default=1.0, help="drop points below this rho; negative disables")
    c.add_argument("--out", required=True)
    return p


def plan_from_args(args) -> ExperimentPlan:
    if args.manifest:
        return load_manifest(args.manifest)
    explicit = {k: getattr(args, k) for k in ("sigma", "delta", "alpha", "t_mon")}
    given = {k: val for k, val in explicit.items() if val is not None}
    if args.preset and given:
        raise UsageError("--preset cannot be combined with --sigma/--delta/--alpha/--t-mon")
    if any(p.startswith("adaptive") for p in args.policy) and not args.preset and len(given) < 4:
        raise UsageError("adaptive policies need --preset or all of --sigma --delta --alpha --t-mon")
    if args.sweep_v0 is not None and args.sweep_v0 < 1:
        raise UsageError("--sweep-v0 needs K >= 1")
    v0_values = args.v0 if args.v0 else sweep_v0(args.sweep_v0 or 25)
    try:
        return ExperimentPlan(
            graphs=args.graphs, policies=args.policy, v0_values=v0_values, preset=args.preset,
            seeds=args.seeds, master_seed=args.master_seed, steps=args.steps, ttl=args.ttl,
            cache=args.cache, mean_intergen=args.mean_intergen, **given,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_gen_graphs(args) -> int:
    graphs = generate_graph_set(args.n, args.edges_per_node, args.d_max, args.count, args.seed)
    for p in write_graph_set(graphs, args.out_dir):
        log.info("wrote %s", p)
    return EXIT_OK


def cmd_run(args) -> int:
    plan = plan_from_args(args)
    if args.jobs < 1:
        raise UsageError("--jobs must be >= 1")
    reports = run_experiment(plan, args.out, jobs=args.jobs)
    log.info("%d runs written to %s", len(reports), args.out)
    return EXIT_OK


def cmd_curves(args) -> int:
    src = Path(args.in_dir) / "aggregated.csv"
    if not src.is_file():
        raise UsageError(f"{src} not found")
    rows = metrics.read_aggregate(src.read_text())
    cov, dl = emit_curves(rows, None if args.rho_min < 0 else args.rho_min)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "coverage_curves.csv").write_text(cov)
    (out / "delay_curves.csv").write_text(dl)
    return EXIT_OK


COMMANDS = {"gen-graphs": cmd_gen_graphs, "run": cmd_run, "curves": cmd_curves}


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"gossipsim: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConstraintUnsatisfiable as exc:
        print(f"gossipsim: constraint unsatisfiable: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT
    except (ExperimentError, ValueError, OSError) as exc:
        print(f"gossipsim: run failed: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
