"""Command-line front end.

Exit codes: 0 success, 1 usage or input error, 2 a run found no tour under
the threshold.
"""
from __future__ import annotations

import argparse
import configparser
import logging
import secrets
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .diversity import cluster_count, d1, d2, mean_gap
from .pipeline import (MODES, RunConfig, read_records, run_seed, run_sweep, summarize,
                       write_outputs)
from .report import TABLES, build_report
from .tour import Tour, tour_cost
from .tsplib import (ConfigurationError, TSPLIBError, bundled_instances, check_tour,
                     iter_tour_documents, load_instance, make_threshold)

EXIT_OK, EXIT_USAGE, EXIT_FAILURE = 0, 1, 2


class UsageError(Exception):
    pass


class ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common(p, multi=False):
    if multi:
        p.add_argument("--instances", "--instance", dest="instances", nargs="+",
                       help="bundled names (eil51) or .tsp paths")
        p.add_argument("--alpha", nargs="+", type=float, help="quality slack values")
        p.add_argument("--mode", nargs="+", choices=MODES, help="default: two-stage")
    else:
        p.add_argument("--instance", help="bundled name (eil51) or .tsp path")
        p.add_argument("--alpha", type=float, help="tours must cost <= (1+alpha)*optimum")
        p.add_argument("--mode", choices=MODES, help="default: two-stage")
    p.add_argument("--opt-tour", help="optimum tour file (default: sibling .opt.tour)")
    p.add_argument("--opt-cost", type=float, help="optimum cost when no tour is available")
    p.add_argument("--mu", type=int, help="output set size (default n//4)")
    p.add_argument("--pop-size", type=int, help="stage-1 population (default 3*mu)")
    p.add_argument("--budget-factor", type=float, help="budget = factor*floor(mu*n*sqrt(n)); 40")
    p.add_argument("--budget", type=float, help="absolute evaluation budget (overrides factor)")
    p.add_argument("--variant", choices=("ed", "pd", "both"), help="default: both")
    p.add_argument("--mutation", choices=("2opt", "swap"), help="stage-2 mutation; 2opt")
    p.add_argument("--seed", type=int, help="master seed (drawn and printed when absent)")
    p.add_argument("--cutoff", type=float, help="cluster cutoff distance (default 0.2)")
    p.add_argument("--check", action="store_true", default=None,
                   help="assert diversity never drops during stage 2")
    p.add_argument("--out", help="output file (run) or prefix (experiment)")
    p.add_argument("--config", help="key = value file; flags override it")
    p.add_argument("--verbose", "-v", action="store_true", default=None)


def build_parser() -> ArgumentParser:
    parser = ArgumentParser(prog="divtsp",
                            description="Diverse near-optimal TSP tours in two stages.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="one run; prints one JSON record per variant")
    _common(p)

    p = sub.add_parser("experiment", help="seeded multi-run sweep; writes JSONL + CSV")
    _common(p, multi=True)
    p.add_argument("--runs", type=int, help="runs per configuration (default 30)")
    p.add_argument("--jobs", type=int, help="worker processes (default 1)")

    p = sub.add_parser("metrics", help="diversity metrics of a set of tours")
    p.add_argument("--tours", required=True, help="TSPLIB tour file or directory of them")
    p.add_argument("--instance", required=True)
    p.add_argument("--opt-tour")
    p.add_argument("--opt-cost", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--cutoff", type=float, default=0.2)

    p = sub.add_parser("report", help="tables from a JSONL record file")
    p.add_argument("records", help="JSONL file written by 'experiment' or 'run'")
    p.add_argument("--table", choices=list(TABLES) + ["all"], default="all")
    p.add_argument("--format", choices=("text", "csv"), default="text")

    sub.add_parser("instances", help="list the bundled instances")
    return parser


CONFIG_KEYS = {"instance", "instances", "alpha", "mode", "opt_tour", "opt_cost", "mu",
               "pop_size", "budget_factor", "budget", "variant", "mutation", "seed", "cutoff",
               "check", "out", "verbose", "runs", "jobs"}


def read_config(path: str) -> dict:
    """Plain ``key = value`` lines; ``#`` comments; lists are whitespace separated."""
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        cp.read_string("[run]\n" + Path(path).read_text(), source=path)
    except (OSError, configparser.Error) as e:
        raise UsageError(f"cannot read config {path}: {e}") from None
    out = {}
    for key, value in cp["run"].items():
        k = key.replace("-", "_")
        if k not in CONFIG_KEYS:
            raise UsageError(f"{path}: unknown key {key!r}")
        out[k] = value
    return out


def _coerce(key, value, multi):
    if key in ("alpha",) and multi:
        return [float(v) for v in value.split()]
    if key in ("instances", "mode") and multi:
        return value.split()
    if key in ("alpha", "opt_cost", "budget_factor", "budget", "cutoff"):
        return float(value)
    if key in ("mu", "pop_size", "seed", "runs", "jobs"):
        return int(value)
    if key in ("check", "verbose"):
        return value.strip().lower() in ("1", "true", "yes", "on")
    return value


def merged(args, multi) -> dict:
    vals = {}
    if getattr(args, "config", None):
        for k, v in read_config(args.config).items():
            if k == "instance" and multi:
                k = "instances"
            if k == "instances" and not multi:
                k = "instance"
            try:
                vals[k] = _coerce(k, v, multi)
            except ValueError:
                raise UsageError(f"{args.config}: bad value for {k}: {v!r}") from None
    for k, v in vars(args).items():
        if v is not None:
            vals[k] = v
    return vals


def _setup_logging(verbose):
    logging.basicConfig(level=logging.DEBUG if verbose else logging.WARNING,
                        stream=sys.stderr, format="%(name)s: %(message)s")


def _seed(vals) -> int:
    if vals.get("seed") is None:
        seed = secrets.randbits(32)
        print(f"seed: {seed}", file=sys.stderr)
        return seed
    return vals["seed"]


def _config_kw(vals) -> dict:
    kw = {}
    for k in ("opt_tour", "opt_cost", "mu", "pop_size", "budget_factor", "budget", "variant",
              "mutation", "cutoff", "check", "runs"):
        if vals.get(k) is not None:
            kw[k] = vals[k]
    return kw


def cmd_run(args) -> int:
    vals = merged(args, multi=False)
    _setup_logging(vals.get("verbose"))
    for need in ("instance", "alpha"):
        if vals.get(need) is None:
            raise UsageError(f"--{need} is required")
    seed = _seed(vals)
    cfg = RunConfig(instance=vals["instance"], alpha=vals["alpha"],
                    mode=vals.get("mode", "two-stage"), seed=seed, **_config_kw(vals))
    records = run_seed(cfg, seed)
    text = "".join(r.to_json() + "\n" for r in records)
    if vals.get("out"):
        Path(vals["out"]).parent.mkdir(parents=True, exist_ok=True)
        Path(vals["out"]).write_text(text)
    sys.stdout.write(text)
    return EXIT_FAILURE if any(r.failure for r in records) else EXIT_OK


def cmd_experiment(args) -> int:
    vals = merged(args, multi=True)
    _setup_logging(vals.get("verbose"))
    for need in ("instances", "alpha"):
        if not vals.get(need):
            raise UsageError(f"--{need} is required")
    seed = _seed(vals)
    kw = _config_kw(vals)
    cfgs = [RunConfig(instance=i, alpha=a, mode=m, seed=seed, **kw)
            for i in vals["instances"] for a in vals["alpha"]
            for m in vals.get("mode") or ["two-stage"]]
    records = run_sweep(cfgs, jobs=vals.get("jobs", 1))
    paths = write_outputs(records, vals.get("out", "results/experiment"))
    for row in summarize(records):
        d1m, d2m = row["mean_d1"], row["mean_d2"]
        print(f"{row['instance']:>10} alpha={row['alpha']:<5g} {row['variant']:>7} "
              f"D1={'-' if d1m is None else f'{d1m:.3f}%'} "
              f"D2={'-' if d2m is None else f'{d2m:.3f}%'} failures={row['failures']}")
    print(f"records: {paths['records']}\nsummary: {paths['summary']}")
    return EXIT_OK


def load_tour_set(path: str, inst) -> list[Tour]:
    p = Path(path)
    files = sorted(p.glob("*.tour")) if p.is_dir() else [p]
    if not files:
        raise UsageError(f"no .tour files in {path}")
    tours = []
    for f in files:
        for name, cities, dim in iter_tour_documents(f.read_text(), str(f)):
            perm = check_tour(name, cities, dim, inst.n)
            tours.append(Tour(perm, tour_cost(inst, perm)))
    return tours


def cmd_metrics(args) -> int:
    inst, _ = load_instance(args.instance, args.opt_tour, args.opt_cost)
    tours = load_tour_set(args.tours, inst)
    print(f"tours: {len(tours)}")
    if len(tours) >= 2:
        print(f"D1: {d1(tours):.6f}\nD2: {d2(tours):.6f}")
    if args.alpha is not None:
        thr = make_threshold(inst, args.alpha)
        print(f"feasible (alpha={args.alpha:g}): {sum(thr.accepts(t.cost) for t in tours)}")
    print(f"clusters (cutoff {args.cutoff:g}): {cluster_count(tours, args.cutoff)}")
    if inst.optimum_cost:
        print(f"mean gap: {mean_gap(tours, inst):.6f}")
    costs = np.array([t.cost for t in tours])
    print(f"cost: min {costs.min()} mean {costs.mean():.2f} max {costs.max()}")
    return EXIT_OK


def cmd_report(args) -> int:
    records = read_records(args.records)
    tables = list(TABLES) if args.table == "all" else [args.table]
    for t in build_report(records, tables):
        sys.stdout.write(t.render() if args.format == "text" else t.to_csv())
        sys.stdout.write("\n")
    return EXIT_OK


def cmd_instances(args) -> int:
    for name in bundled_instances():
        inst, best = load_instance(name)
        print(f"{name:>10}  n={inst.n:<4d} optimum={inst.optimum_cost}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "experiment": cmd_experiment, "metrics": cmd_metrics,
            "report": cmd_report, "instances": cmd_instances}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (UsageError, ConfigurationError, TSPLIBError, FileNotFoundError, ValueError) as e:
        print(f"divtsp {args.command}: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
