"""Command-line interface.

Exit status: 0 on success, 2 for unusable input (bad flags, unparsable
files, invalid SEMs), 3 when the numerics fail.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

from . import __version__
from .errors import HDLingamError, InputError, NumericalError, StructureError
from .evaluation import PRESETS, run_high_dim, run_low_dim, run_timing
from .graph import hub_dag, random_dag
from .io import read_csv, read_json, write_csv, write_json
from .search import EstimateConfig, estimate_graph
from .sem import (
    ErrorSpec,
    PopulationOracle,
    Sem,
    faithfulness_violations,
    is_parentally_faithful,
    oracle_gamma,
    population_tau,
    simulate,
)

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3

log = logging.getLogger("hdlingam")


def _default_threads() -> int:
    env = os.environ.get("HDLINGAM_THREADS", "").strip()
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            log.warning("ignoring non-integer HDLINGAM_THREADS=%r", env)
    return os.cpu_count() or 1


def _non_negative(text):
    try:
        x = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not x >= 0:
        raise argparse.ArgumentTypeError(f"must be >= 0, got {text}")
    return x


def _positive_int(text):
    try:
        x = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if x < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {text}")
    return x


def _node_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated node labels, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="input file (CSV for discover, SEM JSON for simulate/oracle)")
    common.add_argument("--output", help="output path (file, or directory for benchmark)")
    common.add_argument("--max-in-degree", dest="J", type=int, default=3, help="in-degree / adjustment-set bound J")
    common.add_argument("--moment-order", dest="K", type=int, choices=(3, 4, 5, 6), default=4)
    common.add_argument("--alpha", type=_non_negative, default=0.8, help="cutoff multiplier")
    common.add_argument("--stat", choices=("minmax", "maxmin"), default="maxmin")
    common.add_argument("--standardize", action="store_true", help="scale columns to unit variance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--preset", default="desk", help="benchmark preset: desk or full")
    common.add_argument("--threads", type=_positive_int, default=None,
                        help="worker threads (default: $HDLINGAM_THREADS or CPU count)")
    common.add_argument("-q", "--quiet", action="store_true")

    parser = argparse.ArgumentParser(prog="hdlingam", description="Causal ordering discovery for linear non-Gaussian SEMs.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("discover", parents=[common], help="estimate a DAG from a CSV dataset")

    sim = sub.add_parser("simulate", parents=[common], help="simulate data from a SEM")
    sim.add_argument("-n", "--samples", type=_positive_int, default=1000)
    sim.add_argument("--generator", choices=("random", "hub"), default="random",
                     help="graph generator when no --input SEM is given")
    sim.add_argument("-p", "--nodes", type=int, default=10)
    sim.add_argument("--hubs", type=int, default=3)
    sim.add_argument("--errors", choices=("uniform", "gaussian"), default="uniform")
    sim.add_argument("--graph-output", help="ground-truth graph JSON (default: <output>.graph.json)")

    bench = sub.add_parser("benchmark", parents=[common], help="run a simulation study")
    bench.add_argument("--study", choices=sorted(PRESETS["desk"]), default="low_dim")
    bench.add_argument("--replications", type=_positive_int)
    bench.add_argument("--p-values", type=_node_list, help="comma-separated p grid override")

    orc = sub.add_parser("oracle", parents=[common], help="population quantities for a SEM JSON")
    orc.add_argument("--tau", nargs=2, type=int, metavar=("V", "U"), help="population statistic v.C -> u")
    orc.add_argument("--adjust", type=_node_list, default=(), help="adjustment set C, comma separated")
    orc.add_argument("--gamma", action="store_true", help="also report the smallest parent signal")
    return parser


def _emit(text: str, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text if text.endswith("\n") else text + "\n")
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_discover(args) -> int:
    if not args.input:
        raise InputError("discover needs --input CSV")
    data, _ = read_csv(args.input)
    config = EstimateConfig(J=args.J, K=args.K, alpha=args.alpha, stat=args.stat,
                            standardize=args.standardize, threads=args.threads)
    est = estimate_graph(data, config)
    _emit(est.to_json(), args.output)
    if not args.quiet:
        g = est.diagnostics.get("final_g", 0.0)
        print(f"p={data.p} n={data.n} steps={len(est.ordering)} final_g={g:.6g} edges={len(est.edges)}",
              file=sys.stderr if not args.output else sys.stdout)
    return EXIT_OK


def _load_sem(path) -> Sem:
    return Sem.from_dict(read_json(path))


def cmd_simulate(args) -> int:
    if args.input:
        sem = _load_sem(args.input)
    else:
        if args.generator == "hub":
            wdag = hub_dag(args.nodes, args.hubs, args.seed)
        else:
            wdag = random_dag(args.nodes, args.J, args.seed)
        laws = ErrorSpec.scaled_uniform(args.nodes, args.seed + 1)
        if args.errors == "gaussian":
            laws = ErrorSpec.gaussian(laws.variances)
        sem = Sem(wdag, laws)
    if sem.errors.max_order >= args.K and sem.errors.all_gaussian(args.K):
        log.warning("all error terms are Gaussian up to order %d: the statistic vanishes and the "
                    "causal ordering is not identifiable from this data", args.K)
    data = simulate(sem, args.samples, args.seed)
    out = args.output or "data.csv"
    write_csv(data, out)
    graph_out = args.graph_output or os.path.splitext(out)[0] + ".graph.json"
    write_json(sem.to_dict(), graph_out)
    if not args.quiet:
        print(f"wrote {out} ({data.n} x {data.p}) and {graph_out}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.preset not in PRESETS:
        raise InputError(f"unknown preset {args.preset!r}; choose from {sorted(PRESETS)}")
    config = replace(PRESETS[args.preset][args.study], seed=args.seed)
    if args.replications:
        config = replace(config, replications=args.replications)
    if args.p_values:
        config = replace(config, p_values=args.p_values)
    workers = args.threads or 1
    if args.study == "timing":
        result = run_timing(config)
    elif args.study.startswith("high_dim"):
        result = run_high_dim(config, workers)
    else:
        result = run_low_dim(config, workers)
    csv_path, json_path = result.write(args.output or "results")
    failed = [r for r in result.records if r.get("error")]
    for r in failed:
        log.warning("replicate p=%s n=%s rep=%s failed: %s", r["p"], r["n"], r["rep"], r["error"])
    if not args.quiet:
        for c in result.summary()["cells"]:
            line = f"p={c['p']} n={c['n']} stat={c['stat']} median_kendall={c.get('kendall_median', float('nan')):.3f}"
            if "mean_seconds" in c:
                line += f" mean_seconds={c['mean_seconds']:.4f}"
            print(line)
        print(f"wrote {csv_path} and {json_path}")
    return EXIT_NUMERIC if failed and len(failed) == len(result.records) else EXIT_OK


def cmd_oracle(args) -> int:
    if not args.input:
        raise InputError("oracle needs --input SEM JSON")
    sem = _load_sem(args.input)
    oracle = PopulationOracle(sem)
    ok, witness = is_parentally_faithful(oracle, args.J)
    report = {
        "p": sem.p,
        "lambda_min": oracle.lambda_min,
        "parentally_faithful": ok,
        "witness": None if ok else {"u": witness[0], "v": witness[1], "C": list(witness[2])},
        "violations": [[u, v, list(C)] for u, v, C in faithfulness_violations(oracle, args.J)],
    }
    if args.tau:
        v, u = args.tau
        report["tau"] = {"v": v, "u": u, "C": list(args.adjust), "K": args.K,
                         "value": population_tau(oracle, v, u, args.adjust, args.K)}
    if args.gamma:
        report["gamma"] = oracle_gamma(oracle, args.J, args.K)
    _emit(json.dumps(report, indent=2), args.output)
    return EXIT_OK


COMMANDS = {"discover": cmd_discover, "simulate": cmd_simulate, "benchmark": cmd_benchmark, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.ERROR if args.quiet else logging.WARNING,
                        format="%(name)s: %(levelname)s: %(message)s")
    if args.threads is None:
        args.threads = _default_threads()
    try:
        return COMMANDS[args.command](args)
    except NumericalError as exc:
        where = {k: getattr(exc, k) for k in ("step", "v", "C") if getattr(exc, k) is not None}
        print(f"hdlingam: numerical failure {where}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (InputError, StructureError, HDLingamError) as exc:
        print(f"hdlingam: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
