"""Command line interface.

Subcommands::

    duallink gen    --seed 7 --output net.json
    duallink solve  net.json --algorithm dual_link --output sol.json --trace trace.csv
    duallink diag   net.json --output diag.json
    duallink bench  --realizations 1000 --output report.json
"""

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .dual_link import SolverConfig, SolverError, solve
from .harness import ALGORITHMS, ExperimentConfig, generate_network, run_algorithm, run_table
from .kkt import diagnostics_report
from .whitening import (NoiseModel, PowerWeights, colored_weighted_sum_rate, load_network,
                        recover_solution, to_equivalent, weighted_power)

LN2 = math.log(2.0)


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _read_network(path):
    with open(path) as fh:
        return load_network(json.load(fh))


def _experiment_config(args, **over):
    base = ExperimentConfig.from_file(args.config).to_dict() if args.config else {}
    for key, val in over.items():
        if val is not None:
            base[key] = val
    return ExperimentConfig.from_dict(base)


def cmd_gen(args):
    cfg = _experiment_config(args, master_seed=args.seed, links=args.links, tx=args.tx,
                             rx=args.rx, total_power=args.total_power)
    g = cfg.gain_offdiag_db[0] if args.gain is None else args.gain
    spec = generate_network(cfg, args.index, g)
    _write(spec.to_json(indent=1, sort_keys=True), args.output)
    return 0


def cmd_solve(args):
    spec, noise, pw = _read_network(args.network)
    target = spec
    if noise is not None or pw is not None:
        noise = noise or NoiseModel([np.eye(r) for r in spec.rx_antennas])
        pw = pw or PowerWeights([np.eye(t) for t in spec.tx_antennas])
        target = to_equivalent(spec, noise, pw)
    res = run_algorithm(target, args.algorithm, tol=args.tol, max_iters=args.max_iters,
                        init=args.init, seed=args.seed)
    scale = 1.0 / LN2 if args.bits else 1.0
    out = res.to_dict(scale)
    out["units"] = "bits" if args.bits else "nats"
    if target is not spec:
        sigma = recover_solution(res.sigma, pw)
        out["sigma"] = sigma.to_dict()
        out["colored_wsr"] = colored_weighted_sum_rate(spec, noise, sigma) * scale
        out["weighted_power"] = weighted_power(sigma, pw)
        del out["sigma_hat"]
    _write(json.dumps(out, indent=1), args.output)
    if args.trace:
        res.trace.to_csv(args.trace, scale)
    return 0


def cmd_diag(args):
    spec, noise, pw = _read_network(args.network)
    if noise is not None or pw is not None:
        raise ValueError("diag works on white-noise networks; whiten the file first")
    res = solve(spec, SolverConfig(tol=args.tol, max_iters=args.max_iters,
                                   init=args.init, seed=args.seed))
    rep = diagnostics_report(spec, res, seed=args.seed)
    rep["solve"] = {"wsr": res.wsr, "iterations": res.iterations, "converged": res.converged}
    _write(json.dumps(rep, indent=1, default=float), args.output)
    return 0


def cmd_bench(args):
    algs = tuple(args.algorithm) if args.algorithm else None
    cfg = _experiment_config(args, master_seed=args.seed, realizations=args.realizations,
                             tol=args.tol, max_iters=args.max_iters, algorithms=algs,
                             gain_offdiag_db=args.gain)
    rep = run_table(cfg)
    _write(rep.to_json(indent=1), args.output)
    if args.csv:
        _write(rep.to_csv(), args.csv)
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="duallink",
                                description="Weighted sum-rate maximization for MIMO B-MAC networks.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, tol=None, max_iters=None):
        sp.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        sp.add_argument("--tol", type=float, default=tol,
                        help="stop when the weighted sum-rate changes by at most this (nats)")
        sp.add_argument("--max-iters", type=int, default=max_iters)
        sp.add_argument("--output", "-o", default=None, help="output file (default stdout)")
        sp.add_argument("--bits", action="store_true", help="report rates in bits instead of nats")
        sp.add_argument("--config", default=None, help="JSON experiment config")

    g = sub.add_parser("gen", help="write a random network file")
    common(g)
    g.add_argument("--index", type=int, default=0, help="realization index")
    g.add_argument("--gain", type=float, default=None, help="off-diagonal gain in dB")
    g.add_argument("--links", type=int, default=None)
    g.add_argument("--tx", type=int, default=None)
    g.add_argument("--rx", type=int, default=None)
    g.add_argument("--total-power", type=float, default=None)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one network file")
    s.add_argument("network")
    common(s, tol=1e-8, max_iters=500)
    s.add_argument("--algorithm", choices=ALGORITHMS, default="dual_link")
    s.add_argument("--init", choices=("scaled_identity", "random"), default="scaled_identity")
    s.add_argument("--trace", default=None, help="write the iteration trace CSV here")
    s.set_defaults(func=cmd_solve)

    d = sub.add_parser("diag", help="stationarity, scaling and gradient diagnostics")
    d.add_argument("network")
    common(d, tol=1e-12, max_iters=20000)
    d.add_argument("--init", choices=("scaled_identity", "random"), default="scaled_identity")
    d.set_defaults(func=cmd_diag)

    b = sub.add_parser("bench", help="iteration statistics over random networks")
    common(b)
    b.add_argument("--realizations", type=int, default=None)
    b.add_argument("--algorithm", action="append", choices=ALGORITHMS,
                   help="repeat to select several (default: all)")
    b.add_argument("--gain", type=float, action="append", default=None,
                   help="off-diagonal gain in dB; repeatable")
    b.add_argument("--csv", default=None, help="also write the cell table as CSV")
    b.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, SolverError) as exc:
        print(f"duallink {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
