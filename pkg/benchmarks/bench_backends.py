"""Compare the compiled kernels with the numpy fallback.

Times one Dual Link iteration and each kernel on random networks of the
default experiment geometry (and a few larger sizes), then checks that
both backends return the same iterates.

    python benchmarks/bench_backends.py --links 10 20 40 --repeat 5
"""

import argparse
import json
import sys
import time

import numpy as np

from duallink.dual_link import SolverConfig, solve
from duallink.harness import ExperimentConfig, generate_network
from duallink.kernels import available_backends, get_backend


def best_time(fn, repeat, number):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def bench_size(links, tx, rx, repeat, iters):
    spec = generate_network(ExperimentConfig(links=links, tx=tx, rx=rx), 0, 0.0)
    G, Hd = spec.stacked
    S = np.stack([np.eye(tx, dtype=complex) * spec.total_power / (links * tx)] * links)
    row = {"links": links, "tx": tx, "rx": rx}
    traces = {}
    for name in available_backends():
        b = get_backend(name)
        om = b.interference_cov(G, S, spec.active)
        lam, _ = b.dual_map(Hd, S, om, spec.weights)
        cfg = SolverConfig(tol=1e-300, max_iters=iters, record_trace=True)
        row[name] = {
            "iteration_us": 1e6 * best_time(lambda: solve(spec, cfg, backend=b), repeat, 1) / iters,
            "interference_cov_us": 1e6 * best_time(
                lambda: b.interference_cov(G, S, spec.active), repeat, 50),
            "dual_map_us": 1e6 * best_time(lambda: b.dual_map(Hd, S, om, spec.weights), repeat, 50),
            "normalize_us": 1e6 * best_time(
                lambda: b.normalize_psd(lam, spec.total_power, 1e-8), repeat, 50),
        }
        traces[name] = solve(spec, cfg, backend=b).trace.values()
    names = list(traces)
    row["max_rel_trace_diff"] = float(max(
        (np.max(np.abs(traces[n] - traces[names[0]]) / np.abs(traces[names[0]])) for n in names[1:]),
        default=0.0))
    if len(names) > 1:
        row["speedup"] = row[names[1]]["iteration_us"] / row[names[0]]["iteration_us"]
    return row


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    p.add_argument("--links", type=int, nargs="+", default=[10, 20, 40])
    p.add_argument("--tx", type=int, default=3)
    p.add_argument("--rx", type=int, default=4)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--iters", type=int, default=50)
    p.add_argument("--json", action="store_true", help="print raw JSON")
    args = p.parse_args(argv)

    rows = [bench_size(L, args.tx, args.rx, args.repeat, args.iters) for L in args.links]
    if args.json:
        json.dump(rows, sys.stdout, indent=1)
        print()
        return 0
    names = available_backends()
    print(f"backends: {', '.join(names)}")
    head = f"{'L':>4} {'N':>5}" + "".join(f" {n + ' us/iter':>16}" for n in names)
    head += f" {'speedup':>8} {'trace diff':>11}"
    print(head)
    for r in rows:
        line = f"{r['links']:>4} {r['tx']}x{r['rx']:<3}"
        line += "".join(f" {r[n]['iteration_us']:>16.1f}" for n in names)
        line += f" {r.get('speedup', 1.0):>8.2f} {r['max_rel_trace_diff']:>11.1e}"
        print(line)
    return 0


if __name__ == "__main__":
    sys.exit(main())
