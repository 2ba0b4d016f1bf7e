"""Monte-Carlo experiments: random networks, convergence traces, iteration tables.

Realization ``i`` draws its white channels, weights and starting point
from independent counter-based streams keyed by ``(master_seed, i)``, so
results do not depend on execution order or worker count. Set
``DUALLINK_THREADS`` to run realizations in that many worker processes.
"""

import csv
import io
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence, Tuple

import numpy as np

from .baselines import PWF_START, BaselineConfig, pwf_solve, wmmse_solve
from .dual_link import SolverConfig, SolverError, solve
from .hermitian import herm
from .network import FORWARD, CovarianceSet, NetworkSpec, db_to_gain
from .rng import CHANNELS, INIT, RNG_NAME, RNG_VERSION, WEIGHTS, complex_gaussian, stream

__all__ = [
    "ExperimentConfig",
    "BenchReport",
    "ALGORITHMS",
    "generate_network",
    "initial_point",
    "run_algorithm",
    "run_convergence",
    "run_table",
    "best_of",
    "threshold_index",
    "worker_count",
]

ALGORITHMS = ("dual_link", "pwf", "wmmse")
THREADS_ENV = "DUALLINK_THREADS"
REFERENCE_NOTE = ("local optimum = the value each algorithm reaches from the shared random "
                  "start when it meets tol or hits max_iters; iteration 0 is the start")


@dataclass
class ExperimentConfig:
    """Geometry, channel statistics and solver settings of an experiment.

    ``tol`` and ``max_iters`` apply to every algorithm; ``init`` selects the
    shared starting point (``"random"`` or ``"scaled_identity"``).
    """

    links: int = 10
    tx: int = 3
    rx: int = 4
    gain_diag_db: float = 0.0
    gain_offdiag_db: Tuple[float, ...] = (-10.0, 0.0, 10.0)
    total_power: float = 100.0
    realizations: int = 1000
    thresholds: Tuple[float, ...] = (0.9, 0.95)
    master_seed: int = 0
    algorithms: Tuple[str, ...] = ALGORITHMS
    tol: float = 1e-2
    max_iters: int = 500
    init: str = "random"
    pwf_start: str = "dual"
    weight_range: Tuple[float, float] = (0.5, 1.0)

    def __post_init__(self):
        self.gain_offdiag_db = tuple(float(g) for g in np.atleast_1d(self.gain_offdiag_db))
        self.thresholds = tuple(float(t) for t in self.thresholds)
        self.algorithms = tuple(self.algorithms)
        self.weight_range = tuple(float(x) for x in self.weight_range)
        if int(self.realizations) < 1:
            raise ValueError("realizations must be at least 1")
        self.realizations = int(self.realizations)
        if any(not 0 < t < 1 for t in self.thresholds):
            raise ValueError("thresholds must lie in (0, 1)")
        bad = set(self.algorithms) - set(ALGORITHMS)
        if bad or not self.algorithms:
            raise ValueError(f"unknown algorithms {sorted(bad)}; choose from {ALGORITHMS}")
        if min(self.links, self.tx, self.rx) < 1:
            raise ValueError("links and antenna counts must be positive")
        if not self.total_power > 0:
            raise ValueError("total_power must be positive")
        if self.init not in ("random", "scaled_identity"):
            raise ValueError("init must be 'random' or 'scaled_identity'")
        if self.pwf_start not in PWF_START:
            raise ValueError(f"pwf_start must be one of {PWF_START}")
        lo, hi = self.weight_range
        if not 0 < lo <= hi:
            raise ValueError("weight_range must satisfy 0 < low <= high")

    def to_dict(self):
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        extra = set(d) - known
        if extra:
            raise ValueError(f"unknown config keys: {sorted(extra)}")
        return cls(**d)

    @classmethod
    def from_file(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def worker_count():
    """Worker processes requested through ``DUALLINK_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV, "1").strip() or "1"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    return max(1, n)


# -- networks -------------------------------------------------------------------

def generate_network(cfg: ExperimentConfig, index: int, gain_offdiag_db=None) -> NetworkSpec:
    """Random network ``index`` with ``H_lk = sqrt(g_lk) H_white_lk``.

    The white channels and weights depend only on ``(master_seed, index)``,
    so the same draws are reused across off-diagonal gain settings.
    """
    g_off = cfg.gain_offdiag_db[0] if gain_offdiag_db is None else gain_offdiag_db
    L = cfg.links
    Hw = complex_gaussian(stream(cfg.master_seed, index, CHANNELS), (L, L, cfg.rx, cfg.tx))
    amp = np.full((L, L), np.sqrt(db_to_gain(g_off)))
    np.fill_diagonal(amp, np.sqrt(db_to_gain(cfg.gain_diag_db)))
    w = stream(cfg.master_seed, index, WEIGHTS).uniform(*cfg.weight_range, size=L)
    return NetworkSpec.from_stacked(Hw * amp[:, :, None, None], w, cfg.total_power)


def initial_point(spec: NetworkSpec, master_seed: int, index: int, init="random") -> CovarianceSet:
    """Shared starting covariances for realization ``index``, total trace ``P_T``."""
    if init == "scaled_identity":
        c = spec.total_power / sum(spec.tx_antennas)
        return CovarianceSet([c * np.eye(t, dtype=complex) for t in spec.tx_antennas], FORWARD)
    rng = stream(master_seed, index, INIT)
    mats = []
    for t in spec.tx_antennas:
        A = complex_gaussian(rng, (t, t))
        mats.append(A @ herm(A))
    total = sum(np.trace(m).real for m in mats)
    return CovarianceSet([0.5 * (m + herm(m)) * (spec.total_power / total) for m in mats], FORWARD)


def run_algorithm(spec, algorithm, tol=1e-8, max_iters=500, initial=None, init="scaled_identity",
                  seed=0, record_trace=True, oscillation_window=20, pwf_start="identity"):
    """Dispatch to one solver by name.

    ``pwf_start="dual"`` starts PWF from the reverse covariances dual to
    ``initial`` instead of ``Omega_hat = I``, so all algorithms share the
    same starting point.
    """
    if algorithm == "dual_link":
        cfg = SolverConfig(tol=tol, max_iters=max_iters, init=init, seed=seed,
                           record_trace=record_trace)
        return solve(spec, cfg, initial=initial)
    if algorithm in ("pwf", "wmmse"):
        cfg = BaselineConfig(tol=tol, max_iters=max_iters, init=init, seed=seed,
                             record_trace=record_trace, algorithm=algorithm,
                             oscillation_window=oscillation_window, pwf_start=pwf_start)
        fn = pwf_solve if algorithm == "pwf" else wmmse_solve
        return fn(spec, cfg, initial=initial)
    raise ValueError(f"unknown algorithm {algorithm!r}; choose from {ALGORITHMS}")


def run_convergence(spec: NetworkSpec, algorithms: Sequence[str], config: SolverConfig = None,
                    initial: CovarianceSet = None):
    """Run several algorithms from one starting point.

    Returns a dict mapping algorithm name to ``{"result", "csv", "error"}``.
    Solver failures are captured in ``error`` instead of propagating.
    """
    config = config or SolverConfig()
    if initial is None:
        from .dual_link import init_covariances
        initial = init_covariances(spec, config)
    out = {}
    for alg in algorithms:
        try:
            res = run_algorithm(spec, alg, config.tol, config.max_iters, initial=initial,
                                record_trace=True, pwf_start="dual")
            out[alg] = {"result": res, "csv": res.trace.to_csv(), "error": None}
        except (SolverError, np.linalg.LinAlgError) as exc:
            out[alg] = {"result": None, "csv": None, "error": f"{type(exc).__name__}: {exc}"}
    return out


def best_of(spec: NetworkSpec, algorithm="dual_link", starts=4, master_seed=0, **kw):
    """Multi-start: run from ``starts`` random points and keep the best value."""
    best = None
    for i in range(int(starts)):
        init = initial_point(spec, master_seed, i)
        res = run_algorithm(spec, algorithm, initial=init, **kw)
        if best is None or res.wsr > best.wsr:
            best = res
    return best


def threshold_index(values, reference, threshold):
    """First index whose value reaches ``threshold * reference``."""
    hit = np.nonzero(np.asarray(values) >= threshold * reference)[0]
    return int(hit[0]) if hit.size else None


# -- Table reproduction --------------------------------------------------------------

def _realization(args):
    cfg, g_off, index = args
    spec = generate_network(cfg, index, g_off)
    init = initial_point(spec, cfg.master_seed, index, cfg.init)
    row = {}
    for alg in cfg.algorithms:
        try:
            res = run_algorithm(spec, alg, cfg.tol, cfg.max_iters, initial=init,
                                pwf_start=cfg.pwf_start)
        except (SolverError, np.linalg.LinAlgError) as exc:
            row[alg] = {"error": f"{type(exc).__name__}: {exc}"}
            continue
        vals = res.trace.values(include_initial=True)
        row[alg] = {
            "converged": bool(res.converged),
            "iterations": int(res.iterations),
            "wsr": float(res.wsr),
            "hits": [threshold_index(vals, res.wsr, t) for t in cfg.thresholds],
            "monotone": bool(np.all(np.diff(vals) >= -1e-9 * np.abs(vals[:-1]))),
        }
    return row


@dataclass
class BenchReport:
    """Per ``(algorithm, gain, threshold)`` iteration statistics."""

    config: dict
    cells: list
    errors: list = field(default_factory=list)
    realizations: dict = field(default_factory=dict)

    def cell(self, algorithm, gain_offdiag_db, threshold):
        for c in self.cells:
            if (c["algorithm"] == algorithm and c["gain_offdiag_db"] == float(gain_offdiag_db)
                    and c["threshold"] == float(threshold)):
                return c
        raise KeyError((algorithm, gain_offdiag_db, threshold))

    def convergence_fraction(self, algorithm, gain_offdiag_db):
        c = self.cell(algorithm, gain_offdiag_db, self.config["thresholds"][0])
        return c["n_converged"] / c["n_total"]

    def to_dict(self):
        return {
            "config": self.config,
            "rng": {"name": RNG_NAME, "version": RNG_VERSION},
            "reference": REFERENCE_NOTE,
            "cells": self.cells,
            "errors": self.errors,
        }

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def to_csv(self):
        buf = io.StringIO()
        cols = ["algorithm", "gain_offdiag_db", "threshold", "mean_iters", "std",
                "n_converged", "n_used", "n_total"]
        writer = csv.DictWriter(buf, fieldnames=cols, extrasaction="ignore", lineterminator="\n")
        writer.writeheader()
        for c in self.cells:
            writer.writerow(c)
        return buf.getvalue()


def run_table(cfg: ExperimentConfig, workers=None, keep_realizations=False) -> BenchReport:
    """Average iterations needed to reach each threshold of the local optimum.

    For PWF only converged realizations enter the mean; the other
    algorithms average over every realization that did not fail.
    """
    workers = worker_count() if workers is None else max(1, int(workers))
    cells, errors, per = [], [], {}
    for g in cfg.gain_offdiag_db:
        tasks = [(cfg, g, i) for i in range(cfg.realizations)]
        if workers > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(_realization, tasks, chunksize=max(1, len(tasks) // (4 * workers))))
        else:
            rows = [_realization(t) for t in tasks]
        if keep_realizations:
            per[g] = rows
        for alg in cfg.algorithms:
            ok = [(i, r[alg]) for i, r in enumerate(rows) if "error" not in r[alg]]
            for i, r in enumerate(rows):
                if "error" in r[alg]:
                    errors.append({"algorithm": alg, "gain_offdiag_db": g, "realization": i,
                                   "error": r[alg]["error"]})
            n_conv = sum(r["converged"] for _, r in ok)
            used = [r for _, r in ok if r["converged"]] if alg == "pwf" else [r for _, r in ok]
            for j, t in enumerate(cfg.thresholds):
                hits = np.array([r["hits"][j] for r in used], dtype=float)
                cells.append({
                    "algorithm": alg,
                    "gain_offdiag_db": float(g),
                    "threshold": float(t),
                    "mean_iters": float(hits.mean()) if hits.size else None,
                    "std": float(hits.std(ddof=1)) if hits.size > 1 else None,
                    "n_converged": int(n_conv),
                    "n_used": int(hits.size),
                    "n_total": int(cfg.realizations),
                })
    return BenchReport(cfg.to_dict(), cells, errors, per)
