"""Dual Link algorithm for weighted sum-rate maximization.

Each iteration maps the forward covariances to reverse covariances and back
with the dual transformation

    Sigma_hat_l = P_T w_l (Omega_l^{-1} - (Omega_l + H_ll Sigma_l H_ll^H)^{-1}) / norm,

normalized so both covariance sets use the full power budget. The forward
weighted sum-rate is nondecreasing from one iteration to the next.
"""

import csv
import io
import time
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from . import kernels
from .hermitian import NotPositiveDefiniteError, herm
from .network import FORWARD, REVERSE, CovarianceSet, NetworkSpec
from .rng import INIT, complex_gaussian, stream

__all__ = [
    "SolverConfig",
    "IterationTrace",
    "SolveResult",
    "SolverError",
    "init_covariances",
    "forward_to_reverse",
    "reverse_to_forward",
    "solve",
    "residual",
]

INIT_MODES = ("scaled_identity", "random")
TRACE_HEADER = ["iteration", "forward_wsr", "reverse_wsr", "kkt_residual", "elapsed_us"]
# eigenvalue floor (relative to P_T) below which an iterate is a kernel bug
PSD_FAIL_RTOL = 1e-8


class SolverError(RuntimeError):
    """Numerical failure inside an iterative solver."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


@dataclass
class SolverConfig:
    """Stopping rule and starting point for the iterative solvers.

    ``tol`` bounds ``|R - R'|`` between consecutive forward weighted
    sum-rates (nats). ``init`` is ``"scaled_identity"`` or ``"random"``;
    the random start is drawn from ``seed``.
    """

    tol: float = 1e-8
    max_iters: int = 500
    init: str = "scaled_identity"
    seed: int = 0
    record_trace: bool = True

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if int(self.max_iters) < 1:
            raise ValueError("max_iters must be at least 1")
        if self.init not in INIT_MODES:
            raise ValueError(f"init must be one of {INIT_MODES}")
        self.max_iters = int(self.max_iters)


@dataclass
class IterationTrace:
    """Per-iteration history. Row ``n`` describes the state after iteration ``n + 1``."""

    initial_wsr: float
    forward_wsr: List[float] = field(default_factory=list)
    reverse_wsr: List[float] = field(default_factory=list)
    kkt_residual: List[float] = field(default_factory=list)
    elapsed: List[float] = field(default_factory=list)

    def __len__(self):
        return len(self.forward_wsr)

    def append(self, forward, reverse, kkt, elapsed):
        self.forward_wsr.append(float(forward))
        self.reverse_wsr.append(float(reverse))
        self.kkt_residual.append(float(kkt))
        self.elapsed.append(float(elapsed))

    def values(self, include_initial=True):
        """Forward weighted sum-rates, optionally prefixed by the initial value."""
        vals = list(self.forward_wsr)
        return np.array([self.initial_wsr] + vals if include_initial else vals)

    def rows(self, scale=1.0):
        for n in range(len(self)):
            yield [n + 1, self.forward_wsr[n] * scale, self.reverse_wsr[n] * scale,
                   self.kkt_residual[n], int(round(self.elapsed[n] * 1e6))]

    def to_csv(self, dest=None, scale=1.0):
        """Write the trace CSV to a path or file object; return text if ``dest`` is None."""
        buf = io.StringIO() if dest is None else None
        fh = buf if dest is None else (open(dest, "w", newline="")
                                       if isinstance(dest, str) else dest)
        try:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(TRACE_HEADER)
            for row in self.rows(scale):
                writer.writerow([row[0]] + [repr(float(x)) for x in row[1:4]] + [row[4]])
        finally:
            if isinstance(dest, str):
                fh.close()
        return buf.getvalue() if buf is not None else None


@dataclass
class SolveResult:
    sigma: CovarianceSet
    sigma_hat: CovarianceSet
    wsr: float
    iterations: int
    converged: bool
    trace: Optional[IterationTrace] = None
    algorithm: str = "dual_link"
    info: dict = field(default_factory=dict)

    def to_dict(self, scale=1.0):
        return {
            "algorithm": self.algorithm,
            "wsr": self.wsr * scale,
            "iterations": self.iterations,
            "converged": self.converged,
            "sigma": self.sigma.to_dict(),
            "sigma_hat": self.sigma_hat.to_dict(),
            "info": self.info,
        }


# -- padded-array steps -------------------------------------------------------

def _normalize(lam, total_power, iteration=None, backend=None):
    """Scale to total trace ``total_power``; fail on degenerate or indefinite output."""
    backend = backend or kernels.get_backend()
    S, bad = backend.normalize_psd(lam, total_power, PSD_FAIL_RTOL)
    if bad == -2:
        raise SolverError("dual transformation is degenerate (no link carries power)",
                          iteration)
    if bad >= 0:
        raise SolverError(f"covariance {bad} lost positive semidefiniteness", iteration)
    return S


def _forward_map(spec, S, backend):
    G, Hd = spec.stacked
    om = backend.interference_cov(G, S, spec.active)
    lam, rates = backend.dual_map(Hd, S, om, spec.weights)
    return lam, rates


def _reverse_map(spec, S_hat, backend):
    G, Hd = spec.stacked_reverse
    om = backend.interference_cov(G, S_hat, spec.active.T)
    lam, rates = backend.dual_map(Hd, S_hat, om, spec.weights)
    return lam, rates


def _pad(spec, sigma, direction):
    if sigma.direction != direction:
        raise ValueError(f"expected {direction} covariances, got {sigma.direction}")
    dims = spec.dims(direction)
    if len(sigma) != spec.L or any(sigma[l].shape != (d, d) for l, d in enumerate(dims)):
        raise ValueError("covariance shapes do not match the network")
    dim = spec.max_tx if direction == FORWARD else spec.max_rx
    return sigma.padded(dim)


# -- public operations ---------------------------------------------------------

def init_covariances(spec: NetworkSpec, config: SolverConfig = None) -> CovarianceSet:
    """Starting covariances with total trace ``P_T``."""
    config = config or SolverConfig()
    if config.init == "scaled_identity":
        c = spec.total_power / sum(spec.tx_antennas)
        mats = [c * np.eye(t, dtype=complex) for t in spec.tx_antennas]
    else:
        rng = stream(config.seed, INIT)
        mats = []
        for t in spec.tx_antennas:
            A = complex_gaussian(rng, (t, t))
            mats.append(A @ herm(A))
        total = sum(np.trace(m).real for m in mats)
        mats = [0.5 * (m + herm(m)) * (spec.total_power / total) for m in mats]
    return CovarianceSet(mats, FORWARD)


def forward_to_reverse(spec: NetworkSpec, sigma: CovarianceSet, backend=None) -> CovarianceSet:
    """Reverse covariances from forward ones via the dual transformation."""
    backend = backend or kernels.get_backend()
    S = _pad(spec, sigma, FORWARD)
    try:
        lam, _ = _forward_map(spec, S, backend)
    except NotPositiveDefiniteError as exc:
        raise SolverError(str(exc)) from exc
    return CovarianceSet.from_padded(_normalize(lam, spec.total_power, backend=backend),
                                     spec.rx_antennas, REVERSE)


def reverse_to_forward(spec: NetworkSpec, sigma_hat: CovarianceSet, backend=None) -> CovarianceSet:
    """Forward covariances from reverse ones via the dual transformation."""
    backend = backend or kernels.get_backend()
    S_hat = _pad(spec, sigma_hat, REVERSE)
    try:
        lam, _ = _reverse_map(spec, S_hat, backend)
    except NotPositiveDefiniteError as exc:
        raise SolverError(str(exc)) from exc
    return CovarianceSet.from_padded(_normalize(lam, spec.total_power, backend=backend),
                                     spec.tx_antennas, FORWARD)


def _mismatch(A, B, total_power):
    return float(np.max(np.linalg.norm(A - B, axis=(1, 2)))) / total_power


def residual(spec: NetworkSpec, sigma: CovarianceSet, sigma_hat: CovarianceSet) -> float:
    """Largest per-link Frobenius mismatch of both dual-transformation equations.

    Evaluated at the pair ``(sigma, sigma_hat)`` and scaled by ``P_T`` (the
    common trace of both sets). Zero exactly at a fixed point of the Dual
    Link iteration.
    """
    S = _pad(spec, sigma, FORWARD)
    S_hat = _pad(spec, sigma_hat, REVERSE)
    backend = kernels.get_backend()
    lam, _ = _forward_map(spec, S, backend)
    lam_hat, _ = _reverse_map(spec, S_hat, backend)
    P = spec.total_power
    return max(_mismatch(_normalize(lam, P, backend=backend), S_hat, P),
               _mismatch(_normalize(lam_hat, P, backend=backend), S, P))


def solve(spec: NetworkSpec, config: SolverConfig = None,
          initial: CovarianceSet = None, backend=None) -> SolveResult:
    """Run the Dual Link iteration until ``|R - R'| <= tol`` or ``max_iters``.

    Parameters
    ----------
    spec : NetworkSpec
    config : SolverConfig, optional
    initial : CovarianceSet, optional
        Forward starting point; overrides ``config.init``. It is rescaled to
        use the full power budget.
    backend : optional
        Kernel backend from :func:`duallink.kernels.get_backend`.

    Returns
    -------
    SolveResult
        ``sigma_hat`` is the reverse iterate that produced ``sigma``.
    """
    config = config or SolverConfig()
    backend = backend or kernels.get_backend()
    P = spec.total_power
    if initial is None:
        initial = init_covariances(spec, config)
    S = _pad(spec, initial, FORWARD)
    tr0 = np.trace(S, axis1=1, axis2=2).real.sum()
    if not tr0 > 0:
        raise ValueError("initial covariances carry no power")
    S = S * (P / tr0)

    n = 0
    t0 = time.perf_counter()
    try:
        lam, rates = _forward_map(spec, S, backend)
    except NotPositiveDefiniteError as exc:
        raise SolverError(str(exc), 0) from exc
    R = float(spec.weights @ rates)
    trace = IterationTrace(R) if config.record_trace else None
    converged = False
    S_hat = None
    while n < config.max_iters:
        n += 1
        try:
            S_hat_new = _normalize(lam, P, n, backend)             # step 6
            if trace is not None and S_hat is not None:
                trace.kkt_residual[-1] = _mismatch(S_hat_new, S_hat, P)
            S_hat = S_hat_new
            lam_hat, rates_hat = _reverse_map(spec, S_hat, backend)  # step 7
            R_hat = float(spec.weights @ rates_hat)
            S = _normalize(lam_hat, P, n, backend)                 # step 8
            lam, rates = _forward_map(spec, S, backend)            # step 9 (+ next step 5)
        except NotPositiveDefiniteError as exc:
            raise SolverError(str(exc), n) from exc
        R_new = float(spec.weights @ rates)
        if trace is not None:
            trace.append(R_new, R_hat, np.nan, time.perf_counter() - t0)
        done = abs(R_new - R) <= config.tol
        R = R_new
        if done:
            converged = True
            break
    if trace is not None:
        trace.kkt_residual[-1] = _mismatch(_normalize(lam, P, n, backend), S_hat, P)
    return SolveResult(
        sigma=CovarianceSet.from_padded(S, spec.tx_antennas, FORWARD),
        sigma_hat=CovarianceSet.from_padded(S_hat, spec.rx_antennas, REVERSE),
        wsr=R,
        iterations=n,
        converged=converged,
        trace=trace,
        algorithm="dual_link",
        info={"reverse_wsr": R_hat, "backend": backend.name},
    )
