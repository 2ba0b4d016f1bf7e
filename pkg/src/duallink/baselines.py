"""Reference algorithms sharing the Dual Link result interface.

* ``pwf_solve``: iterative polite water-filling. Each half-iteration
  water-fills the whitened channel ``Omega^{-1/2} H Omega_hat^{-1/2}`` of
  every link with one global water level.
* ``wmmse_solve``: weighted MMSE block-coordinate ascent (receive filters,
  MSE weights, transmit filters). The update rules follow the standard
  WMMSE algorithm for interfering broadcast channels.
* ``mac_capacity_oracle``: sum capacity of a multiple-access channel by
  projected gradient ascent, certified by a duality gap.
"""

import time
from dataclasses import dataclass

import numpy as np

from . import kernels
from .dual_link import (IterationTrace, SolveResult, SolverConfig, SolverError,
                        forward_to_reverse, init_covariances, _normalize, _pad)
from .hermitian import herm, water_fill
from .network import FORWARD, REVERSE, CovarianceSet, NetworkSpec

__all__ = ["BaselineConfig", "pwf_solve", "wmmse_solve", "mac_capacity_oracle",
           "is_mac", "OracleResult"]

ALGORITHMS = ("pwf", "wmmse")
# reverse half-step of PWF: dual transformation of the new forward point,
# or a mirrored reverse polite water-filling
PWF_REVERSE = ("dual", "water_fill")
# PWF starting reverse interference: identity, or dual to the initial point
PWF_START = ("identity", "dual")


@dataclass
class BaselineConfig(SolverConfig):
    """:class:`SolverConfig` plus the algorithm name and PWF oscillation window."""

    algorithm: str = "pwf"
    oscillation_window: int = 20
    pwf_reverse: str = "dual"
    pwf_start: str = "identity"

    def __post_init__(self):
        super().__post_init__()
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}")
        if int(self.oscillation_window) < 2:
            raise ValueError("oscillation_window must be at least 2")
        self.oscillation_window = int(self.oscillation_window)
        if self.pwf_reverse not in PWF_REVERSE:
            raise ValueError(f"pwf_reverse must be one of {PWF_REVERSE}")
        if self.pwf_start not in PWF_START:
            raise ValueError(f"pwf_start must be one of {PWF_START}")


def _eigh_pd(A, what):
    evals, evecs = np.linalg.eigh(A)
    if not np.all(evals > 0):
        raise SolverError(f"{what} is not positive definite")
    return evals, evecs


def _pow(evals, evecs, p):
    return (evecs * (evals ** p)[..., None, :]) @ herm(evecs)


def _start(spec, config, initial):
    P = spec.total_power
    if initial is None:
        initial = init_covariances(spec, config)
    S = _pad(spec, initial, FORWARD)
    tr0 = np.trace(S, axis1=1, axis2=2).real.sum()
    if not tr0 > 0:
        raise ValueError("initial covariances carry no power")
    return S * (P / tr0)


def _wsr(spec, S, backend, reverse=False):
    G, Hd = spec.stacked_reverse if reverse else spec.stacked
    act = spec.active.T if reverse else spec.active
    om = backend.interference_cov(G, S, act)
    lam, rates = backend.dual_map(Hd, S, om, spec.weights)
    return float(spec.weights @ rates), om


# -- polite water-filling ------------------------------------------------------------

def _polite_fill(spec, Hd, om, om_other, P):
    """One polite water-filling half-step.

    ``om`` is the receiver-side interference covariance and ``om_other``
    the transmitter-side one of the same (forward or reverse) network.
    Returns the new transmit covariances.
    """
    ev, U = _eigh_pd(om, "interference covariance")
    evo, Uo = _eigh_pd(om_other, "dual interference covariance")
    om_isqrt = _pow(ev, U, -0.5)
    oth_isqrt = _pow(evo, Uo, -0.5)
    oth_inv = _pow(evo, Uo, -1.0)
    Hbar = om_isqrt @ Hd @ oth_isqrt
    _, s, Vh = np.linalg.svd(Hbar)
    Gv = herm(Vh)[..., :s.shape[-1]]                  # right singular vectors
    gains = s ** 2
    costs = np.einsum("lti,ltu,lui->li", Gv.conj(), oth_inv, Gv).real
    weights = np.broadcast_to(spec.weights[:, None], gains.shape)
    # zero gains never receive power; give them a benign cost
    costs = np.where(gains > 0, np.maximum(costs, 1e-300), 1.0)
    try:
        p = water_fill(gains, weights, P, costs)
    except ValueError as exc:
        raise SolverError(f"water-filling failed: {exc}") from exc
    Q = (Gv * p[:, None, :]) @ herm(Gv)
    S = oth_isqrt @ Q @ oth_isqrt
    return 0.5 * (S + herm(S))


def pwf_solve(spec: NetworkSpec, config: BaselineConfig = None,
              initial: CovarianceSet = None, backend=None) -> SolveResult:
    """Iterative polite water-filling.

    The reverse interference covariances start at ``Omega_hat = I``; the
    forward ones come from the initial covariances, so the starting
    weighted sum-rate matches the other solvers. One iteration is a
    forward water-filling followed by a reverse one. ``converged`` is set
    only when ``|R - R'| <= tol``; ``info["oscillating"]`` reports whether
    the last ``oscillation_window`` forward rates spread by more than
    ``tol``.
    """
    config = config or BaselineConfig(algorithm="pwf")
    backend = backend or kernels.get_backend()
    P = spec.total_power
    S = _start(spec, config, initial)
    G, Hd = spec.stacked
    Gr, Hdr = spec.stacked_reverse
    act, act_r = spec.active, spec.active.T
    L, R = spec.L, spec.max_rx

    t0 = time.perf_counter()
    R_cur, om = _wsr(spec, S, backend)
    if config.pwf_start == "identity":
        om_hat = np.broadcast_to(np.eye(spec.max_tx, dtype=complex),
                                 (L,) + (spec.max_tx,) * 2).copy()
        S_hat = np.zeros((L, R, R), dtype=complex)
    else:
        lam, _ = backend.dual_map(Hd, S, om, spec.weights)
        S_hat = _normalize(lam, P, 0, backend)
        om_hat = backend.interference_cov(Gr, S_hat, act_r)
    trace = IterationTrace(R_cur) if config.record_trace else None
    history = [R_cur]
    converged = False
    R_hat = np.nan
    n = 0
    try:
        while n < config.max_iters:
            n += 1
            S = _polite_fill(spec, Hd, om, om_hat, P)               # forward
            om = backend.interference_cov(G, S, act)
            if config.pwf_reverse == "dual":                        # reverse
                lam, _ = backend.dual_map(Hd, S, om, spec.weights)
                S_hat = _normalize(lam, P, n, backend)
            else:
                S_hat = _polite_fill(spec, Hdr, om_hat, om, P)
            om_hat = backend.interference_cov(Gr, S_hat, act_r)
            _, rates_hat = backend.dual_map(Hdr, S_hat, om_hat, spec.weights)
            R_hat = float(spec.weights @ rates_hat)
            _, rates = backend.dual_map(Hd, S, om, spec.weights)
            R_new = float(spec.weights @ rates)
            if trace is not None:
                trace.append(R_new, R_hat, np.nan, time.perf_counter() - t0)
            history.append(R_new)
            done = abs(R_new - R_cur) <= config.tol
            R_cur = R_new
            if done:
                converged = True
                break
    except np.linalg.LinAlgError as exc:
        raise SolverError(str(exc), n) from exc
    window = np.array(history[-config.oscillation_window:])
    oscillating = (not converged) and bool(window.max() - window.min() > config.tol)
    return SolveResult(
        sigma=CovarianceSet.from_padded(S, spec.tx_antennas, FORWARD),
        sigma_hat=CovarianceSet.from_padded(S_hat, spec.rx_antennas, REVERSE),
        wsr=R_cur, iterations=n, converged=converged, trace=trace, algorithm="pwf",
        info={"reverse_wsr": R_hat, "oscillating": oscillating, "backend": backend.name},
    )


# -- WMMSE ----------------------------------------------------------------------------

def _power_multiplier(A, B, P, iters=200):
    """Smallest ``mu >= 0`` with ``sum_l ||(A_l + mu I)^{-1} B_l||_F^2 <= P``.

    Returns ``(mu, evals, evecs)`` of the eigen-decomposed ``A``.
    """
    lam, Q = np.linalg.eigh(A)
    lam = np.maximum(lam, 0.0)
    num = np.sum(np.abs(herm(Q) @ B) ** 2, axis=-1)      # (L, T)
    live = num > 1e-300 * max(num.max(), 1e-300)

    def power(mu):
        with np.errstate(divide="ignore"):
            return float(np.sum(np.where(live, num / (lam + mu) ** 2, 0.0)))

    if not np.any(live):
        raise SolverError("transmit filters vanished")
    if np.all(lam[live] > 0) and power(0.0) <= P:
        return 0.0, lam, Q
    lo, hi = 0.0, np.sqrt(num.sum() / P)
    if not (np.isfinite(hi) and hi > 0):
        raise SolverError("power multiplier bracket is degenerate")
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if power(mid) > P:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    if not power(hi) <= P * (1 + 1e-9):
        raise SolverError("power multiplier bisection failed")
    return hi, lam, Q


def wmmse_solve(spec: NetworkSpec, config: BaselineConfig = None,
                initial: CovarianceSet = None, backend=None) -> SolveResult:
    """Weighted MMSE algorithm with a sum power constraint.

    Transmit filters start at ``V_l = Sigma_l^{1/2}`` of the initial
    covariances (full-rank, one stream per transmit antenna). Each
    iteration updates MMSE receivers ``U``, weights ``W = E^{-1}`` and
    transmit filters ``V = (A + mu I)^{-1} B`` with ``mu >= 0`` found by
    bisection. The forward weighted sum-rate is nondecreasing.
    """
    config = config or BaselineConfig(algorithm="wmmse")
    backend = backend or kernels.get_backend()
    P = spec.total_power
    S = _start(spec, config, initial)
    G, Hd = spec.stacked
    Gr, Hdr = spec.stacked_reverse
    act, act_r = spec.active, spec.active.T
    T = spec.max_tx
    w = spec.weights
    eyeT = np.eye(T)

    ev, U0 = np.linalg.eigh(S)
    V = _pow(np.maximum(ev, 0.0), U0, 0.5)

    t0 = time.perf_counter()
    R_cur, om = _wsr(spec, S, backend)
    trace = IterationTrace(R_cur) if config.record_trace else None
    converged = False
    n = 0
    try:
        while n < config.max_iters:
            n += 1
            HV = Hd @ V
            J = om + HV @ herm(HV)
            U = np.linalg.solve(J, HV)
            E = eyeT - herm(U) @ HV
            W = np.linalg.inv(0.5 * (E + herm(E)))
            W = 0.5 * (W + herm(W))
            X = w[:, None, None] * (U @ W @ herm(U))
            X = 0.5 * (X + herm(X))
            A = backend.interference_cov(Gr, X, act_r) - eyeT + Hdr @ X @ Hd
            A = 0.5 * (A + herm(A))
            B = w[:, None, None] * (Hdr @ U @ W)
            mu, lam, Q = _power_multiplier(A, B, P)
            V = Q @ ((herm(Q) @ B) / (lam + mu)[..., None])
            S = V @ herm(V)
            S = 0.5 * (S + herm(S))
            om = backend.interference_cov(G, S, act)
            _, rates = backend.dual_map(Hd, S, om, w)
            R_new = float(w @ rates)
            if trace is not None:
                trace.append(R_new, np.nan, np.nan, time.perf_counter() - t0)
            done = abs(R_new - R_cur) <= config.tol
            R_cur = R_new
            if done:
                converged = True
                break
    except np.linalg.LinAlgError as exc:
        raise SolverError(str(exc), n) from exc
    sigma = CovarianceSet.from_padded(S, spec.tx_antennas, FORWARD)
    return SolveResult(
        sigma=sigma, sigma_hat=forward_to_reverse(spec, sigma, backend),
        wsr=R_cur, iterations=n, converged=converged, trace=trace, algorithm="wmmse",
        info={"backend": backend.name, "power_multiplier": mu},
    )


# -- MAC sum-capacity oracle -------------------------------------------------------

@dataclass
class OracleResult:
    capacity: float
    sigma: CovarianceSet
    gap: float
    iterations: int


def is_mac(spec: NetworkSpec, atol=0.0):
    """True if every link shares one receiver and cancellation is a decoding order.

    All rows of the channel table must coincide (``H_{l,k} = G_k`` for
    every receiver index ``l``), weights must be equal, and the cancel
    mask must be either empty or a strict total order (successive
    decoding). Under these conditions the weighted sum-rate equals
    ``w log|I + sum_k G_k S_k G_k^H|`` exactly when the mask is an order.
    """
    L = spec.L
    for l in range(1, L):
        for k in range(L):
            if not np.allclose(spec.H(l, k), spec.H(0, k), rtol=0, atol=atol):
                return False
    if not np.allclose(spec.weights, spec.weights[0], rtol=1e-12, atol=0):
        return False
    return _is_decoding_order(spec.cancel_mask)


def _is_decoding_order(mask):
    m = np.asarray(mask, dtype=bool)
    if not m.any():
        return True
    L = m.shape[0]
    # strict total order: link l cancels exactly the links decoded before it
    counts = m.sum(axis=1)
    if sorted(counts) != list(range(L)):
        return False
    order = np.argsort(counts)
    pos = np.empty(L, dtype=int)
    pos[order] = np.arange(L)
    return bool(np.array_equal(m, pos[None, :] < pos[:, None]))


def _simplex_projection(v, total):
    """Euclidean projection of ``v`` onto ``{x >= 0, sum x = total}``."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - total
    k = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / k > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


def _project(S, total):
    ev, U = np.linalg.eigh(0.5 * (S + herm(S)))
    p = _simplex_projection(ev.ravel(), total).reshape(ev.shape)
    return (U * p[..., None, :]) @ herm(U)


def mac_capacity_oracle(spec: NetworkSpec, tol=1e-10, max_iters=200000, return_info=False):
    """Sum capacity ``max log|I + sum_k G_k S_k G_k^H|`` s.t. ``sum tr S_k <= P_T``.

    Projected gradient ascent with Armijo backtracking. The concave
    objective's Frank-Wolfe gap ``P_T max_k lambda_max(grad_k) -
    sum_k tr(S_k grad_k)`` bounds the distance to the optimum and is used
    as the stopping certificate.

    Returns the capacity in nats (scaled by the common weight, so it is
    directly comparable with a weighted sum-rate), or an
    :class:`OracleResult` when ``return_info`` is set.

    Raises
    ------
    ValueError
        If ``spec`` is not a multiple-access channel.
    """
    if not is_mac(spec):
        raise ValueError("network is not a multiple-access channel")
    P = spec.total_power
    L, T, R = spec.L, spec.max_tx, spec.rx_antennas[0]
    Gk = np.zeros((L, R, T), dtype=complex)
    for k in range(L):
        h = spec.H(0, k)
        Gk[k, :, :h.shape[1]] = h
    GkH = herm(Gk)
    eyeR = np.eye(R)

    def objective(S):
        A = eyeR + np.einsum("krt,kts,kqs->rq", Gk, S, Gk.conj())
        sign, ld = np.linalg.slogdet(A)
        return ld, A

    # feasible start; padded antennas have zero gain so they never get power
    mask = np.zeros((L, T))
    for k in range(L):
        mask[k, :spec.tx_antennas[k]] = 1.0
    S = np.einsum("kt,ts->kts", mask * P / mask.sum(), np.eye(T)).astype(complex)
    f, A = objective(S)
    step = 1.0
    gap = np.inf
    it = 0
    for it in range(1, max_iters + 1):
        Ainv = np.linalg.inv(A)
        grad = GkH @ Ainv @ Gk
        grad = 0.5 * (grad + herm(grad))
        lmax = np.linalg.eigvalsh(grad)[:, -1].max()
        gap = P * lmax - np.einsum("kts,kst->", S, grad).real
        if gap <= tol * max(1.0, abs(f)):
            break
        step = min(step * 2.0, 1e6)
        while True:
            S_new = _project(S + step * grad, P)
            f_new, A_new = objective(S_new)
            d = S_new - S
            # Armijo condition along the projection arc
            if f_new >= f + 1e-4 * np.einsum("kts,kst->", d, grad).real or step < 1e-14:
                break
            step *= 0.5
        if step < 1e-14:
            break
        S, f, A = S_new, f_new, A_new
    cap = float(spec.weights[0] * f)
    if not return_info:
        return cap
    sigma = CovarianceSet.from_padded(S, spec.tx_antennas, FORWARD)
    return OracleResult(cap, sigma, float(gap * spec.weights[0]), it)
