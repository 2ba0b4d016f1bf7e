"""Lagrangian diagnostics for the weighted sum-rate problem.

The Lagrangian couples the covariances ``Sigma`` with auxiliary
interference matrices ``Omega`` through multipliers ``Lambda`` and a
power price ``mu``::

    F = sum_l w_l (logdet(Omega_l + H_ll S_l H_ll^H) - logdet Omega_l)
        + mu (P_T - sum_l tr S_l)
        + sum_l tr(Lambda_l (Omega_l - I - sum_{k != l} H_lk S_k H_lk^H))

Gradients follow the convention ``dF = Re tr(G^H dX)``; for Hermitian
arguments ``G`` is Hermitian.
"""

from dataclasses import dataclass, field
from typing import List

import numpy as np

from .dual_link import SolveResult
from .hermitian import herm, inv_pd, logdet_pd, symmetrize
from .network import (FORWARD, REVERSE, CovarianceSet, NetworkSpec,
                      forward_interference_cov, reverse_interference_cov)

__all__ = [
    "MultiplierState",
    "lagrangian",
    "grad_sigma",
    "grad_omega",
    "extract_multipliers",
    "check_scaling_invariance",
    "SaddlePointReport",
    "saddle_point_check",
    "gradient_check",
    "diagnostics_report",
]

CONDITIONS = ("reverse_fixed_point", "reverse_stationarity",
              "forward_fixed_point", "forward_stationarity")


@dataclass
class MultiplierState:
    """Multipliers ``Lambda_l`` (one per receiver) and the power price ``mu``."""

    lam: List[np.ndarray]
    mu: float
    degenerate: bool = False

    def scaled(self, alpha):
        return MultiplierState([alpha * x for x in self.lam], alpha * self.mu, self.degenerate)

    def power_mismatch(self, total_power):
        """``|P_T mu - sum tr Lambda_l|`` relative to the larger side."""
        tr = float(sum(np.trace(x).real for x in self.lam))
        lhs = total_power * self.mu
        scale = max(abs(lhs), abs(tr))
        return abs(lhs - tr) / scale if scale > 0 else 0.0


def _omegas(spec, sigma):
    return [forward_interference_cov(spec, sigma, l) for l in range(spec.L)]


def _check_sigma(spec, sigma):
    if sigma.direction != FORWARD or len(sigma) != spec.L:
        raise ValueError("expected one forward covariance per link")


def lagrangian(spec: NetworkSpec, sigma: CovarianceSet, omega, m: MultiplierState) -> float:
    """Evaluate ``F(Sigma, Omega, Lambda, mu)``.

    Raises :class:`~duallink.hermitian.NotPositiveDefiniteError` if an
    ``Omega_l`` is not positive definite.
    """
    _check_sigma(spec, sigma)
    val = m.mu * (spec.total_power - sigma.total_power())
    for l in range(spec.L):
        h = spec.H(l, l)
        om = symmetrize(omega[l])
        val += spec.weights[l] * (logdet_pd(om + h @ sigma[l] @ herm(h)) - logdet_pd(om))
        c = om - np.eye(spec.rx_antennas[l])
        for k in range(spec.L):
            if spec.interferes(l, k):
                g = spec.H(l, k)
                c = c - g @ sigma[k] @ herm(g)
        val += np.trace(m.lam[l] @ c).real
    return float(val)


def grad_sigma(spec: NetworkSpec, sigma: CovarianceSet, omega, m: MultiplierState):
    """Gradient of ``F`` in each ``Sigma_l``.

    ``w_l H_ll^H (Omega_l + H_ll S_l H_ll^H)^{-1} H_ll - mu I
    - sum_{k != l} H_kl^H Lambda_k H_kl``. The interference sum collects
    the multiplier of every receiver ``k`` that link ``l`` disturbs.
    """
    _check_sigma(spec, sigma)
    out = []
    for l in range(spec.L):
        h = spec.H(l, l)
        a_inv = inv_pd(omega[l] + h @ sigma[l] @ herm(h))
        g = spec.weights[l] * herm(h) @ a_inv @ h - m.mu * np.eye(spec.tx_antennas[l])
        for k in range(spec.L):
            if spec.interferes(k, l):
                hk = spec.H(k, l)
                g = g - herm(hk) @ m.lam[k] @ hk
        out.append(symmetrize(g))
    return out


def grad_omega(spec: NetworkSpec, sigma: CovarianceSet, omega, m: MultiplierState):
    """Gradient of ``F`` in each ``Omega_l``: ``w_l ((Omega_l + H S H^H)^{-1} - Omega_l^{-1}) + Lambda_l``."""
    _check_sigma(spec, sigma)
    out = []
    for l in range(spec.L):
        h = spec.H(l, l)
        om = symmetrize(omega[l])
        g = spec.weights[l] * (inv_pd(om + h @ sigma[l] @ herm(h)) - inv_pd(om)) + m.lam[l]
        out.append(symmetrize(g))
    return out


def extract_multipliers(spec: NetworkSpec, sigma: CovarianceSet, omega=None) -> MultiplierState:
    """Multipliers that make ``grad_omega`` vanish at ``(Sigma, Omega(Sigma))``.

    ``Lambda_l = w_l (Omega_l^{-1} - (Omega_l + H_ll S_l H_ll^H)^{-1})`` and
    ``mu = sum_l tr(Lambda_l) / P_T``. With no received power anywhere the
    state is all zeros and flagged ``degenerate``.
    """
    _check_sigma(spec, sigma)
    omega = _omegas(spec, sigma) if omega is None else omega
    lam = []
    for l in range(spec.L):
        h = spec.H(l, l)
        om = symmetrize(omega[l])
        lam.append(symmetrize(spec.weights[l] * (inv_pd(om) - inv_pd(om + h @ sigma[l] @ herm(h)))))
    tr = float(sum(np.trace(x).real for x in lam))
    mu = tr / spec.total_power
    degenerate = not tr > 1e-14 * float(np.sum(spec.weights))
    if degenerate:
        lam = [np.zeros_like(x) for x in lam]
        mu = 0.0
    return MultiplierState(lam, mu, degenerate)


def check_scaling_invariance(spec: NetworkSpec, sigma: CovarianceSet, alpha: float):
    """Deviation of ``F`` under ``(S/a, Omega/a, a Lambda, a mu)`` and the Omega-gradient there.

    ``Omega``, ``Lambda`` and ``mu`` are derived from ``sigma``, which
    should use the full budget.

    Returns
    -------
    deviation : float
        ``|F(scaled) - F(original)|``.
    grad_norm : float
        Frobenius norm of the stacked ``grad_omega`` at the scaled point.
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    omega = _omegas(spec, sigma)
    m = extract_multipliers(spec, sigma, omega)
    f0 = lagrangian(spec, sigma, omega, m)
    s_a = sigma.scaled(1.0 / alpha)
    om_a = [o / alpha for o in omega]
    m_a = m.scaled(alpha)
    f1 = lagrangian(spec, s_a, om_a, m_a)
    g = grad_omega(spec, s_a, om_a, m_a)
    grad_norm = float(np.sqrt(sum(np.linalg.norm(x) ** 2 for x in g)))
    return abs(f1 - f0), grad_norm


# -- stationarity ----------------------------------------------------------------

@dataclass
class SaddlePointReport:
    """Residuals of the four first-order conditions at ``(Sigma, Sigma_hat)``.

    ``residuals`` holds, per condition, the worst link's relative error:

    * ``reverse_fixed_point``: ``Sigma_hat_l = Lambda_l / mu``
    * ``reverse_stationarity``: ``D_l = Omega_hat_l - (w_l/mu) H^H (Omega_l + H S_l H^H)^{-1} H``
      is PSD and ``S_l D_l = 0``
    * ``forward_fixed_point``: ``Sigma_l = Lambda_hat_l / mu_hat``
    * ``forward_stationarity``: the mirror of the second condition

    The stationarity conditions are the Sigma-gradient conditions with the
    PSD-cone multiplier ``Theta_l = mu D_l`` made explicit, so they also
    hold at optima where some covariances are rank deficient.
    ``literal`` reports ``||D_l|| / ||Omega_hat_l||`` (the cone multiplier
    forced to zero) for reference.
    """

    residuals: dict
    literal: dict
    mu: float
    mu_hat: float
    tol: float = 1e-6
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = all(v < self.tol for v in self.residuals.values())

    def to_dict(self):
        return {
            "residuals": dict(self.residuals),
            "literal": dict(self.literal),
            "mu": self.mu,
            "mu_hat": self.mu_hat,
            "mu_mismatch": abs(self.mu - self.mu_hat) / max(abs(self.mu), abs(self.mu_hat), 1e-300),
            "tol": self.tol,
            "passed": self.passed,
        }


def _cone_residual(D, S, scale, power):
    # PSD violation of D and complementary slackness S D = 0, both relative
    neg = max(0.0, -float(np.linalg.eigvalsh(symmetrize(D))[0])) / scale
    comp = float(np.linalg.norm(S @ D)) / (scale * power)
    return max(neg, comp)


def _side(spec, S, omega, omega_other, other_cov, direction):
    """Fixed-point and stationarity residuals of one direction."""
    P = spec.total_power
    lam, grams = [], []
    for l in range(spec.L):
        h = spec.H(l, l) if direction == FORWARD else herm(spec.H(l, l))
        a_inv = inv_pd(omega[l] + h @ S[l] @ herm(h))
        lam.append(spec.weights[l] * symmetrize(inv_pd(omega[l]) - a_inv))
        grams.append(spec.weights[l] * symmetrize(herm(h) @ a_inv @ h))
    mu = float(sum(np.trace(x).real for x in lam)) / P
    if not mu > 0:
        return np.inf, np.inf, np.inf, 0.0
    fixed = max(float(np.linalg.norm(other_cov[l] - lam[l] / mu)) for l in range(spec.L)) / P
    cone, literal = 0.0, 0.0
    for l in range(spec.L):
        D = omega_other[l] - grams[l] / mu
        scale = float(np.linalg.norm(omega_other[l]))
        cone = max(cone, _cone_residual(D, S[l], scale, P))
        literal = max(literal, float(np.linalg.norm(D)) / scale)
    return fixed, cone, literal, mu


def saddle_point_check(spec: NetworkSpec, result, tol=1e-6) -> SaddlePointReport:
    """Check the first-order conditions at a solver output.

    ``result`` is a :class:`~duallink.dual_link.SolveResult` or a
    ``(sigma, sigma_hat)`` pair.
    """
    if isinstance(result, SolveResult):
        sigma, sigma_hat = result.sigma, result.sigma_hat
    else:
        sigma, sigma_hat = result
    if sigma.direction != FORWARD or sigma_hat.direction != REVERSE:
        raise ValueError("expected (forward, reverse) covariances")
    omega = _omegas(spec, sigma)
    omega_hat = [reverse_interference_cov(spec, sigma_hat, l) for l in range(spec.L)]
    f_fix, f_cone, f_lit, mu = _side(spec, sigma, omega, omega_hat, sigma_hat, FORWARD)
    r_fix, r_cone, r_lit, mu_hat = _side(spec, sigma_hat, omega_hat, omega, sigma, REVERSE)
    residuals = {
        "reverse_fixed_point": f_fix,
        "reverse_stationarity": f_cone,
        "forward_fixed_point": r_fix,
        "forward_stationarity": r_cone,
    }
    literal = {"reverse_stationarity": f_lit, "forward_stationarity": r_lit}
    return SaddlePointReport(residuals, literal, mu, mu_hat, tol)


# -- finite differences ------------------------------------------------------------

def _random_hermitian(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return symmetrize(a)


def gradient_check(spec: NetworkSpec, sigma: CovarianceSet, omega, m: MultiplierState,
                   directions=20, step=1e-5, seed=0):
    """Compare analytic gradients with central differences of :func:`lagrangian`.

    Each direction perturbs every ``Sigma_l`` (or every ``Omega_l``) along a
    random Hermitian matrix of unit Frobenius norm. ``step`` is relative:
    the difference step is ``step * max(1, ||X||_F)`` for the stacked
    variable ``X``, which keeps roundoff below the truncation error when
    the interference covariances are large.

    Returns
    -------
    dict
        ``max_rel_error_sigma``, ``max_rel_error_omega`` and ``directions``.
    """
    rng = np.random.default_rng(seed)
    h_s = step * max(1.0, float(np.sqrt(sum(np.linalg.norm(s) ** 2 for s in sigma.mats))))
    h_o = step * max(1.0, float(np.sqrt(sum(np.linalg.norm(o) ** 2 for o in omega))))
    gs = grad_sigma(spec, sigma, omega, m)
    go = grad_omega(spec, sigma, omega, m)
    err_s, err_o = 0.0, 0.0

    def rel(fd, an):
        scale = max(abs(fd), abs(an))
        return abs(fd - an) / scale if scale > 0 else 0.0

    for _ in range(directions):
        dS = [_random_hermitian(rng, d) for d in spec.tx_antennas]
        nrm = np.sqrt(sum(np.linalg.norm(x) ** 2 for x in dS))
        dS = [x / nrm for x in dS]
        plus = CovarianceSet([s + h_s * d for s, d in zip(sigma.mats, dS)], FORWARD)
        minus = CovarianceSet([s - h_s * d for s, d in zip(sigma.mats, dS)], FORWARD)
        fd = (lagrangian(spec, plus, omega, m) - lagrangian(spec, minus, omega, m)) / (2 * h_s)
        an = sum(np.trace(herm(g) @ d).real for g, d in zip(gs, dS))
        err_s = max(err_s, rel(fd, an))

        dO = [_random_hermitian(rng, d) for d in spec.rx_antennas]
        nrm = np.sqrt(sum(np.linalg.norm(x) ** 2 for x in dO))
        dO = [x / nrm for x in dO]
        fd = (lagrangian(spec, sigma, [o + h_o * d for o, d in zip(omega, dO)], m)
              - lagrangian(spec, sigma, [o - h_o * d for o, d in zip(omega, dO)], m)) / (2 * h_o)
        an = sum(np.trace(herm(g) @ d).real for g, d in zip(go, dO))
        err_o = max(err_o, rel(fd, an))
    return {"max_rel_error_sigma": err_s, "max_rel_error_omega": err_o,
            "directions": int(directions)}


def diagnostics_report(spec: NetworkSpec, result, alphas=(0.1, 0.5, 2.0, 10.0), seed=0,
                       directions=20):
    """JSON-ready summary: stationarity residuals, scaling deviations, gradient check."""
    sigma = result.sigma if isinstance(result, SolveResult) else result[0]
    saddle = saddle_point_check(spec, result)
    omega = _omegas(spec, sigma)
    m = extract_multipliers(spec, sigma, omega)
    f = lagrangian(spec, sigma, omega, m)
    scaling = {}
    for a in alphas:
        dev, gn = check_scaling_invariance(spec, sigma, a)
        scaling[repr(float(a))] = {"deviation": dev, "relative_deviation": dev / max(abs(f), 1e-300),
                                   "grad_omega_norm": gn}
    # probe gradients away from the stationary multipliers so they are not trivially zero
    rng = np.random.default_rng(seed)
    probe = MultiplierState([x + 0.1 * symmetrize(_random_hermitian(rng, x.shape[0]))
                             for x in m.lam], m.mu * (1.0 + rng.uniform(0.1, 0.5)))
    grad = gradient_check(spec, sigma, omega, probe, directions=directions, seed=seed)
    return {
        "lagrangian": f,
        "multipliers": {"mu": m.mu, "degenerate": m.degenerate,
                        "power_mismatch": m.power_mismatch(spec.total_power)},
        "saddle_point": saddle.to_dict(),
        "scaling": scaling,
        "gradient_check": grad,
    }
