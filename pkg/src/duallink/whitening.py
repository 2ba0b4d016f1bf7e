"""Colored noise and weighted power constraints via an equivalent white network.

A network with noise covariances ``W_l`` at the receivers and the power
constraint ``sum_l tr(Sigma_l What_l) <= P_T`` is equivalent to a
white-noise, sum-power network with channels

    H'_lk = W_l^{-1/2} H_lk What_k^{-1/2}

and covariances ``Sigma'_l = What_l^{1/2} Sigma_l What_l^{1/2}``. Solve the
equivalent network with any solver, then map back with
:func:`recover_solution`.
"""

from dataclasses import dataclass
from typing import List

import numpy as np

from .hermitian import herm, inv_sqrt_pd, logdet_pd, sqrt_psd, symmetrize
from .network import FORWARD, CovarianceSet, NetworkSpec

__all__ = [
    "NoiseModel",
    "PowerWeights",
    "to_equivalent",
    "recover_solution",
    "transform_solution",
    "weighted_power",
    "colored_link_rate",
    "colored_weighted_sum_rate",
    "load_network",
]


def _pd_list(mats, name):
    out = []
    for l, m in enumerate(mats):
        m = symmetrize(np.atleast_2d(np.asarray(m, dtype=complex)))
        inv_sqrt_pd(m)  # raises NotPositiveDefiniteError when indefinite
        if not np.all(np.isfinite(m)):
            raise ValueError(f"{name}[{l}] has non-finite entries")
        out.append(m)
    return out


def _enc(m):
    return [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in m]


def _dec(m):
    return np.array([[complex(z["re"], z["im"]) for z in row] for row in m], dtype=complex)


@dataclass
class NoiseModel:
    """Positive definite receiver noise covariances ``W_l``."""

    W: List[np.ndarray]

    def __post_init__(self):
        self.W = _pd_list(self.W, "W")

    def check(self, spec: NetworkSpec):
        if len(self.W) != spec.L or any(w.shape != (r, r) for w, r in zip(self.W, spec.rx_antennas)):
            raise ValueError("noise covariances do not match the receive antenna counts")

    def to_list(self):
        return [_enc(w) for w in self.W]

    @classmethod
    def from_list(cls, data):
        return cls([_dec(m) for m in data])


@dataclass
class PowerWeights:
    """Positive definite transmit power weights ``What_l``."""

    What: List[np.ndarray]

    def __post_init__(self):
        self.What = _pd_list(self.What, "What")

    def check(self, spec: NetworkSpec):
        if (len(self.What) != spec.L
                or any(w.shape != (t, t) for w, t in zip(self.What, spec.tx_antennas))):
            raise ValueError("power weights do not match the transmit antenna counts")

    def to_list(self):
        return [_enc(w) for w in self.What]

    @classmethod
    def from_list(cls, data):
        return cls([_dec(m) for m in data])


def to_equivalent(spec: NetworkSpec, noise: NoiseModel, pw: PowerWeights) -> NetworkSpec:
    """White-noise, sum-power network equivalent to ``(spec, noise, pw)``.

    Each channel is whitened by its receiver's noise and by its
    transmitter's power weight: ``H'_lk = W_l^{-1/2} H_lk What_k^{-1/2}``.
    """
    noise.check(spec)
    pw.check(spec)
    wi = [inv_sqrt_pd(w) for w in noise.W]
    pi = [inv_sqrt_pd(p) for p in pw.What]
    chans = [[wi[l] @ spec.H(l, k) @ pi[k] for k in range(spec.L)] for l in range(spec.L)]
    return NetworkSpec(chans, spec.weights, spec.total_power, spec.cancel_mask)


def recover_solution(sigma_prime: CovarianceSet, pw: PowerWeights) -> CovarianceSet:
    """``Sigma_l = What_l^{-1/2} Sigma'_l What_l^{-1/2}``; preserves ``tr(Sigma_l What_l)``."""
    if sigma_prime.direction != FORWARD:
        raise ValueError("expected forward covariances")
    if len(sigma_prime) != len(pw.What):
        raise ValueError("one power weight per link is required")
    mats = []
    for s, p in zip(sigma_prime.mats, pw.What):
        pi = inv_sqrt_pd(p)
        mats.append(symmetrize(pi @ s @ pi))
    return CovarianceSet(mats, FORWARD)


def transform_solution(sigma: CovarianceSet, pw: PowerWeights) -> CovarianceSet:
    """Inverse of :func:`recover_solution`: ``Sigma'_l = What_l^{1/2} Sigma_l What_l^{1/2}``."""
    mats = []
    for s, p in zip(sigma.mats, pw.What):
        ps = sqrt_psd(p)
        mats.append(symmetrize(ps @ s @ ps))
    return CovarianceSet(mats, FORWARD)


def weighted_power(sigma: CovarianceSet, pw: PowerWeights) -> float:
    """``sum_l tr(Sigma_l What_l)``."""
    return float(sum(np.trace(s @ p).real for s, p in zip(sigma.mats, pw.What)))


def colored_link_rate(spec: NetworkSpec, noise: NoiseModel, sigma: CovarianceSet, l: int) -> float:
    """Rate of link ``l`` when its receiver noise has covariance ``W_l``."""
    om = noise.W[l].copy()
    for k in range(spec.L):
        if spec.interferes(l, k):
            h = spec.H(l, k)
            om = om + h @ sigma[k] @ herm(h)
    h = spec.H(l, l)
    return float(logdet_pd(om + h @ sigma[l] @ herm(h)) - logdet_pd(om))


def colored_weighted_sum_rate(spec: NetworkSpec, noise: NoiseModel, sigma: CovarianceSet) -> float:
    return float(sum(spec.weights[l] * colored_link_rate(spec, noise, sigma, l)
                     for l in range(spec.L)))


def load_network(data):
    """Parse a network file dict with optional ``noise`` and ``power_weights`` blocks.

    Returns ``(spec, noise, power_weights)``; the last two are ``None`` when
    absent.
    """
    spec = NetworkSpec.from_dict(data)
    noise = NoiseModel.from_list(data["noise"]) if data.get("noise") is not None else None
    pw = (PowerWeights.from_list(data["power_weights"])
          if data.get("power_weights") is not None else None)
    if noise is not None:
        noise.check(spec)
    if pw is not None:
        pw.check(spec)
    return spec, noise, pw
