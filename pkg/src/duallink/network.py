"""B-MAC network model: channels, weights, power budget and link rates.

Rates are in nats. Forward link ``l`` sees interference from every
transmitter ``k != l`` whose signal is not cancelled at receiver ``l``;
the reverse (dual) network swaps transmitter and receiver roles and uses
conjugate-transposed channels.
"""

import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import List, Optional, Sequence

import numpy as np

from .hermitian import herm, logdet_pd, symmetrize

__all__ = [
    "NetworkSpec",
    "CovarianceSet",
    "FORWARD",
    "REVERSE",
    "forward_interference_cov",
    "reverse_interference_cov",
    "link_rate",
    "reverse_link_rate",
    "weighted_sum_rate",
    "db_to_gain",
]

FORWARD = "forward"
REVERSE = "reverse"


def db_to_gain(db):
    """Power gain in linear scale, ``10^(db/10)``."""
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True, eq=False)
class NetworkSpec:
    """Immutable description of a MIMO B-MAC network.

    Parameters
    ----------
    channels : list of list of np.ndarray
        ``channels[l][k]`` is ``H_{l,k}``, shape ``(rx_antennas[l], tx_antennas[k])``.
    weights : sequence of float
        Positive rate weights ``w_l``.
    total_power : float
        Sum power budget ``P_T``.
    cancel_mask : (L, L) bool array, optional
        ``cancel_mask[l][k]`` treats ``H_{l,k}`` as zero in link ``l``'s
        interference (successive decoding / dirty paper coding).
    """

    channels: List[List[np.ndarray]]
    weights: np.ndarray
    total_power: float
    cancel_mask: Optional[np.ndarray] = None
    tx_antennas: tuple = field(init=False)
    rx_antennas: tuple = field(init=False)

    def __post_init__(self):
        L = len(self.channels)
        if L == 0:
            raise ValueError("network needs at least one link")
        chans = []
        for l, row in enumerate(self.channels):
            if len(row) != L:
                raise ValueError(f"channels[{l}] has {len(row)} entries, expected {L}")
            chans.append([np.atleast_2d(np.asarray(h, dtype=complex)) for h in row])
        rx = tuple(chans[l][l].shape[0] for l in range(L))
        tx = tuple(chans[k][k].shape[1] for k in range(L))
        for l in range(L):
            for k in range(L):
                if chans[l][k].shape != (rx[l], tx[k]):
                    raise ValueError(
                        f"H[{l}][{k}] has shape {chans[l][k].shape}, "
                        f"expected {(rx[l], tx[k])}")
                if not np.all(np.isfinite(chans[l][k])):
                    raise ValueError(f"H[{l}][{k}] has non-finite entries")
        w = np.asarray(self.weights, dtype=float).ravel()
        if w.shape != (L,) or np.any(~(w > 0)):
            raise ValueError("weights must be L positive numbers")
        if not self.total_power > 0:
            raise ValueError("total_power must be positive")
        mask = (np.zeros((L, L), dtype=bool) if self.cancel_mask is None
                else np.asarray(self.cancel_mask, dtype=bool))
        if mask.shape != (L, L):
            raise ValueError("cancel_mask must be L x L")
        if np.any(np.diag(mask)):
            raise ValueError("cancel_mask[l][l] must be false")
        for a in chans:
            for h in a:
                h.setflags(write=False)
        mask = mask.copy()
        mask.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "channels", chans)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "total_power", float(self.total_power))
        object.__setattr__(self, "cancel_mask", mask)
        object.__setattr__(self, "tx_antennas", tx)
        object.__setattr__(self, "rx_antennas", rx)

    @property
    def L(self):
        return len(self.channels)

    def H(self, l, k):
        """Channel from transmitter ``k`` to receiver ``l``."""
        return self.channels[l][k]

    def interferes(self, l, k):
        """True if link ``k`` interferes at receiver ``l``."""
        return k != l and not self.cancel_mask[l, k]

    # Padded stacks used by the iteration kernels. Padding rows/columns with
    # zeros leaves every rate and covariance block unchanged.
    @cached_property
    def max_tx(self):
        return max(self.tx_antennas)

    @cached_property
    def max_rx(self):
        return max(self.rx_antennas)

    @cached_property
    def active(self):
        act = ~np.eye(self.L, dtype=bool) & ~self.cancel_mask
        for l in range(self.L):
            for k in range(self.L):
                if act[l, k] and not np.any(self.channels[l][k]):
                    act[l, k] = False
        return act

    @cached_property
    def stacked(self):
        """``(G, Hd)``: padded cross channels (inactive pairs zeroed) and direct channels."""
        L, R, T = self.L, self.max_rx, self.max_tx
        G = np.zeros((L, L, R, T), dtype=complex)
        Hd = np.zeros((L, R, T), dtype=complex)
        for l in range(L):
            for k in range(L):
                h = self.channels[l][k]
                if k == l:
                    Hd[l, :h.shape[0], :h.shape[1]] = h
                elif self.active[l, k]:
                    G[l, k, :h.shape[0], :h.shape[1]] = h
        return G, Hd

    @cached_property
    def stacked_reverse(self):
        """Reverse-network counterparts: ``G_rev[l, k] = H_{k,l}^H``."""
        G, Hd = self.stacked
        return (np.ascontiguousarray(herm(G).transpose(1, 0, 2, 3)),
                np.ascontiguousarray(herm(Hd)))

    def dims(self, direction):
        """Per-link covariance dimensions for ``direction``."""
        return self.tx_antennas if direction == FORWARD else self.rx_antennas

    # JSON ---------------------------------------------------------------
    def to_dict(self):
        def enc(h):
            return [[{"re": float(z.real), "im": float(z.imag)} for z in row] for row in h]
        return {
            "links": self.L,
            "tx_antennas": list(self.tx_antennas),
            "rx_antennas": list(self.rx_antennas),
            "weights": [float(x) for x in self.weights],
            "total_power": self.total_power,
            "channels": [[enc(self.channels[l][k]) for k in range(self.L)]
                         for l in range(self.L)],
            "cancel_mask": [[bool(x) for x in row] for row in self.cancel_mask],
        }

    @classmethod
    def from_dict(cls, d):
        L = int(d["links"])
        tx, rx = d["tx_antennas"], d["rx_antennas"]
        if len(tx) != L or len(rx) != L:
            raise ValueError("antenna lists must have one entry per link")

        def dec(m, shape):
            a = np.array([[complex(z["re"], z["im"]) for z in row] for row in m],
                         dtype=complex)
            a = a.reshape(shape)
            return a

        chans = [[dec(d["channels"][l][k], (rx[l], tx[k])) for k in range(L)]
                 for l in range(L)]
        return cls(chans, d["weights"], d["total_power"], d.get("cancel_mask"))

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def from_stacked(cls, H, weights, total_power, cancel_mask=None):
        """Build from a uniform ``(L, L, R, T)`` channel array."""
        H = np.asarray(H, dtype=complex)
        L = H.shape[0]
        return cls([[H[l, k] for k in range(L)] for l in range(L)],
                   weights, total_power, cancel_mask)


@dataclass
class CovarianceSet:
    """Per-link transmit covariances of the forward or reverse network."""

    mats: List[np.ndarray]
    direction: str = FORWARD

    def __post_init__(self):
        if self.direction not in (FORWARD, REVERSE):
            raise ValueError(f"unknown direction {self.direction!r}")
        self.mats = [np.atleast_2d(np.asarray(m, dtype=complex)) for m in self.mats]

    def __len__(self):
        return len(self.mats)

    def __getitem__(self, l):
        return self.mats[l]

    def total_power(self):
        return float(sum(np.trace(m).real for m in self.mats))

    def scaled(self, c):
        return CovarianceSet([c * m for m in self.mats], self.direction)

    def padded(self, dim=None):
        """Stack into a zero-padded ``(L, dim, dim)`` array."""
        dim = dim or max(m.shape[0] for m in self.mats)
        out = np.zeros((len(self.mats), dim, dim), dtype=complex)
        for l, m in enumerate(self.mats):
            out[l, :m.shape[0], :m.shape[1]] = m
        return out

    @classmethod
    def from_padded(cls, arr, dims, direction):
        return cls([np.array(arr[l, :d, :d]) for l, d in enumerate(dims)], direction)

    def check(self, spec: NetworkSpec, tol=1e-9):
        """Validate shapes, PSD-ness and the power budget; raise ``ValueError``."""
        from .hermitian import is_hermitian_psd
        dims = spec.dims(self.direction)
        if len(self.mats) != spec.L:
            raise ValueError(f"expected {spec.L} covariances, got {len(self.mats)}")
        for l, (m, d) in enumerate(zip(self.mats, dims)):
            if m.shape != (d, d):
                raise ValueError(f"covariance {l} has shape {m.shape}, expected {(d, d)}")
            if not is_hermitian_psd(m, 1e-10):
                raise ValueError(f"covariance {l} is not Hermitian PSD")
        if self.total_power() > spec.total_power * (1 + tol):
            raise ValueError("covariances exceed the power budget")

    def to_dict(self):
        return {
            "direction": self.direction,
            "covariances": [[[{"re": float(z.real), "im": float(z.imag)} for z in row]
                             for row in m] for m in self.mats],
        }

    @classmethod
    def from_dict(cls, d):
        mats = [np.array([[complex(z["re"], z["im"]) for z in row] for row in m])
                for m in d["covariances"]]
        return cls(mats, d.get("direction", FORWARD))


def _check_shapes(spec, sigma, direction):
    if sigma.direction != direction:
        raise ValueError(f"expected {direction} covariances, got {sigma.direction}")
    dims = spec.dims(direction)
    if len(sigma) != spec.L:
        raise ValueError(f"expected {spec.L} covariances, got {len(sigma)}")
    for l, d in enumerate(dims):
        if sigma[l].shape != (d, d):
            raise ValueError(f"covariance {l} has shape {sigma[l].shape}, expected {(d, d)}")


def forward_interference_cov(spec: NetworkSpec, sigma: CovarianceSet, l: int) -> np.ndarray:
    """``Omega_l = I + sum_{k != l, not cancelled} H_lk Sigma_k H_lk^H``."""
    _check_shapes(spec, sigma, FORWARD)
    om = np.eye(spec.rx_antennas[l], dtype=complex)
    for k in range(spec.L):
        if spec.interferes(l, k):
            h = spec.H(l, k)
            om = om + h @ sigma[k] @ herm(h)
    return symmetrize(om)


def reverse_interference_cov(spec: NetworkSpec, sigma_hat: CovarianceSet, l: int) -> np.ndarray:
    """``Omega_hat_l = I + sum_{k != l} H_kl^H Sigma_hat_k H_kl`` (dual network)."""
    _check_shapes(spec, sigma_hat, REVERSE)
    om = np.eye(spec.tx_antennas[l], dtype=complex)
    for k in range(spec.L):
        if spec.interferes(k, l):
            h = spec.H(k, l)
            om = om + herm(h) @ sigma_hat[k] @ h
    return symmetrize(om)


def link_rate(spec: NetworkSpec, sigma: CovarianceSet, l: int) -> float:
    """Achievable rate of forward link ``l`` in nats."""
    om = forward_interference_cov(spec, sigma, l)
    h = spec.H(l, l)
    r = logdet_pd(om + h @ sigma[l] @ herm(h)) - logdet_pd(om)
    return float(max(r, 0.0))


def reverse_link_rate(spec: NetworkSpec, sigma_hat: CovarianceSet, l: int) -> float:
    """Achievable rate of reverse link ``l`` in nats."""
    om = reverse_interference_cov(spec, sigma_hat, l)
    h = spec.H(l, l)
    r = logdet_pd(om + herm(h) @ sigma_hat[l] @ h) - logdet_pd(om)
    return float(max(r, 0.0))


def link_rates(spec: NetworkSpec, sigma: CovarianceSet) -> np.ndarray:
    rate = link_rate if sigma.direction == FORWARD else reverse_link_rate
    return np.array([rate(spec, sigma, l) for l in range(spec.L)])


def weighted_sum_rate(spec: NetworkSpec, sigma: CovarianceSet) -> float:
    """``sum_l w_l I_l``; uses reverse-link rates for reverse covariances."""
    return float(np.dot(spec.weights, link_rates(spec, sigma)))


def scaled_channel(H_white, gain_db):
    """Apply an average power gain in dB: ``sqrt(g) * H_white``."""
    return np.sqrt(db_to_gain(gain_db)) * np.asarray(H_white)
