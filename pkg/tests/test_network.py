import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duallink.network import (CovarianceSet, NetworkSpec, db_to_gain, forward_interference_cov,
                              link_rate, reverse_interference_cov, reverse_link_rate,
                              weighted_sum_rate)

from conftest import random_network, random_psd


def scalar_spec(H, w=None, P=10.0, mask=None):
    H = np.asarray(H, dtype=complex)
    L = H.shape[0]
    return NetworkSpec.from_stacked(H.reshape(L, L, 1, 1), np.ones(L) if w is None else w, P, mask)


def cov(vals, direction="forward"):
    return CovarianceSet([np.array([[v]], dtype=complex) for v in vals], direction)


def random_cov(rng, spec, direction="forward"):
    dims = spec.tx_antennas if direction == "forward" else spec.rx_antennas
    return CovarianceSet([random_psd(rng, d) for d in dims], direction)


def straight_line_wsr(spec, sigma):
    # independent per-link evaluation via eigenvalues of Omega^{-1} H S H^H
    total = 0.0
    for l in range(spec.L):
        om = np.eye(spec.rx_antennas[l], dtype=complex)
        for k in range(spec.L):
            if k != l and not spec.cancel_mask[l, k]:
                om += spec.channels[l][k] @ sigma[k] @ spec.channels[l][k].conj().T
        h = spec.channels[l][l]
        m = np.linalg.solve(om, h @ sigma[l] @ h.conj().T)
        total += spec.weights[l] * np.sum(np.log(np.abs(1 + np.linalg.eigvals(m))))
    return total


def test_validation_errors():
    with pytest.raises(ValueError):
        scalar_spec([[1.0]], w=[0.0])
    with pytest.raises(ValueError):
        scalar_spec([[1.0]], P=0.0)
    with pytest.raises(ValueError):
        scalar_spec(np.ones((2, 2)), mask=np.eye(2, dtype=bool))
    with pytest.raises(ValueError):
        NetworkSpec([[np.ones((2, 2)), np.ones((2, 3))], [np.ones((2, 2)), np.ones((2, 2))]],
                    [1, 1], 1.0)
    with pytest.raises(ValueError):
        scalar_spec([[np.nan]])


def test_interference_examples():
    spec = scalar_spec([[1.0]])
    assert np.allclose(forward_interference_cov(spec, cov([5.0]), 0), [[1.0]])
    spec = scalar_spec([[1.0, 2.0], [2.0, 1.0]])
    assert np.allclose(forward_interference_cov(spec, cov([0.0, 0.0]), 0), [[1.0]])
    assert np.allclose(forward_interference_cov(spec, cov([1.0, 3.0]), 0), [[13.0]])
    rspec = scalar_spec([[1.0, 0.0], [2.0, 1.0]])
    assert np.allclose(reverse_interference_cov(rspec, cov([0.0, 3.0], "reverse"), 0), [[13.0]])
    assert np.allclose(reverse_interference_cov(rspec, cov([0.0, 0.0], "reverse"), 0), [[1.0]])


def test_shape_mismatch():
    spec = scalar_spec([[1.0]])
    with pytest.raises(ValueError):
        forward_interference_cov(spec, CovarianceSet([np.eye(2)]), 0)
    with pytest.raises(ValueError):
        forward_interference_cov(spec, cov([1.0], "reverse"), 0)


def test_rate_examples():
    spec = scalar_spec([[1.0]])
    assert link_rate(spec, cov([0.0]), 0) == 0.0
    assert link_rate(spec, cov([9.0]), 0) == pytest.approx(np.log(10))
    assert reverse_link_rate(spec, cov([9.0], "reverse"), 0) == pytest.approx(np.log(10))
    spec2 = scalar_spec([[1.0, 2.0], [2.0, 1.0]])
    assert link_rate(spec2, cov([9.0, 3.0]), 0) == pytest.approx(np.log(1 + 9 / 13))
    w = scalar_spec([[1.0]], w=[2.0])
    assert weighted_sum_rate(w, cov([9.0])) == pytest.approx(2 * np.log(10))
    assert weighted_sum_rate(spec2, cov([0.0, 0.0])) == 0.0


def test_reverse_rate_swaps_roles():
    # H_12 = 2, H_21 = 3: reverse link 1 sees H_21 interference, as forward link 2 would
    fwd = scalar_spec([[1.0, 2.0], [3.0, 1.5]])
    swapped = scalar_spec([[1.5, 2.0], [3.0, 1.0]])
    a = reverse_link_rate(fwd, cov([4.0, 5.0], "reverse"), 0)
    b = link_rate(swapped, cov([5.0, 4.0]), 1)
    assert a == pytest.approx(b, rel=1e-13)


def test_wsr_matches_straight_line(rng):
    for _ in range(10):
        spec = random_network(rng, L=4, tx=3, rx=2)
        sigma = random_cov(rng, spec)
        assert weighted_sum_rate(spec, sigma) == pytest.approx(straight_line_wsr(spec, sigma),
                                                               rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(1.0, 10.0))
def test_rate_properties(seed, c):
    rng = np.random.default_rng(seed)
    spec = random_network(rng, L=3, tx=2, rx=3)
    sigma = random_cov(rng, spec)
    for l in range(spec.L):
        om = forward_interference_cov(spec, sigma, l)
        assert np.linalg.eigvalsh(om).min() >= 1 - 1e-12
        r = link_rate(spec, sigma, l)
        assert r >= 0
        bigger = CovarianceSet([c * m if k == l else m for k, m in enumerate(sigma.mats)])
        assert link_rate(spec, bigger, l) >= r - 1e-12


def test_masked_equals_zero_channel(rng):
    spec = random_network(rng, L=3)
    mask = np.zeros((3, 3), dtype=bool)
    mask[0, 2] = mask[1, 0] = True
    masked = NetworkSpec(spec.channels, spec.weights, spec.total_power, mask)
    chans = [[h.copy() for h in row] for row in spec.channels]
    chans[0][2][:] = 0
    chans[1][0][:] = 0
    zeroed = NetworkSpec(chans, spec.weights, spec.total_power)
    sigma = random_cov(rng, spec)
    assert weighted_sum_rate(masked, sigma) == pytest.approx(weighted_sum_rate(zeroed, sigma), rel=1e-13)


def test_json_roundtrip(rng):
    spec = random_network(rng, L=2, tx=3, rx=2)
    d = json.loads(spec.to_json())
    assert set(d) == {"links", "tx_antennas", "rx_antennas", "weights", "total_power",
                      "channels", "cancel_mask"}
    back = NetworkSpec.from_json(spec.to_json())
    for l in range(2):
        for k in range(2):
            assert np.array_equal(back.H(l, k), spec.H(l, k))
    assert np.array_equal(back.weights, spec.weights)


def test_db_to_gain():
    assert db_to_gain(-10) == pytest.approx(0.1)
    assert db_to_gain(0) == 1.0


def test_spec_is_immutable(rng):
    spec = random_network(rng)
    with pytest.raises(Exception):
        spec.total_power = 3.0
    with pytest.raises(ValueError):
        spec.channels[0][0][0, 0] = 1.0
