import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duallink.dual_link import SolverConfig, init_covariances, solve
from duallink.hermitian import NotPositiveDefiniteError
from duallink.network import FORWARD, CovarianceSet, NetworkSpec, weighted_sum_rate
from duallink.whitening import (NoiseModel, PowerWeights, colored_link_rate,
                                colored_weighted_sum_rate, load_network, recover_solution,
                                to_equivalent, transform_solution, weighted_power)

from conftest import random_network, random_pd


def _colored(rng, spec):
    noise = NoiseModel([random_pd(rng, r) for r in spec.rx_antennas])
    pw = PowerWeights([random_pd(rng, t) for t in spec.tx_antennas])
    return noise, pw


def test_scalar_example():
    # h=2, noise 4, weight 0.5: equivalent gain 2/(2*sqrt(0.5)) and rate log(1 + 4 s / 4)
    spec = NetworkSpec.from_stacked(np.full((1, 1, 1, 1), 2.0), [1.0], 1.0)
    noise = NoiseModel([np.array([[4.0]])])
    pw = PowerWeights([np.array([[0.5]])])
    eq = to_equivalent(spec, noise, pw)
    assert eq.H(0, 0)[0, 0].real == pytest.approx(2.0 / (2.0 * np.sqrt(0.5)))
    s_prime = CovarianceSet([np.array([[1.0]])], FORWARD)
    s = recover_solution(s_prime, pw)
    assert s[0][0, 0].real == pytest.approx(2.0)
    assert weighted_power(s, pw) == pytest.approx(1.0)
    assert colored_link_rate(spec, noise, s, 0) == pytest.approx(np.log(1 + 4 * 2.0 / 4.0))


def test_white_noise_identity_is_a_no_op(rng):
    spec = random_network(rng, L=3, tx=2, rx=3)
    noise = NoiseModel([np.eye(3)] * 3)
    pw = PowerWeights([np.eye(2)] * 3)
    eq = to_equivalent(spec, noise, pw)
    for l in range(3):
        for k in range(3):
            np.testing.assert_allclose(eq.H(l, k), spec.H(l, k))
    sigma = init_covariances(spec)
    assert colored_weighted_sum_rate(spec, noise, sigma) == pytest.approx(weighted_sum_rate(spec, sigma))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 4))
def test_equivalence_identities(seed, L):
    rng = np.random.default_rng(seed)
    spec = random_network(rng, L=L, tx=2, rx=3)
    noise, pw = _colored(rng, spec)
    eq = to_equivalent(spec, noise, pw)
    s_prime = init_covariances(eq, SolverConfig(init="random", seed=seed))
    s = recover_solution(s_prime, pw)
    ref = weighted_sum_rate(eq, s_prime)
    assert colored_weighted_sum_rate(spec, noise, s) == pytest.approx(ref, rel=1e-10)
    assert weighted_power(s, pw) == pytest.approx(s_prime.total_power(), rel=1e-10)
    back = transform_solution(s, pw)
    for a, b in zip(back.mats, s_prime.mats):
        np.testing.assert_allclose(a, b, atol=1e-9 * spec.total_power)


def test_solve_through_equivalent(rng):
    spec = random_network(rng, L=3, tx=2, rx=2)
    noise, pw = _colored(rng, spec)
    eq = to_equivalent(spec, noise, pw)
    res = solve(eq, SolverConfig(tol=1e-10, max_iters=2000))
    s = recover_solution(res.sigma, pw)
    assert colored_weighted_sum_rate(spec, noise, s) == pytest.approx(res.wsr, rel=1e-9)
    assert weighted_power(s, pw) == pytest.approx(spec.total_power, rel=1e-9)


def test_rejects_indefinite_and_mismatched(rng):
    with pytest.raises(NotPositiveDefiniteError):
        NoiseModel([np.diag([1.0, -1.0])])
    spec = random_network(rng, L=2, tx=2, rx=2)
    with pytest.raises(ValueError):
        to_equivalent(spec, NoiseModel([np.eye(3)] * 2), PowerWeights([np.eye(2)] * 2))
    with pytest.raises(ValueError):
        to_equivalent(spec, NoiseModel([np.eye(2)] * 2), PowerWeights([np.eye(2)]))
    with pytest.raises(ValueError):
        recover_solution(CovarianceSet([np.eye(2)] * 2, "reverse"), PowerWeights([np.eye(2)] * 2))


def test_network_file_round_trip(rng):
    spec = random_network(rng, L=2, tx=2, rx=3)
    noise, pw = _colored(rng, spec)
    data = spec.to_dict()
    data["noise"] = noise.to_list()
    data["power_weights"] = pw.to_list()
    spec2, noise2, pw2 = load_network(data)
    for a, b in zip(noise.W, noise2.W):
        np.testing.assert_allclose(a, b)
    for a, b in zip(pw.What, pw2.What):
        np.testing.assert_allclose(a, b)
    assert load_network(spec.to_dict())[1:] == (None, None)
