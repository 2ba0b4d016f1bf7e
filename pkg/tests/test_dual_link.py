import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from duallink.dual_link import (SolverConfig, SolverError, TRACE_HEADER, forward_to_reverse,
                                init_covariances, residual, reverse_to_forward, solve)
from duallink.hermitian import is_hermitian_psd
from duallink.kernels import available_backends, get_backend
from duallink.network import (FORWARD, REVERSE, CovarianceSet, NetworkSpec, reverse_link_rate,
                              weighted_sum_rate)

from conftest import random_network


def _reverse_wsr(spec, sigma_hat):
    return float(sum(spec.weights[l] * reverse_link_rate(spec, sigma_hat, l) for l in range(spec.L)))


# -- examples ---------------------------------------------------------------------

def test_siso_single_link_is_log_one_plus_snr():
    spec = NetworkSpec.from_stacked(np.ones((1, 1, 1, 1)) * 2.0, [1.0], 3.0)
    res = solve(spec)
    assert res.converged
    assert res.wsr == pytest.approx(np.log(1 + 4.0 * 3.0), rel=1e-12)
    assert res.sigma[0][0, 0].real == pytest.approx(3.0)


def test_parallel_siso_links_without_interference_water_fill():
    # two interference-free links: optimum is scalar water-filling over gains 1 and 4
    H = np.zeros((2, 2, 1, 1), dtype=complex)
    H[0, 0] = 1.0
    H[1, 1] = 2.0
    spec = NetworkSpec.from_stacked(H, [1.0, 1.0], 2.0)
    res = solve(spec, SolverConfig(tol=1e-13, max_iters=2000))
    # level nu: (nu - 1) + (nu - 1/4) = 2
    nu = (2 + 1 + 0.25) / 2
    expect = np.log(nu) + np.log(4 * nu)
    assert res.wsr == pytest.approx(expect, rel=1e-9)


def test_trace_and_power_are_conserved(rng):
    spec = random_network(rng, L=4, tx=3, rx=2, power=20.0)
    res = solve(spec, SolverConfig(max_iters=30))
    assert res.sigma.total_power() == pytest.approx(20.0, rel=1e-12)
    assert res.sigma_hat.total_power() == pytest.approx(20.0, rel=1e-12)
    res.sigma.check(spec)
    for m in res.sigma.mats + res.sigma_hat.mats:
        assert is_hermitian_psd(m)
    assert res.sigma.direction == FORWARD and res.sigma_hat.direction == REVERSE


def test_trace_csv_layout(rng):
    spec = random_network(rng, L=3)
    res = solve(spec, SolverConfig(max_iters=5, tol=1e-14))
    text = res.trace.to_csv()
    lines = text.strip().split("\n")
    assert lines[0].split(",") == TRACE_HEADER
    assert len(lines) == res.iterations + 1
    rows = [ln.split(",") for ln in lines[1:]]
    assert [int(r[0]) for r in rows] == list(range(1, res.iterations + 1))
    elapsed = [int(r[4]) for r in rows]
    assert elapsed == sorted(elapsed)
    assert float(rows[-1][1]) == res.wsr
    assert np.all(np.isfinite([float(r[3]) for r in rows]))
    buf = io.StringIO()
    res.trace.to_csv(buf)
    assert buf.getvalue() == text


# -- invariants ---------------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 4), tx=st.integers(1, 3),
       rx=st.integers(1, 3), gain=st.sampled_from([-10.0, 0.0, 10.0]))
def test_monotone_forward_wsr(seed, L, tx, rx, gain):
    spec = random_network(np.random.default_rng(seed), L, tx, rx, gain, power=10.0)
    res = solve(spec, SolverConfig(max_iters=40, tol=1e-12, init="random", seed=seed))
    v = res.trace.values()
    assert np.all(v[1:] >= v[:-1] - 1e-9 * np.abs(v[:-1]))


@settings(max_examples=20, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), L=st.integers(1, 4), gain=st.sampled_from([-10.0, 0.0, 10.0]))
def test_interleaved_chain(seed, L, gain):
    # forward and reverse values interleave: R(n) <= Rhat(n) <= R(n+1)
    spec = random_network(np.random.default_rng(seed), L, 2, 3, gain, power=10.0)
    res = solve(spec, SolverConfig(max_iters=25, tol=1e-12))
    fwd = res.trace.values()
    rev = np.array(res.trace.reverse_wsr)
    tol = 1e-9 * np.abs(fwd[1:])
    assert np.all(rev >= fwd[:-1] - tol)
    assert np.all(fwd[1:] >= rev - tol)


def test_dual_transformation_preserves_rates_at_fixed_point(rng):
    spec = random_network(rng, L=3, tx=2, rx=3)
    res = solve(spec, SolverConfig(tol=1e-13, max_iters=5000))
    assert res.converged
    assert _reverse_wsr(spec, res.sigma_hat) == pytest.approx(res.wsr, rel=1e-8)
    assert residual(spec, res.sigma, res.sigma_hat) < 1e-6
    # one more full round barely moves the point
    S2 = reverse_to_forward(spec, forward_to_reverse(spec, res.sigma))
    diff = max(np.linalg.norm(a - b) for a, b in zip(S2.mats, res.sigma.mats))
    assert diff / spec.total_power < 1e-5


def test_reverse_covariances_have_receive_dimensions(rng):
    spec = random_network(rng, L=2, tx=2, rx=4)
    S_hat = forward_to_reverse(spec, init_covariances(spec))
    assert [m.shape for m in S_hat.mats] == [(4, 4), (4, 4)]
    assert S_hat.total_power() == pytest.approx(spec.total_power)


def test_backend_parity(rng):
    names = available_backends()
    spec = random_network(rng, L=4, tx=3, rx=2, gain_db=0.0)
    cfg = SolverConfig(max_iters=50, tol=1e-14)
    results = [solve(spec, cfg, backend=get_backend(n)) for n in names]
    for r in results[1:]:
        np.testing.assert_allclose(r.trace.values(), results[0].trace.values(), rtol=1e-10)


def test_random_init_is_seeded(rng):
    spec = random_network(rng, L=3)
    a = init_covariances(spec, SolverConfig(init="random", seed=4))
    b = init_covariances(spec, SolverConfig(init="random", seed=4))
    c = init_covariances(spec, SolverConfig(init="random", seed=5))
    assert all(np.array_equal(x, y) for x, y in zip(a.mats, b.mats))
    assert not all(np.array_equal(x, y) for x, y in zip(a.mats, c.mats))
    assert a.total_power() == pytest.approx(spec.total_power)


def test_initial_point_is_rescaled(rng):
    spec = random_network(rng, L=2)
    init = CovarianceSet([np.eye(2) * 0.01, np.eye(2) * 0.03], FORWARD)
    res = solve(spec, SolverConfig(max_iters=1), initial=init)
    scaled = init.scaled(spec.total_power / init.total_power())
    assert res.trace.initial_wsr == pytest.approx(weighted_sum_rate(spec, scaled), rel=1e-12)


def test_max_iters_reports_not_converged(rng):
    spec = random_network(rng, L=4, gain_db=10.0)
    res = solve(spec, SolverConfig(max_iters=2, tol=1e-15))
    assert res.iterations == 2 and not res.converged


# -- errors -----------------------------------------------------------------------

def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(tol=0)
    with pytest.raises(ValueError):
        SolverConfig(max_iters=0)
    with pytest.raises(ValueError):
        SolverConfig(init="ones")


def test_zero_initial_power_rejected(rng):
    spec = random_network(rng, L=2)
    with pytest.raises(ValueError):
        solve(spec, initial=CovarianceSet([np.zeros((2, 2)), np.zeros((2, 2))], FORWARD))


def test_all_zero_direct_channels_raise_solver_error():
    H = np.zeros((2, 2, 1, 1), dtype=complex)
    H[0, 1] = H[1, 0] = 1.0
    spec = NetworkSpec.from_stacked(H, [1.0, 1.0], 1.0)
    with pytest.raises(SolverError):
        solve(spec)
