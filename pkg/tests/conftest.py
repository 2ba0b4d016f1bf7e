import numpy as np
import pytest

from duallink.kernels import available_backends, get_backend
from duallink.network import NetworkSpec, db_to_gain


def random_pd(rng, n, shift=0.5):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return a @ a.conj().T + shift * np.eye(n)


def random_psd(rng, n, rank=None):
    rank = n if rank is None else rank
    a = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    return a @ a.conj().T


def random_network(rng, L=3, tx=2, rx=2, gain_db=0.0, power=10.0, weights=None):
    H = (rng.standard_normal((L, L, rx, tx)) + 1j * rng.standard_normal((L, L, rx, tx))) / np.sqrt(2)
    amp = np.full((L, L), np.sqrt(db_to_gain(gain_db)))
    np.fill_diagonal(amp, 1.0)
    w = rng.uniform(0.5, 1.0, L) if weights is None else weights
    return NetworkSpec.from_stacked(H * amp[:, :, None, None], w, power)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(params=available_backends())
def backend(request):
    return get_backend(request.param)


# acceptance results, printed once at the end of the run
ACCEPTANCE = {}


@pytest.fixture
def record_criterion():
    def record(number, title, passed, detail):
        line = f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}"
        ACCEPTANCE[number] = line
        print(line)
        return passed
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
