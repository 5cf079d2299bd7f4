import numpy as np
import pytest

from psarnoise.channel import KrausChannel, NoiseModel
from psarnoise.psar import retrieve, retrieval_operator, store


def random_density(rng, dim, rank=None):
    rank = rank or dim
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho)


def random_channel(rng, d_in=2, d_out=2, rank=3):
    g = rng.normal(size=(rank * d_out, d_in)) + 1j * rng.normal(size=(rank * d_out, d_in))
    iso, _ = np.linalg.qr(g)
    return KrausChannel.from_ops([iso[i * d_out:(i + 1) * d_out] for i in range(rank)])


def random_matrix(rng, dim):
    return rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture(scope="session", autouse=True)
def warm_kernels():
    # compile the numba kernels once, outside any timed section
    retrieve(retrieval_operator(2), store(2, NoiseModel.depolarizing(0.5), 0.1))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
