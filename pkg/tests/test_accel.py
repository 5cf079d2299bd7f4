import numpy as np
import pytest

from psarnoise import _accel

from conftest import random_channel, random_density

needs_numba = pytest.mark.skipif(not _accel.HAS_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("left, right", [(1, 1), (1, 4), (8, 1), (2, 3)])
def test_local_channel_backends_agree(rng, left, right):
    kraus = random_channel(rng, d_in=2, d_out=3).stacked()
    rho = random_density(rng, left * 2 * right)
    a = _accel.local_channel_numpy(rho, kraus, left, right)
    b = _accel.local_channel_numba(rho, kraus, left, right)
    assert np.abs(a - b).max() <= 1e-13


@needs_numba
def test_partial_trace_backends_agree(rng):
    t4 = random_density(rng, 12).reshape(4, 3, 4, 3)
    assert np.abs(_accel.partial_trace_numpy(t4) - _accel.partial_trace_numba(t4)).max() <= 1e-14


def test_backend_name_matches_flag():
    assert _accel.backend_name() == ("numba" if _accel.USE_NUMBA else "numpy")


def test_disable_flag(monkeypatch):
    import importlib

    monkeypatch.setenv("PSARNOISE_DISABLE_NUMBA", "1")
    try:
        reloaded = importlib.reload(_accel)
        assert not reloaded.USE_NUMBA and reloaded.backend_name() == "numpy"
    finally:
        monkeypatch.delenv("PSARNOISE_DISABLE_NUMBA")
        importlib.reload(_accel)


def test_large_local_dimension_uses_fallback(rng):
    # an 8x8 unitary on the middle factor; the dispatcher must not build the superoperator
    u = np.linalg.qr(rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8)))[0]
    rho = random_density(rng, 2 * 8 * 3)
    out = _accel.local_channel(rho, u[None], 2, 3)
    full = np.kron(np.kron(np.eye(2), u), np.eye(3))
    assert np.abs(out - full @ rho @ full.conj().T).max() <= 1e-13
