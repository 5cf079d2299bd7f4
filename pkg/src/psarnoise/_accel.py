"""Hot kernels with a numba path and a pure-numpy fallback.

The numba path is used when numba imports cleanly and ``PSARNOISE_DISABLE_NUMBA``
is unset (or ``0``). Both paths are always importable so the benchmark and the
tests can compare them directly.
"""
import os

import numpy as np

_DISABLED = os.environ.get("PSARNOISE_DISABLE_NUMBA", "0").strip().lower() not in ("", "0", "false", "no")

try:
    import numba

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAS_NUMBA = False

USE_NUMBA = HAS_NUMBA and not _DISABLED

# the numba kernel works through the d_out^2 d_in^2 superoperator, which only pays off locally
NUMBA_MAX_LOCAL_DIM = 4


# -- local channel action -------------------------------------------------------

def local_channel_numpy(rho, kraus, left, right):
    """Apply Kraus ops (shape ``(m, d_out, d_in)``) to the middle factor of ``rho``.

    ``rho`` is a ``(left*d_in*right)`` square matrix; the result is
    ``(left*d_out*right)`` square. Small local dimensions go through the
    superoperator; larger ones one Kraus op at a time, so memory stays at a
    few copies of ``rho``.
    """
    m, d_out, d_in = kraus.shape
    n_in = left * d_in * right
    n_out = left * d_out * right
    if max(d_in, d_out) <= NUMBA_MAX_LOCAL_DIM:
        sup = np.einsum("koi,kpj->opij", kraus, kraus.conj())
        t = rho.reshape(left, d_in, right, left, d_in, right)
        out = np.tensordot(sup, t, axes=([2, 3], [1, 4]))  # (o, p, a, b, c, d)
        return out.transpose(2, 0, 3, 4, 1, 5).reshape(n_out, n_out)
    t = rho.reshape(left, d_in, right * n_in)
    out = np.zeros((n_out, n_out), dtype=np.complex128)
    for k in kraus:
        half = np.matmul(k, t).reshape(n_out * left, d_in, right)
        out += np.matmul(k.conj(), half).reshape(n_out, n_out)
    return out


def _local_channel_loops(rho, kraus, left, right):
    m, d_out, d_in = kraus.shape
    # superoperator S[o, p, i, j] = sum_k K[k, o, i] conj(K[k, p, j]); cost is then independent of m
    sup = np.zeros((d_out, d_out, d_in, d_in), dtype=np.complex128)
    for k in range(m):
        for o in range(d_out):
            for p in range(d_out):
                for i in range(d_in):
                    for j in range(d_in):
                        sup[o, p, i, j] += kraus[k, o, i] * np.conj(kraus[k, p, j])
    n_out = left * d_out * right
    out = np.zeros((n_out, n_out), dtype=np.complex128)
    for a in range(left):
        for b in range(right):
            for c in range(left):
                for i in range(d_in):
                    for j in range(d_in):
                        src_row = (a * d_in + i) * right + b
                        src_col = (c * d_in + j) * right
                        for o in range(d_out):
                            dst_row = (a * d_out + o) * right + b
                            for p in range(d_out):
                                w = sup[o, p, i, j]
                                if w == 0:
                                    continue
                                dst_col = (c * d_out + p) * right
                                for d in range(right):
                                    out[dst_row, dst_col + d] += w * rho[src_row, src_col + d]
    return out


def _partial_trace_loops(t4):
    # t4 has shape (K, T, K, T); trace over the T axes
    kdim, tdim = t4.shape[0], t4.shape[1]
    out = np.zeros((kdim, kdim), dtype=np.complex128)
    for i in range(kdim):
        for j in range(kdim):
            acc = 0j
            for t in range(tdim):
                acc += t4[i, t, j, t]
            out[i, j] = acc
    return out


def partial_trace_numpy(t4):
    """Trace a ``(K, T, K, T)`` tensor over its ``T`` axes."""
    return np.einsum("itjt->ij", t4)


if HAS_NUMBA:
    _local_channel_jit = numba.njit(cache=True)(_local_channel_loops)
    _partial_trace_jit = numba.njit(cache=True)(_partial_trace_loops)

    def local_channel_numba(rho, kraus, left, right):
        return _local_channel_jit(
            np.ascontiguousarray(rho, dtype=np.complex128),
            np.ascontiguousarray(kraus, dtype=np.complex128),
            left,
            right,
        )

    def partial_trace_numba(t4):
        return _partial_trace_jit(np.ascontiguousarray(t4, dtype=np.complex128))

else:  # pragma: no cover
    local_channel_numba = local_channel_numpy
    partial_trace_numba = partial_trace_numpy


def local_channel(rho, kraus, left, right):
    if USE_NUMBA and max(kraus.shape[1:]) <= NUMBA_MAX_LOCAL_DIM:
        return local_channel_numba(rho, kraus, left, right)
    return local_channel_numpy(rho, kraus, left, right)


def partial_trace_kernel(t4):
    if USE_NUMBA:
        return partial_trace_numba(t4)
    return partial_trace_numpy(t4)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
