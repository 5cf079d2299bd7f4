"""Probabilistic storage and retrieval of qubit phase gates under noise.

Registers:
  ``A0..A{N-1}``  probe qubits fed to the N gate uses (become ``B0..B{N-1}``)
  ``Ap``          ancilla, compressed to dimension ``N + 1``
  ``C``, ``D``    input and output of the retrieved channel

The basis vector ``|jbar>`` of N qubits is ``|0...0 1...1>`` with ``j`` ones at
the end, i.e. integer index ``2**j - 1`` (qubit 0 most significant).
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .channel import NoiseKind, NoiseModel, apply_kraus, kraus_to_choi, noisy_phase_gate
from .tensor_core import (
    PSD_TOL,
    LabeledOperator,
    LayoutError,
    SpaceLayout,
    kron_all,
    min_eigenvalue,
    permute,
)

N_MAX = 10
N_MAX_FULL_LINK = 4
FAMILY_TOL = 1e-6

ANCILLA = "Ap"
IN = "C"
OUT = "D"


def probe_label(i: int) -> str:
    return f"A{i}"


def memory_label(i: int) -> str:
    return f"B{i}"


def jbar_index(j: int) -> int:
    return (1 << j) - 1


def jbar_vector(n: int, j: int) -> np.ndarray:
    v = np.zeros(2**n, dtype=np.complex128)
    v[jbar_index(j)] = 1.0
    return v


def _check_n(n: int, limit: int = N_MAX) -> int:
    if int(n) != n or not 1 <= n <= limit:
        raise ValueError(f"number of uses must be an integer in [1, {limit}], got {n}")
    return int(n)


def memory_layout(n: int) -> SpaceLayout:
    return SpaceLayout(tuple((memory_label(i), 2) for i in range(n)) + ((ANCILLA, n + 1),))


@dataclass(frozen=True, eq=False)
class ProbeState:
    n_uses: int
    vector: np.ndarray
    layout: SpaceLayout

    def density(self) -> LabeledOperator:
        return LabeledOperator.from_ket(self.vector, self.layout)


@dataclass(frozen=True, eq=False)
class MemoryState:
    n_uses: int
    rho: LabeledOperator

    def check(self, tol: float = PSD_TOL) -> None:
        tr = self.rho.trace()
        if abs(tr - 1) > tol:
            raise ValueError(f"memory state has trace {tr}")
        lam = min_eigenvalue(self.rho)
        if lam < -tol:
            raise ValueError(f"memory state is not PSD (min eigenvalue {lam:.3e})")


@dataclass(frozen=True, eq=False)
class RetrievalOperator:
    """Retrieval Choi operator kept as a factor: ``R = factor @ factor^dagger``.

    Columns of ``factor`` are vectors on ``layout`` (memory factors, then C, D).
    """

    n_uses: int
    factor: np.ndarray
    layout: SpaceLayout

    @property
    def operator(self) -> LabeledOperator:
        """Dense operator; only sensible for small ``n_uses``."""
        return LabeledOperator.square(self.factor @ self.factor.conj().T, self.layout)


@dataclass(frozen=True)
class RetrievedDecomposition:
    """``choi = p [a |U_phase>><<U_phase| + b P]`` with ``a + b = 1``."""

    p_success: float
    unitary_weight: float
    dephasing_weight: float
    phase: float
    residual_norm: float

    @property
    def q_prime(self) -> float:
        return self.unitary_weight


class OutOfModelFamily(ValueError):
    """The operator is not of the form ``alpha |U>><<U| + beta P``."""

    def __init__(self, residual: float):
        super().__init__(f"retrieved operator is out of the U/P model family (residual {residual:.3e})")
        self.residual = residual


def probe_state(n: int) -> ProbeState:
    """``(N+1)^(-1/2) sum_j |jbar>_A |j>_Ap``."""
    n = _check_n(n)
    d = n + 1
    vec = np.zeros(2**n * d, dtype=np.complex128)
    for j in range(d):
        vec[jbar_index(j) * d + j] = 1.0
    vec /= np.sqrt(d)
    layout = SpaceLayout(tuple((probe_label(i), 2) for i in range(n)) + ((ANCILLA, d),))
    return ProbeState(n, vec, layout)


def store(n: int, noise: NoiseModel, phi: float) -> MemoryState:
    """Feed the probe through N independent uses of the noisy phase gate."""
    probe = probe_state(n)
    gate = noisy_phase_gate(noise, phi)
    rho = probe.density()
    for i in range(n):
        rho = apply_kraus(gate, rho, probe_label(i))
    rho = rho.relabel({probe_label(i): memory_label(i) for i in range(n)})
    mem = MemoryState(n, rho)
    tr = rho.trace()
    if abs(tr - 1) > 1e-9:
        raise RuntimeError(f"storage lost normalization (trace {tr})")
    return mem


def store_by_link_product(n: int, noise: NoiseModel, phi: float) -> MemoryState:
    """Storage as ``E^{(x)N} * |Psi><Psi|`` built from explicit Choi operators.

    Independent of :func:`store`; limited to ``n <= N_MAX_FULL_LINK``.
    """
    from .comb import link_product

    n = _check_n(n, N_MAX_FULL_LINK)
    gate = noisy_phase_gate(noise, phi)
    chois = [kraus_to_choi(gate, in_label=probe_label(i), out_label=memory_label(i)) for i in range(n)]
    rho = link_product(kron_all(chois), probe_state(n).density())
    return MemoryState(n, permute(rho, memory_layout(n).labels))


def retrieval_operator(n: int) -> RetrievalOperator:
    """``R_s = sum_J |v_J><v_J|``, ``v_J = |J,J>_M |00>_CD + |J+1,J+1>_M |11>_CD``.

    Here ``|j,j>_M = |jbar>_B |j>_Ap``; R_s vanishes off that span.
    """
    n = _check_n(n)
    mlay = memory_layout(n)
    layout = mlay.concat(SpaceLayout(((IN, 2), (OUT, 2))))
    d = n + 1
    factor = np.zeros((layout.total_dim, n), dtype=np.complex128)
    for big_j in range(n):
        for k in (0, 1):
            m = jbar_index(big_j + k) * d + (big_j + k)
            factor[m * 4 + 3 * k, big_j] = 1.0  # |kk>_CD has index 3k
    return RetrievalOperator(n, factor, layout)


def retrieve(rs: RetrievalOperator, mem: MemoryState) -> LabeledOperator:
    """``R_s * Psi = Tr_M[R_s (Psi^T (x) I_CD)]``, a Choi operator on ``[C, D]``.

    Evaluated through the factor of R_s: ``sum_J W_J^T Psi conj(W_J)`` where
    ``W_J`` is column J reshaped to ``(dim M, 4)``.
    """
    if rs.n_uses != mem.n_uses:
        raise LayoutError(f"retrieval built for N={rs.n_uses} but memory holds N={mem.n_uses}")
    mlay = rs.layout.without([IN, OUT])
    if set(mlay.factors) != set(mem.rho.layout.factors):
        raise LayoutError(f"memory layout {mem.rho.layout.factors} does not match {mlay.factors}")
    psi = permute(mem.rho, mlay.labels).matrix
    w = rs.factor.T.reshape(rs.factor.shape[1], mlay.total_dim, 4)
    out = np.einsum("jmc,mn,jnd->cd", w, psi, w.conj(), optimize=True)
    return LabeledOperator.square(out, SpaceLayout(((IN, 2), (OUT, 2))))


def unitary_family_operator(alpha: float, beta: float, phase: float, layout=None) -> LabeledOperator:
    """``alpha |U_phase>><<U_phase| + beta P`` on a two-qubit layout."""
    u = np.array([1, 0, 0, np.exp(1j * phase)], dtype=np.complex128)
    p = np.diag([1, 0, 0, 1]).astype(np.complex128)
    layout = layout or SpaceLayout(((IN, 2), (OUT, 2)))
    return LabeledOperator.square(alpha * np.outer(u, u.conj()) + beta * p, layout)


def decompose_retrieved(choi: LabeledOperator, strict: bool = True) -> RetrievedDecomposition:
    """Fit ``choi`` to ``p [a |U_phase>><<U_phase| + b P]`` from its corner entries.

    Raises :class:`OutOfModelFamily` when the reconstruction residual exceeds
    ``FAMILY_TOL`` (unless ``strict`` is false).
    """
    m = choi.matrix
    if m.shape != (4, 4):
        raise LayoutError(f"expected a 4x4 Choi operator, got {m.shape}")
    corner = m[0, 3]
    alpha = float(abs(corner))
    phase = float(np.mod(-np.angle(corner), 2 * np.pi)) if alpha > 1e-14 else 0.0
    beta = float(m[0, 0].real) - alpha
    tr = float(np.trace(m).real)
    recon = unitary_family_operator(alpha, beta, phase, choi.layout)
    residual = float(np.abs(m - recon.matrix).max())
    if strict and residual > FAMILY_TOL:
        raise OutOfModelFamily(residual)
    if tr <= 1e-15:
        return RetrievedDecomposition(0.0, 0.0, 1.0, phase, residual)
    return RetrievedDecomposition(tr / 2, 2 * alpha / tr, 2 * beta / tr, phase, residual)


def theorem1_closed_form(n: int, q: float) -> tuple[float, float]:
    """Depolarizing noise: ``p = N/(N+1) ((1+q)/2)^N``, ``q' = 2q/(1+q)``."""
    p = n / (n + 1) * ((1 + q) / 2) ** n
    return p, 2 * q / (1 + q)


def theorem2_closed_form(n: int, q: float) -> tuple[float, float]:
    """Dephasing noise: ``p = N/(N+1)``, ``q' = q``."""
    return n / (n + 1), q


def closed_form(noise: NoiseModel, n: int) -> tuple[float, float]:
    if noise.kind is NoiseKind.DEPOLARIZING:
        return theorem1_closed_form(n, noise.q)
    return theorem2_closed_form(n, noise.q)


def binomial_expansion_check(n: int, q: float) -> tuple[float, float]:
    """Coefficients of ``|U>><<U|`` and ``P`` in the depolarizing retrieval, as binomial sums."""
    terms = [comb(n, k) * q ** (n - k) * (1 - q) ** k / 2**k for k in range(n + 1)]
    unitary = sum(t * (n - k) for k, t in enumerate(terms)) / (n + 1)
    dephasing = sum(t * k for k, t in enumerate(terms)) / (n + 1)
    return unitary, dephasing


def run_psar(n: int, noise: NoiseModel, phi: float, rs: RetrievalOperator | None = None) -> RetrievedDecomposition:
    """Store, retrieve, decompose."""
    rs = rs if rs is not None else retrieval_operator(n)
    return decompose_retrieved(retrieve(rs, store(n, noise, phi)))
