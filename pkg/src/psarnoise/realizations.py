"""Physical realizations of phase-gate storage and retrieval.

Both schemes are simulated at process level: the data qubit ``X`` starts
maximally entangled with a reference ``R`` (unnormalized ``|I>><<I|``), so every
measurement branch leaves behind the Choi operator ``[X, R]`` of the
conditional operation applied to the data qubit. Probabilities quoted are
``Tr(choi) / 2``, the value for a maximally mixed input; ``input_independent``
records whether the branch probability is the same for every input.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import (
    NoiseModel,
    apply_kraus,
    apply_unitary,
    identity_channel,
    kraus_to_choi,
    noisy_phase_gate,
)
from .psar import N_MAX, RetrievedDecomposition, _check_n, decompose_retrieved, jbar_index
from .tensor_core import LabeledOperator, SpaceLayout, kron, partial_trace, permute

DATA = "X"
REF = "R"

CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=np.complex128)


def _entangled_reference() -> LabeledOperator:
    return kraus_to_choi(identity_channel(2), in_label=REF, out_label=DATA)


def _normalized(choi: LabeledOperator) -> LabeledOperator:
    p = choi.trace().real / 2
    return choi.scaled(1.0 / p) if p > 1e-15 else choi


def _input_independent(choi: LabeledOperator, tol: float = 1e-9) -> bool:
    marginal = partial_trace(choi, [DATA]).matrix
    return float(np.abs(marginal - np.eye(2) * np.trace(marginal) / 2).max()) <= tol


def _branch_on(joint: LabeledOperator, memory_labels: list, indices) -> LabeledOperator:
    """Unnormalized ``Tr_M[(I (x) Pi) joint]`` for ``Pi`` a sum of computational basis projectors."""
    moved = permute(joint, [DATA, REF] + memory_labels)
    dm = moved.matrix.shape[0] // 4
    t = moved.matrix.reshape(4, dm, 4, dm)
    idx = np.asarray(list(indices), dtype=np.int64)
    block = t[:, idx, :, idx].sum(axis=0) if idx.size else np.zeros((4, 4))
    return LabeledOperator.square(block, SpaceLayout(((DATA, 2), (REF, 2))))


@dataclass(frozen=True, eq=False)
class VmcRound:
    round_index: int
    uses_this_round: int
    cumulative_uses: int
    success_probability: float
    conditional_success_probability: float
    cumulative_success_probability: float
    success_channel: RetrievedDecomposition
    failure_channel: RetrievedDecomposition
    success_choi: LabeledOperator
    failure_choi: LabeledOperator
    input_independent: bool


def vmc_run(noise: NoiseModel, phi: float, k_max: int) -> list[VmcRound]:
    """CNOT-feedback scheme with ``2**(k-1)`` gate uses in round ``k``.

    Round k prepares a memory qubit as the noisy gate applied ``2**(k-1)``
    times to ``|+>``, applies CNOT (data qubit controls), and reads the memory:
    0 is success, 1 hands the data qubit to the next round.
    """
    if int(k_max) != k_max or k_max < 1 or 2**k_max - 1 > N_MAX:
        raise ValueError(f"k_max must be an integer with 1 <= k_max and 2**k_max - 1 <= {N_MAX}, got {k_max}")
    gate = noisy_phase_gate(noise, phi)
    plus = LabeledOperator.from_ket(np.array([1, 1]) / np.sqrt(2), [("M", 2)])
    branch = _entangled_reference()
    cumulative = 0.0
    rounds = []
    for k in range(1, int(k_max) + 1):
        uses = 2 ** (k - 1)
        mem = plus
        for _ in range(uses):
            mem = apply_kraus(gate, mem, "M")
        joint = apply_unitary(CNOT, kron(branch, mem), [DATA, "M"])
        success = _branch_on(joint, ["M"], [0])
        failure = _branch_on(joint, ["M"], [1])
        p = success.trace().real / 2
        p_before = branch.trace().real / 2
        cumulative += p
        rounds.append(VmcRound(
            round_index=k,
            uses_this_round=uses,
            cumulative_uses=2**k - 1,
            success_probability=p,
            conditional_success_probability=p / p_before,
            cumulative_success_probability=cumulative,
            success_channel=decompose_retrieved(_normalized(success), strict=False),
            failure_channel=decompose_retrieved(_normalized(failure), strict=False),
            success_choi=success,
            failure_choi=failure,
            input_independent=_input_independent(success) and _input_independent(failure),
        ))
        branch = failure
    return rounds


def vq_probe(n: int) -> np.ndarray:
    """``(N+1)^(-1/2) sum_j |jbar>`` on N qubits."""
    n = _check_n(n)
    v = np.zeros(2**n, dtype=np.complex128)
    v[[jbar_index(j) for j in range(n + 1)]] = 1.0
    return v / np.sqrt(n + 1)


def conditional_shift(n: int) -> np.ndarray:
    """Controlled shift-down ``|c>|tbar> -> |c>|(t - c) mod (N+1) bar>``, identity off the span.

    Acts on the control qubit followed by the N memory qubits.
    """
    n = _check_n(n)
    dm = 2**n
    perm = np.arange(2 * dm)
    for t in range(n + 1):
        src = jbar_index(t)
        dst = jbar_index((t - 1) % (n + 1))
        perm[dm + dst] = dm + src  # row dst takes column src
    u = np.zeros((2 * dm, 2 * dm), dtype=np.complex128)
    u[np.arange(2 * dm), perm] = 1.0
    return u


@dataclass(frozen=True, eq=False)
class VqOutcome:
    projector_label: str
    probability: float
    choi: LabeledOperator
    channel: RetrievedDecomposition
    input_independent: bool

    def probability_for(self, xi: np.ndarray) -> float:
        """Branch probability for the data-qubit density matrix ``xi``."""
        return float(np.trace(self.choi.matrix @ np.kron(np.eye(2), xi.T)).real)


def memory_labels(n: int) -> list[str]:
    return [f"M{i}" for i in range(n)]


def vq_memory(noise: NoiseModel, phi: float, n: int) -> LabeledOperator:
    labels = memory_labels(n)
    gate = noisy_phase_gate(noise, phi)
    omega = LabeledOperator.from_ket(vq_probe(n), [(label, 2) for label in labels])
    for label in labels:
        omega = apply_kraus(gate, omega, label)
    return omega


def vq_run(noise: NoiseModel, phi: float, n: int) -> list[VqOutcome]:
    """Virtual-qudit scheme: noisy storage into ``|Omega>``, conditional shift, memory readout.

    Outcomes, in order: ``success`` (``sum_{j<N} |jbar><jbar|``), ``fail_N``
    (``|Nbar><Nbar|``), then one ``perp:<bits>`` per computational basis state
    outside the virtual qudit.
    """
    n = _check_n(n)
    labels = memory_labels(n)
    joint = kron(_entangled_reference(), vq_memory(noise, phi, n))
    joint = apply_unitary(conditional_shift(n), joint, [DATA] + labels)
    span = [jbar_index(j) for j in range(n + 1)]
    groups = [("success", span[:-1]), ("fail_N", span[-1:])]
    groups += [(f"perp:{m:0{n}b}", [m]) for m in range(2**n) if m not in set(span)]
    outcomes = []
    for name, idx in groups:
        choi = _branch_on(joint, labels, idx)
        outcomes.append(VqOutcome(
            projector_label=name,
            probability=choi.trace().real / 2,
            choi=choi,
            channel=decompose_retrieved(_normalized(choi), strict=False),
            input_independent=_input_independent(choi),
        ))
    return outcomes


def vq_dephasing_closed_form(n: int, q: float) -> tuple[float, float]:
    """Success probability and unitary weight for dephasing noise: ``(N/(N+1), q**N)``.

    Note that :func:`vq_run` finds ``q**N`` on the ``fail_N`` branch, while the
    success block comes out with unitary weight ``q``: its memory states
    ``|mbar>``, ``|(m+1)bar>`` differ in a single qubit.
    """
    return n / (n + 1), q**n
