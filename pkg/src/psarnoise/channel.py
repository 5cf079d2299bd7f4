"""Qubit channels in Kraus and Choi form, plus the noisy phase gates.

A Choi operator here is ``sum_mn Phi(|m><n|) (x) |m><n|`` laid out as
``[out, in]``; for a unitary it equals ``|U>><<U|``.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Hashable, Sequence

import numpy as np

from . import _accel
from .tensor_core import LabeledOperator, LayoutError, SpaceLayout, permute

TP_TOL = 1e-9

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
PAULIS = (I2, X, Y, Z)


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """Trace-preserving channel given by Kraus operators of shape ``(dim_out, dim_in)``."""

    kraus_ops: tuple
    dim_in: int
    dim_out: int

    def __post_init__(self):
        ops = []
        for k in self.kraus_ops:
            k = np.array(k, dtype=np.complex128, copy=True)
            if k.shape != (self.dim_out, self.dim_in):
                raise ValueError(f"Kraus operator has shape {k.shape}, expected {(self.dim_out, self.dim_in)}")
            k.setflags(write=False)
            ops.append(k)
        if not ops:
            raise ValueError("a channel needs at least one Kraus operator")
        object.__setattr__(self, "kraus_ops", tuple(ops))
        defect = np.abs(sum(k.conj().T @ k for k in ops) - np.eye(self.dim_in)).max()
        if defect > TP_TOL:
            raise ValueError(f"Kraus operators are not trace preserving (defect {defect:.3e})")

    @classmethod
    def from_ops(cls, ops: Sequence[np.ndarray]) -> "KrausChannel":
        ops = [np.asarray(k) for k in ops]
        dim_out, dim_in = ops[0].shape
        return cls(tuple(ops), dim_in, dim_out)

    def stacked(self) -> np.ndarray:
        return np.stack(self.kraus_ops)

    def __call__(self, rho: np.ndarray) -> np.ndarray:
        return sum(k @ rho @ k.conj().T for k in self.kraus_ops)

    def then(self, other: "KrausChannel") -> "KrausChannel":
        """``other`` applied after ``self``."""
        if other.dim_in != self.dim_out:
            raise ValueError("dimension mismatch in channel composition")
        return KrausChannel(tuple(b @ a for b in other.kraus_ops for a in self.kraus_ops), self.dim_in, other.dim_out)


class NoiseKind(enum.Enum):
    DEPOLARIZING = "depolarizing"
    DEPHASING = "dephasing"


@dataclass(frozen=True)
class NoiseModel:
    kind: NoiseKind
    q: float

    def __post_init__(self):
        kind = NoiseKind(self.kind)
        object.__setattr__(self, "kind", kind)
        q = float(self.q)
        if not 0.0 <= q <= 1.0:
            raise ValueError(f"noise parameter q must lie in [0, 1], got {q}")
        object.__setattr__(self, "q", q)

    @classmethod
    def depolarizing(cls, q: float) -> "NoiseModel":
        return cls(NoiseKind.DEPOLARIZING, q)

    @classmethod
    def dephasing(cls, q: float) -> "NoiseModel":
        return cls(NoiseKind.DEPHASING, q)

    def with_q(self, q: float) -> "NoiseModel":
        return NoiseModel(self.kind, q)


def phase_gate_unitary(phi: float) -> np.ndarray:
    return np.diag([1.0, np.exp(1j * phi)]).astype(np.complex128)


def unitary_channel(u: np.ndarray) -> KrausChannel:
    return KrausChannel.from_ops([u])


def identity_channel(dim: int = 2) -> KrausChannel:
    return KrausChannel.from_ops([np.eye(dim)])


def depolarizing_kraus() -> list[np.ndarray]:
    # Pauli twirl: C(rho) = (rho + X rho X + Y rho Y + Z rho Z) / 4 = I/2
    return [p / 2 for p in PAULIS]


def dephasing_kraus() -> list[np.ndarray]:
    return [I2 / np.sqrt(2), Z / np.sqrt(2)]


def completely_depolarizing() -> KrausChannel:
    return KrausChannel.from_ops(depolarizing_kraus())


def completely_dephasing() -> KrausChannel:
    return KrausChannel.from_ops(dephasing_kraus())


def noise_kraus(kind: NoiseKind) -> list[np.ndarray]:
    if NoiseKind(kind) is NoiseKind.DEPOLARIZING:
        return depolarizing_kraus()
    return dephasing_kraus()


def mixture(weighted: Sequence[tuple[float, KrausChannel]]) -> KrausChannel:
    """Convex mixture as the union of sqrt(weight)-scaled Kraus sets; zero weights are dropped."""
    ops = [np.sqrt(w) * k for w, ch in weighted if w > 0 for k in ch.kraus_ops]
    return KrausChannel.from_ops(ops)


def noisy_phase_gate(noise: NoiseModel, phi: float) -> KrausChannel:
    """``q U_phi + (1 - q) N`` with ``N`` the completely depolarizing or dephasing channel."""
    q = noise.q
    return mixture([
        (q, unitary_channel(phase_gate_unitary(phi))),
        (1.0 - q, KrausChannel.from_ops(noise_kraus(noise.kind))),
    ])


def kraus_to_choi(ch: KrausChannel, in_label: Hashable = "in", out_label: Hashable = "out") -> LabeledOperator:
    """Choi operator on ``[out_label, in_label]``."""
    layout = SpaceLayout(((out_label, ch.dim_out), (in_label, ch.dim_in)))
    vecs = np.stack([k.reshape(-1) for k in ch.kraus_ops])  # row-major |K>>
    return LabeledOperator.square(vecs.T @ vecs.conj(), layout)


def unitary_choi(u: np.ndarray, in_label: Hashable = "in", out_label: Hashable = "out") -> LabeledOperator:
    return kraus_to_choi(unitary_channel(u), in_label, out_label)


def dephasing_choi(in_label="in", out_label="out") -> LabeledOperator:
    return kraus_to_choi(completely_dephasing(), in_label, out_label)


def apply_kraus(ch: KrausChannel, state: LabeledOperator, target: Hashable) -> LabeledOperator:
    """Act with ``ch`` on the ``target`` factor of ``state``; the label is kept."""
    if not state.is_square:
        raise LayoutError("state must have identical row and column layouts")
    layout = state.layout
    i = layout.index(target)
    dims = layout.dims
    if dims[i] != ch.dim_in:
        raise LayoutError(f"factor {target!r} has dim {dims[i]}, channel expects {ch.dim_in}")
    left = int(np.prod(dims[:i], dtype=np.int64))
    right = int(np.prod(dims[i + 1:], dtype=np.int64))
    out = _accel.local_channel(state.matrix, ch.stacked(), left, right)
    new_layout = SpaceLayout(layout.factors[:i] + ((target, ch.dim_out),) + layout.factors[i + 1:])
    return LabeledOperator.square(out, new_layout)


def apply_choi(choi: LabeledOperator, state: LabeledOperator, target: Hashable) -> LabeledOperator:
    """``Tr_in[choi (state^T on target (x) I_out)]`` with the output relabeled to ``target``.

    ``choi`` must be a two-factor operator laid out as ``[out, in]``.
    """
    if not choi.is_square or len(choi.layout) != 2:
        raise LayoutError("choi must be a square two-factor operator [out, in]")
    if not state.is_square:
        raise LayoutError("state must have identical row and column layouts")
    d_out, d_in = choi.layout.dims
    layout = state.layout
    i = layout.index(target)
    if layout.dims[i] != d_in:
        raise LayoutError(f"factor {target!r} has dim {layout.dims[i]}, Choi input has dim {d_in}")
    rest = [label for label in layout.labels if label != target]
    moved = permute(state, [target] + rest)
    r = moved.matrix.shape[0] // d_in
    s = moved.matrix.reshape(d_in, r, d_in, r)
    c = choi.matrix.reshape(d_out, d_in, d_out, d_in)
    # out[o, a, p, b] = sum_{i, j} C[o, i, p, j] rho[i, a, j, b]
    out = np.einsum("oipj,iajb->oapb", c, s).reshape(d_out * r, d_out * r)
    new = SpaceLayout(((target, d_out),) + moved.layout.factors[1:])
    return permute(LabeledOperator.square(out, new), layout.labels)


def apply_unitary(u: np.ndarray, state: LabeledOperator, labels: Sequence[Hashable]) -> LabeledOperator:
    """Conjugate the joint factor ``labels`` (in that order) of ``state`` by ``u``."""
    if not state.is_square:
        raise LayoutError("state must have identical row and column layouts")
    labels = list(labels)
    layout = state.layout
    rest = [label for label in layout.labels if label not in set(labels)]
    moved = permute(state, labels + rest)
    d = layout.select(labels).total_dim
    if u.shape != (d, d):
        raise LayoutError(f"operator of shape {u.shape} does not act on factors of total dim {d}")
    out = _accel.local_channel(moved.matrix, np.asarray(u, dtype=np.complex128)[None], 1, moved.matrix.shape[0] // d)
    return permute(LabeledOperator.square(out, moved.layout), layout.labels)
