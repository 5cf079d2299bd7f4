"""Dense operators over labeled tensor-product spaces.

Vectorization is row-major: ``|A>> = sum_mn A[m, n] |m>|n>``, which is exactly
``A.reshape(-1)`` in numpy. Every Choi and link-product routine in the package
inherits this ordering.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Hashable, Iterable, Sequence

import numpy as np

from . import _accel

HERMITIAN_TOL = 1e-9
PSD_TOL = 1e-9


class LayoutError(ValueError):
    """Raised on label collisions, unknown labels or dimension mismatches."""


@dataclass(frozen=True)
class SpaceLayout:
    """Ordered list of ``(label, dim)`` tensor factors."""

    factors: tuple[tuple[Hashable, int], ...]

    def __post_init__(self):
        factors = tuple((label, int(dim)) for label, dim in self.factors)
        object.__setattr__(self, "factors", factors)
        seen = set()
        for label, dim in factors:
            if label in seen:
                raise LayoutError(f"duplicate label {label!r} in layout")
            if dim < 1:
                raise LayoutError(f"factor {label!r} has non-positive dimension {dim}")
            seen.add(label)

    @classmethod
    def of(cls, *factors: tuple[Hashable, int]) -> "SpaceLayout":
        return cls(tuple(factors))

    @property
    def labels(self) -> tuple:
        return tuple(label for label, _ in self.factors)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(dim for _, dim in self.factors)

    @property
    def total_dim(self) -> int:
        return prod(self.dims)

    def dim_of(self, label) -> int:
        return self.dims[self.index(label)]

    def index(self, label) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise LayoutError(f"unknown label {label!r}; layout has {self.labels}") from None

    def __contains__(self, label) -> bool:
        return label in self.labels

    def __len__(self) -> int:
        return len(self.factors)

    def concat(self, other: "SpaceLayout") -> "SpaceLayout":
        clash = set(self.labels) & set(other.labels)
        if clash:
            raise LayoutError(f"label collision: {sorted(map(repr, clash))[0]}")
        return SpaceLayout(self.factors + other.factors)

    def select(self, labels: Iterable) -> "SpaceLayout":
        return SpaceLayout(tuple((label, self.dim_of(label)) for label in labels))

    def without(self, labels: Iterable) -> "SpaceLayout":
        drop = set(labels)
        return SpaceLayout(tuple(f for f in self.factors if f[0] not in drop))

    def relabel(self, mapping: dict) -> "SpaceLayout":
        return SpaceLayout(tuple((mapping.get(label, label), dim) for label, dim in self.factors))


@dataclass(frozen=True, eq=False)
class LabeledOperator:
    """Dense complex matrix with labeled row and column factors.

    The stored matrix is made read-only; operations always return new objects.
    """

    matrix: np.ndarray
    row_layout: SpaceLayout
    col_layout: SpaceLayout

    def __post_init__(self):
        m = np.array(self.matrix, dtype=np.complex128, copy=True)
        if m.ndim != 2:
            raise LayoutError(f"matrix must be 2-D, got shape {m.shape}")
        if m.shape != (self.row_layout.total_dim, self.col_layout.total_dim):
            raise LayoutError(
                f"matrix shape {m.shape} does not match layouts "
                f"({self.row_layout.total_dim}, {self.col_layout.total_dim})"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def square(cls, matrix, layout: SpaceLayout | Sequence[tuple[Hashable, int]]) -> "LabeledOperator":
        if not isinstance(layout, SpaceLayout):
            layout = SpaceLayout(tuple(layout))
        return cls(matrix, layout, layout)

    @classmethod
    def from_ket(cls, vector, layout) -> "LabeledOperator":
        v = np.asarray(vector, dtype=np.complex128).reshape(-1)
        return cls.square(np.outer(v, v.conj()), layout)

    @classmethod
    def identity(cls, layout) -> "LabeledOperator":
        if not isinstance(layout, SpaceLayout):
            layout = SpaceLayout(tuple(layout))
        return cls.square(np.eye(layout.total_dim), layout)

    @property
    def is_square(self) -> bool:
        return self.row_layout == self.col_layout

    @property
    def layout(self) -> SpaceLayout:
        if not self.is_square:
            raise LayoutError("operator has distinct row and column layouts")
        return self.row_layout

    @property
    def labels(self) -> tuple:
        return self.row_layout.labels

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def scaled(self, factor) -> "LabeledOperator":
        return LabeledOperator(self.matrix * factor, self.row_layout, self.col_layout)

    def relabel(self, mapping: dict) -> "LabeledOperator":
        return LabeledOperator(self.matrix, self.row_layout.relabel(mapping), self.col_layout.relabel(mapping))

    def dagger(self) -> "LabeledOperator":
        return LabeledOperator(self.matrix.conj().T, self.col_layout, self.row_layout)

    def __add__(self, other: "LabeledOperator") -> "LabeledOperator":
        other = _aligned(other, self)
        return LabeledOperator(self.matrix + other.matrix, self.row_layout, self.col_layout)

    def __sub__(self, other: "LabeledOperator") -> "LabeledOperator":
        other = _aligned(other, self)
        return LabeledOperator(self.matrix - other.matrix, self.row_layout, self.col_layout)

    def __matmul__(self, other: "LabeledOperator") -> "LabeledOperator":
        if self.col_layout != other.row_layout:
            raise LayoutError("column layout of left operand differs from row layout of right operand")
        return LabeledOperator(self.matrix @ other.matrix, self.row_layout, other.col_layout)

    def max_abs_diff(self, other: "LabeledOperator") -> float:
        other = _aligned(other, self)
        return float(np.abs(self.matrix - other.matrix).max(initial=0.0))

    def __repr__(self):
        return f"LabeledOperator(rows={self.row_layout.factors}, cols={self.col_layout.factors})"


def _aligned(op: LabeledOperator, like: LabeledOperator) -> LabeledOperator:
    """Return ``op`` permuted to the factor order of ``like``."""
    if op.row_layout == like.row_layout and op.col_layout == like.col_layout:
        return op
    if set(op.row_layout.factors) != set(like.row_layout.factors):
        raise LayoutError(f"layouts differ: {op.row_layout.factors} vs {like.row_layout.factors}")
    out = permute(op, like.row_layout.labels)
    if out.col_layout != like.col_layout:
        raise LayoutError("column layouts cannot be aligned")
    return out


def kron(a: LabeledOperator, b: LabeledOperator) -> LabeledOperator:
    """Tensor product; ``a``'s factors come first."""
    a_labels = set(a.row_layout.labels) | set(a.col_layout.labels)
    b_labels = set(b.row_layout.labels) | set(b.col_layout.labels)
    clash = a_labels & b_labels
    if clash:
        raise LayoutError(f"label collision in kron: {sorted(map(repr, clash))[0]}")
    return LabeledOperator(
        np.kron(a.matrix, b.matrix),
        a.row_layout.concat(b.row_layout),
        a.col_layout.concat(b.col_layout),
    )


def kron_all(ops: Iterable[LabeledOperator]) -> LabeledOperator:
    ops = list(ops)
    out = ops[0]
    for op in ops[1:]:
        out = kron(out, op)
    return out


def _axis_order(layout: SpaceLayout, new_order: Sequence) -> list[int]:
    new_order = list(new_order)
    if len(new_order) != len(layout) or set(new_order) != set(layout.labels):
        raise LayoutError(f"{new_order!r} is not a permutation of {layout.labels!r}")
    return [layout.index(label) for label in new_order]


def permute(a: LabeledOperator, new_order: Sequence) -> LabeledOperator:
    """Reorder tensor factors (rows and columns alike) to ``new_order``."""
    rperm = _axis_order(a.row_layout, new_order)
    cperm = _axis_order(a.col_layout, new_order)
    nr = len(rperm)
    t = a.matrix.reshape(a.row_layout.dims + a.col_layout.dims)
    t = t.transpose(rperm + [nr + p for p in cperm])
    row = a.row_layout.select(new_order)
    col = a.col_layout.select(new_order)
    return LabeledOperator(t.reshape(row.total_dim, col.total_dim), row, col)


def partial_trace(a: LabeledOperator, labels: Iterable) -> LabeledOperator:
    """Trace out ``labels``; the remaining factors keep their order."""
    if not a.is_square:
        raise LayoutError("partial trace needs an operator with identical row and column layouts")
    labels = list(labels)
    for label in labels:
        a.layout.index(label)
    keep = [label for label in a.labels if label not in set(labels)]
    moved = permute(a, keep + labels) if labels else a
    kept = a.layout.select(keep)
    k = kept.total_dim
    t = a.layout.select(labels).total_dim
    reduced = _accel.partial_trace_kernel(moved.matrix.reshape(k, t, k, t))
    return LabeledOperator.square(reduced, kept)


def partial_transpose(a: LabeledOperator, labels: Iterable) -> LabeledOperator:
    """Transpose the indicated factors only."""
    labels = list(labels)
    nr = len(a.row_layout)
    axes = list(range(nr + len(a.col_layout)))
    for label in labels:
        i = a.row_layout.index(label)
        j = a.col_layout.index(label)
        if a.row_layout.dims[i] != a.col_layout.dims[j]:
            raise LayoutError(f"factor {label!r} is not square; cannot transpose it")
        axes[i], axes[nr + j] = axes[nr + j], axes[i]
    t = a.matrix.reshape(a.row_layout.dims + a.col_layout.dims).transpose(axes)
    return LabeledOperator(t.reshape(a.matrix.shape), a.row_layout, a.col_layout)


def hermitian_defect(a: LabeledOperator) -> float:
    m = a.matrix
    if m.shape[0] != m.shape[1]:
        return float("inf")
    return float(np.abs(m - m.conj().T).max(initial=0.0))


def is_hermitian(a: LabeledOperator, tol: float = HERMITIAN_TOL) -> bool:
    return a.is_square and hermitian_defect(a) <= tol


def min_eigenvalue(a: LabeledOperator, tol: float = HERMITIAN_TOL) -> float:
    """Smallest eigenvalue of the Hermitian part ``(a + a^dagger)/2``."""
    if not a.is_square:
        raise LayoutError("min_eigenvalue needs a square operator")
    defect = hermitian_defect(a)
    if defect > tol:
        raise ValueError(f"operator is not Hermitian (max |a - a^dagger| = {defect:.3e})")
    h = (a.matrix + a.matrix.conj().T) / 2
    return float(np.linalg.eigvalsh(h)[0])


def is_psd(a: LabeledOperator, tol: float = PSD_TOL) -> bool:
    try:
        return min_eigenvalue(a) >= -tol
    except ValueError:
        return False


def is_density_operator(a: LabeledOperator, tol: float = HERMITIAN_TOL) -> bool:
    """Square, Hermitian, PSD, trace in ``[0, 1]``."""
    if not is_hermitian(a, tol):
        return False
    tr = a.trace().real
    return -tol <= tr <= 1 + tol and is_psd(a, tol)


def embed(a: LabeledOperator, layout: SpaceLayout) -> LabeledOperator:
    """Tensor ``a`` with identities to live on ``layout`` (factor order of ``layout``)."""
    extra = layout.without(a.labels)
    for label, dim in a.layout.factors:
        if layout.dim_of(label) != dim:
            raise LayoutError(f"dimension mismatch on {label!r}")
    full = kron(a, LabeledOperator.identity(extra)) if len(extra) else a
    return permute(full, layout.labels)
