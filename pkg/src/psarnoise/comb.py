"""Link product and normalization checks for quantum networks (combs)."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Optional, Sequence

import numpy as np

from .tensor_core import (
    PSD_TOL,
    LabeledOperator,
    LayoutError,
    SpaceLayout,
    min_eigenvalue,
    partial_trace,
    permute,
)

NORMALIZATION_TOL = 1e-9


def link_product(x: LabeledOperator, y: LabeledOperator) -> LabeledOperator:
    """Contract ``x`` and ``y`` over the labels they share.

    Computes ``Tr_b[(x^{T_b} (x) I_c)(I_a (x) y)]`` where ``b`` are the shared
    labels. The result lives on ``x``'s private factors followed by ``y``'s.
    """
    if not (x.is_square and y.is_square):
        raise LayoutError("link product needs square operators")
    shared = [label for label in x.labels if label in y.layout]
    for label in shared:
        if x.layout.dim_of(label) != y.layout.dim_of(label):
            raise LayoutError(
                f"shared label {label!r} has dim {x.layout.dim_of(label)} in x "
                f"but {y.layout.dim_of(label)} in y"
            )
    a_labels = [label for label in x.labels if label not in shared]
    c_labels = [label for label in y.labels if label not in shared]
    a_lay = x.layout.select(a_labels)
    b_lay = x.layout.select(shared)
    c_lay = y.layout.select(c_labels)
    da, db, dc = a_lay.total_dim, b_lay.total_dim, c_lay.total_dim

    xm = permute(x, a_labels + shared).matrix.reshape(da, db, da, db)
    ym = permute(y, shared + c_labels).matrix.reshape(db, dc, db, dc)
    # the transpose on b is folded into the index pattern: X[a, s, a', t] Y[s, c, t, c']
    out = np.einsum("asxt,scty->acxy", xm, ym, optimize=True).reshape(da * dc, da * dc)
    return LabeledOperator.square(out, a_lay.concat(c_lay))


def link_chain(ops: Iterable[LabeledOperator]) -> LabeledOperator:
    ops = list(ops)
    out = ops[0]
    for op in ops[1:]:
        out = link_product(out, op)
    return out


@dataclass(frozen=True)
class NetworkCheck:
    """Outcome of a network validity check; truthy iff ``ok``."""

    ok: bool
    level: Optional[int] = None
    reason: str = ""
    deviation: float = 0.0

    def __bool__(self):
        return self.ok


def is_deterministic_network(
    r: LabeledOperator,
    causal_order: Sequence[tuple[Optional[Hashable], Optional[Hashable]]],
    tol: float = NORMALIZATION_TOL,
) -> NetworkCheck:
    """Check positivity and ``Tr_{out_k} R^k = I_{in_k} (x) R^{k-1}`` for every slot.

    ``causal_order`` lists ``(in_label, out_label)`` per slot, earliest first;
    ``None`` marks a trivial (one-dimensional) space. ``R^0 = 1``.
    """
    if not r.is_square:
        return NetworkCheck(False, None, "operator is not square")
    declared = [lab for pair in causal_order for lab in pair if lab is not None]
    if len(set(declared)) != len(declared) or set(declared) != set(r.labels):
        return NetworkCheck(False, None, f"causal order {declared} does not match labels {r.labels}")
    try:
        lam = min_eigenvalue(r)
    except ValueError as exc:
        return NetworkCheck(False, None, str(exc))
    if lam < -PSD_TOL:
        return NetworkCheck(False, None, f"not positive semidefinite (min eigenvalue {lam:.3e})", -lam)

    scalar_one = LabeledOperator.square(np.eye(1), SpaceLayout(()))
    current = r
    for k in range(len(causal_order), 0, -1):
        in_label, out_label = causal_order[k - 1]
        traced = partial_trace(current, [out_label]) if out_label is not None else current
        if k == 1:
            previous = scalar_one
        elif in_label is None:
            previous = traced
        else:
            previous = partial_trace(traced, [in_label]).scaled(1.0 / traced.layout.dim_of(in_label))
        if in_label is None:
            expected = previous
        else:
            expected = _tensor_identity(previous, in_label, traced.layout.dim_of(in_label), traced.labels)
        dev = traced.max_abs_diff(expected)
        if dev > tol:
            return NetworkCheck(False, k, f"normalization fails at level {k} (deviation {dev:.3e})", dev)
        current = previous
    return NetworkCheck(True)


def _tensor_identity(op: LabeledOperator, label, dim: int, order) -> LabeledOperator:
    eye = LabeledOperator.identity(SpaceLayout(((label, dim),)))
    full = LabeledOperator.square(np.kron(eye.matrix, op.matrix), eye.layout.concat(op.layout))
    return permute(full, list(order))


def is_probabilistic_network(
    s: LabeledOperator,
    output_labels: Iterable[Hashable],
    tol: float = NORMALIZATION_TOL,
) -> NetworkCheck:
    """Necessary conditions for ``s`` to be a probabilistic network.

    ``s`` must be PSD and its induced map trace non-increasing:
    ``Tr_out(s) <= I_in``. Existence of a completing deterministic network is
    not decided.
    """
    if not s.is_square:
        return NetworkCheck(False, None, "operator is not square")
    output_labels = list(output_labels)
    try:
        lam = min_eigenvalue(s)
    except ValueError as exc:
        return NetworkCheck(False, None, str(exc))
    if lam < -PSD_TOL:
        return NetworkCheck(False, None, f"not positive semidefinite (min eigenvalue {lam:.3e})", -lam)
    marginal = partial_trace(s, output_labels)
    gap = LabeledOperator.identity(marginal.layout) - marginal
    slack = min_eigenvalue(gap) if len(marginal.layout) else float(gap.matrix[0, 0].real)
    if slack < -tol:
        return NetworkCheck(False, None, f"trace-increasing (min eigenvalue of I - Tr_out S is {slack:.3e})", -slack)
    return NetworkCheck(True)

