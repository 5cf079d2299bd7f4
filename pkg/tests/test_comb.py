import numpy as np
import pytest

from psarnoise.channel import (
    NoiseModel,
    identity_channel,
    kraus_to_choi,
    phase_gate_unitary,
    unitary_choi,
)
from psarnoise.comb import is_deterministic_network, is_probabilistic_network, link_chain, link_product
from psarnoise.psar import retrieval_operator, retrieve, store
from psarnoise.tensor_core import (
    LabeledOperator,
    LayoutError,
    embed,
    kron,
    partial_trace,
    partial_transpose,
    permute,
)

from conftest import random_channel, random_density


def literal_link(x, y):
    """Embed both into the union layout, multiply, trace the shared labels."""
    shared = [label for label in x.labels if label in y.layout]
    union = x.layout.concat(y.layout.without(shared))
    xe = embed(partial_transpose(x, shared), union)
    ye = embed(y, union)
    return partial_trace(xe @ ye, shared)


def rand_op(rng, *factors):
    dim = int(np.prod([d for _, d in factors]))
    return LabeledOperator.square(rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim)), factors)


def test_identity_comb_transports_state(rng):
    rho = LabeledOperator.square(random_density(rng, 2), [("a", 2)])
    out = link_product(kraus_to_choi(identity_channel(), in_label="a", out_label="b"), rho)
    assert out.labels == ("b",)
    assert np.abs(out.matrix - rho.matrix).max() < 1e-15


def test_composition_matches_kraus_product(rng):
    for _ in range(20):
        a, b = random_channel(rng), random_channel(rng)
        ca = kraus_to_choi(a, in_label="0", out_label="1")
        cb = kraus_to_choi(b, in_label="1", out_label="2")
        composed = permute(link_product(ca, cb), ["2", "0"])
        expected = kraus_to_choi(a.then(b), in_label="0", out_label="2")
        assert composed.max_abs_diff(expected) <= 1e-12


def test_matches_literal_oracle(rng):
    x = rand_op(rng, ("a", 2), ("s", 3), ("t", 2))
    y = rand_op(rng, ("t", 2), ("c", 2), ("s", 3))
    fast = link_product(x, y)
    assert fast.labels == ("a", "c")
    assert fast.max_abs_diff(literal_link(x, y)) <= 1e-11


def test_no_shared_labels_is_tensor_product(rng):
    x, y = rand_op(rng, ("a", 2)), rand_op(rng, ("b", 3))
    assert link_product(x, y).max_abs_diff(kron(x, y)) < 1e-14


def test_full_contraction_is_scalar(rng):
    x, y = rand_op(rng, ("a", 2), ("b", 2)), rand_op(rng, ("b", 2), ("a", 2))
    out = link_product(x, y)
    assert out.matrix.shape == (1, 1)
    expected = np.trace(permute(partial_transpose(x, ["a", "b"]), ["b", "a"]).matrix @ y.matrix)
    assert abs(out.matrix[0, 0] - expected) < 1e-11


def test_dimension_mismatch():
    with pytest.raises(LayoutError, match="'s'"):
        link_product(LabeledOperator.identity([("s", 2)]), LabeledOperator.identity([("s", 3)]))


def test_retrieval_on_noiseless_memory():
    phi = 0.4
    out = link_product(retrieval_operator(2).operator, store(2, NoiseModel.depolarizing(1.0), phi).rho)
    expected = (2 / 3) * unitary_choi(phase_gate_unitary(phi), in_label="C", out_label="D").matrix
    assert np.abs(out.matrix - expected).max() < 1e-12


def test_commutative_up_to_permutation(rng):
    for _ in range(20):
        x = rand_op(rng, ("a", 2), ("b", 3))
        y = rand_op(rng, ("b", 3), ("c", 2))
        xy, yx = link_product(x, y), link_product(y, x)
        assert permute(xy, yx.labels).max_abs_diff(yx) <= 1e-12


def test_associative(rng):
    for _ in range(20):
        x = rand_op(rng, ("a", 2), ("b", 2))
        y = rand_op(rng, ("b", 2), ("c", 3))
        z = rand_op(rng, ("c", 3), ("d", 2))
        left = link_product(link_product(x, y), z)
        right = link_product(x, link_product(y, z))
        assert left.max_abs_diff(right) <= 1e-11
        assert link_chain([x, y, z]).max_abs_diff(left) == 0


def test_probability_conservation(rng):
    for _ in range(20):
        ca = kraus_to_choi(random_channel(rng), in_label="0", out_label="1")
        cb = kraus_to_choi(random_channel(rng), in_label="1", out_label="2")
        rho = LabeledOperator.square(random_density(rng, 2), [("0", 2)])
        total = link_product(link_product(ca, cb), rho).trace()
        assert abs(total - 1) < 1e-12


def test_deterministic_unitary_one_slot():
    c = unitary_choi(phase_gate_unitary(0.3), in_label="0", out_label="1")
    assert is_deterministic_network(c, [("0", "1")])


def test_deterministic_rejects_trace_decreasing():
    c = kraus_to_choi(identity_channel(), in_label="0", out_label="1").scaled(0.5)
    check = is_deterministic_network(c, [("0", "1")])
    assert not check
    assert check.level == 1


def test_deterministic_two_slot_product(rng):
    ca = kraus_to_choi(random_channel(rng), in_label="0", out_label="1")
    cb = kraus_to_choi(random_channel(rng), in_label="2", out_label="3")
    assert is_deterministic_network(kron(ca, cb), [("0", "1"), ("2", "3")])


def test_deterministic_two_slot_comb_with_memory(rng):
    # channel 0->(1, m) followed by channel (2, m)->3 with m traced: a genuine comb
    first = random_channel(rng, d_in=2, d_out=4)
    second = random_channel(rng, d_in=4, d_out=2)
    c1 = permute(LabeledOperator.square(kraus_to_choi(first).matrix, [("1", 2), ("m", 2), ("0", 2)]), ["1", "m", "0"])
    c2 = LabeledOperator.square(kraus_to_choi(second).matrix, [("3", 2), ("2", 2), ("m", 2)])
    comb = permute(link_product(c1, c2), ["0", "1", "2", "3"])
    assert is_deterministic_network(comb, [("0", "1"), ("2", "3")])
    # swapping the causal order breaks normalization
    assert not is_deterministic_network(comb, [("2", "3"), ("0", "1")])


def test_deterministic_rejects_non_psd():
    c = LabeledOperator.square(np.diag([1.0, -1.0, 1.0, 1.0]), [("1", 2), ("0", 2)])
    check = is_deterministic_network(c, [("0", "1")])
    assert not check and "positive" in check.reason


def test_probabilistic_examples():
    rs = retrieval_operator(2).operator
    assert is_probabilistic_network(rs, ["D"])
    two_id = kraus_to_choi(identity_channel(), in_label="0", out_label="1").scaled(2)
    assert not is_probabilistic_network(two_id, ["1"])
    zero = LabeledOperator.square(np.zeros((4, 4)), [("1", 2), ("0", 2)])
    assert is_probabilistic_network(zero, ["1"])


def test_retrieval_trace_bounded_by_success():
    rs = retrieval_operator(3)
    choi = retrieve(rs, store(3, NoiseModel.dephasing(0.2), 1.0))
    assert choi.trace().real / 2 <= 1 + 1e-12
