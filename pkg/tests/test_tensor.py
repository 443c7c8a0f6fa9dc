from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qslice import FlopCounter, StateTensor, build_layer_unitary, parse_circuit
from qslice.gates import gate_unitary
from qslice.tensor import (
    TensorError,
    aggregate_operators,
    apply_diag_block,
    apply_gate,
    apply_sliced_diagonal,
    contract_shared,
    defer_grow_dense,
    fix_label,
    initial_state,
    row_restrict,
    tensor_product,
)


def rand_tensor(labels, seed=0):
    rng = np.random.default_rng(seed)
    data = rng.normal(size=(2,) * len(labels)) + 1j * rng.normal(
        size=(2,) * len(labels)
    )
    return StateTensor(labels, data)


def test_initial_state_delta():
    one = initial_state(["q0"])
    assert np.array_equal(one.amplitudes, [1, 0])
    three = initial_state(["q0", "q1", "q2"])
    flat = three.to_vector()
    assert flat[0] == 1 and np.count_nonzero(flat) == 1
    assert abs(three.norm() - 1) < 1e-15


def test_apply_hadamard_column():
    s = apply_gate(initial_state(["q0"]), gate_unitary("h"), ["q0"])
    assert np.allclose(s.amplitudes, [2**-0.5, 2**-0.5])


def test_apply_cz_phase():
    s = StateTensor(["q0", "q1"], [0, 0, 0, 1])
    out = apply_gate(s, gate_unitary("cz"), ["q0", "q1"])
    assert out.amplitudes[1, 1] == -1


def test_apply_counts_match_cost_table():
    c = FlopCounter()
    s = rand_tensor(["a", "b", "c"])
    apply_gate(s, gate_unitary("h"), ["b"], c)
    assert (c.multiplications, c.additions) == (16, 8)  # 2^(n+1), 2^n at n=3
    c = FlopCounter()
    apply_gate(s, gate_unitary("t"), ["a"], c)
    assert (c.multiplications, c.additions) == (8, 0)
    c = FlopCounter()
    apply_gate(s, gate_unitary("cx"), ["a", "c"], c)
    assert (c.multiplications, c.additions) == (32, 24)  # 2^(n+2), 3*2^n
    c = FlopCounter()
    apply_gate(s, gate_unitary("cz"), ["a", "b"], c)
    assert (c.multiplications, c.additions) == (8, 0)


def test_gate_sequence_matches_layer_unitary_oracle():
    text = "qubits 3\nh q[0]\ncx q[1],q[2]\n"
    circuit = parse_circuit(text)
    u = build_layer_unitary(circuit, 0)
    rng = np.random.default_rng(7)
    vec = rng.normal(size=8) + 1j * rng.normal(size=8)
    s = StateTensor(["q0", "q1", "q2"], vec.reshape(2, 2, 2, order="F"))
    s = apply_gate(s, gate_unitary("h"), ["q0"])
    s = apply_gate(s, gate_unitary("cx"), ["q1", "q2"])
    assert np.max(np.abs(s.to_vector() - u @ vec)) < 1e-12


def test_norm_preserved_by_unitaries():
    s = rand_tensor(["a", "b", "c"], seed=3)
    s = StateTensor(s.labels, s.amplitudes / s.norm())
    for kind, on in [("h", ["a"]), ("cx", ["b", "c"]), ("t", ["c"]), ("y", ["b"])]:
        s = apply_gate(s, gate_unitary(kind), on)
    assert abs(s.norm() - 1) < 1e-10


def test_sliced_diagonal_identity_branch():
    s = rand_tensor(["t"], seed=1)
    out = apply_sliced_diagonal(s, gate_unitary("cz"), {"c": 0}, ["c", "t"])
    assert np.allclose(out.amplitudes, s.amplitudes)


def test_sliced_diagonal_row_selection():
    s = rand_tensor(["t"], seed=2)
    out = apply_sliced_diagonal(s, gate_unitary("cz"), {"c": 1}, ["c", "t"])
    expect = s.amplitudes * np.array([1, -1])
    assert np.allclose(out.amplitudes, expect)


def test_slice_then_apply_equals_apply_then_slice():
    # diagonal gates commute with index fixing on uninvolved values
    rng = np.random.default_rng(5)
    for _ in range(10):
        s = rand_tensor(["q0", "q1", "q2"], seed=rng.integers(1 << 30))
        u = gate_unitary("cz")
        whole = apply_gate(s, u, ["q0", "q2"])
        for bit in (0, 1):
            sliced = fix_label(s, "q0", bit)
            part = apply_sliced_diagonal(sliced, u, {"q0": bit}, ["q0", "q2"])
            assert np.max(np.abs(part.amplitudes - fix_label(whole, "q0", bit).amplitudes)) < 1e-12


def test_sliced_diagonal_rejects_dense():
    s = rand_tensor(["t"])
    with pytest.raises(TensorError):
        apply_sliced_diagonal(s, gate_unitary("cx"), {"c": 0}, ["c", "t"])


def test_sliced_diagonal_rejects_stored_fixed_label():
    s = rand_tensor(["c", "t"])
    with pytest.raises(TensorError):
        apply_sliced_diagonal(s, gate_unitary("cz"), {"c": 0}, ["c", "t"])


def test_tensor_product_basis():
    a = StateTensor(["q0"], [1, 0])
    b = StateTensor(["q1"], [0, 1])
    out = tensor_product(a, b)
    assert out.labels == ("q0", "q1")
    assert out.amplitudes[0, 1] == 1 and np.count_nonzero(out.amplitudes) == 1


def test_tensor_product_uniform():
    h = np.array([2**-0.5, 2**-0.5])
    out = tensor_product(StateTensor(["a"], h), StateTensor(["b"], h))
    assert np.allclose(out.amplitudes, 0.5)


@given(st.integers(0, 2**31 - 1), st.integers(0, 2**31 - 1))
@settings(max_examples=25, deadline=None)
def test_tensor_product_norm_multiplies(sa, sb):
    a, b = rand_tensor(["a"], sa), rand_tensor(["b", "c"], sb)
    assert abs(tensor_product(a, b).norm() - a.norm() * b.norm()) < 1e-10


def test_contract_empty_shared_is_product():
    a, b = rand_tensor(["a"], 1), rand_tensor(["b"], 2)
    assert np.allclose(
        contract_shared(a, b, ()).amplitudes, tensor_product(a, b).amplitudes
    )


def test_contract_delta_tensors():
    d = initial_state(["l", "a"])  # delta over two labels
    e = initial_state(["l", "b"])
    out = contract_shared(d, e, ("l",))
    assert out.labels == ("a", "b")
    assert out.amplitudes[0, 0] == 1 and np.count_nonzero(out.amplitudes) == 1


def test_contract_matches_dense_einsum_oracle():
    a = rand_tensor(["i", "l", "m"], 11)
    b = rand_tensor(["l", "m", "j"], 12)
    out = contract_shared(a, b, ("l", "m"))
    oracle = np.einsum("ilm,lmj->ij", a.amplitudes, b.amplitudes)
    assert np.max(np.abs(out.amplitudes - oracle)) < 1e-12


def test_contract_batch_labels():
    a = rand_tensor(["i", "k"], 21)
    b = rand_tensor(["k", "j"], 22)
    out = contract_shared(a, b, (), batch=("k",))
    oracle = np.einsum("ik,kj->ikj", a.amplitudes, b.amplitudes)
    assert out.labels == ("i", "k", "j")
    assert np.max(np.abs(out.amplitudes - oracle)) < 1e-12


def test_fix_label_restriction():
    s = StateTensor(["q0", "q1"], [0, 0, 1, 0])  # |01>: q0=0? little-endian
    # flat [q0,q1] F-order: index 2 -> q0=0, q1=1
    out = fix_label(s, "q0", 0)
    assert out.labels == ("q1",)
    assert np.allclose(out.amplitudes, [0, 1])


def test_fix_commutes_and_reassembles():
    s = rand_tensor(["a", "b", "c"], 4)
    ab = fix_label(fix_label(s, "a", 1), "b", 0)
    ba = fix_label(fix_label(s, "b", 0), "a", 1)
    assert np.array_equal(ab.amplitudes, ba.amplitudes)
    rebuilt = np.stack(
        [fix_label(s, "b", bit).amplitudes for bit in (0, 1)], axis=1
    )
    assert np.array_equal(rebuilt, s.amplitudes)


def test_row_restrict_matches_fix_after_apply():
    s = rand_tensor(["a", "b"], 8)
    u = gate_unitary("h")
    for bit in (0, 1):
        direct = row_restrict(s, u, "a", bit)
        oracle = fix_label(apply_gate(s, u, ["a"]), "a", bit)
        assert np.max(np.abs(direct.amplitudes - oracle.amplitudes)) < 1e-12


def test_defer_grow_dense_matches_full_application():
    # deferred CX against explicit two-qubit evolution
    own = rand_tensor(["b"], 31)
    remote = rand_tensor(["a"], 32)
    u = gate_unitary("cx")
    grown = defer_grow_dense(own, u, "b", "pre", "post", remote_first=True)
    merged = contract_shared(remote.renamed({"a": "pre"}), grown, ("pre",))
    joint = tensor_product(remote, own)
    oracle = apply_gate(joint, u, ["a", "b"])
    # merged labels: (post, b); oracle labels (a, b) with post == a
    assert np.max(np.abs(merged.reordered(("post", "b")).amplitudes
                         - oracle.amplitudes)) < 1e-12


def test_apply_diag_block_grows_and_aligns():
    s = rand_tensor(["a"], 41)
    d = np.diagonal(gate_unitary("cz")).reshape(2, 2)
    grown = apply_diag_block(s, d, ("a", "l"))
    assert grown.labels == ("a", "l")
    for a_bit in (0, 1):
        for l_bit in (0, 1):
            assert (
                abs(
                    grown.amplitudes[a_bit, l_bit]
                    - s.amplitudes[a_bit] * d[a_bit, l_bit]
                )
                < 1e-12
            )


def test_aggregate_pair_of_hadamards_is_identity():
    h = gate_unitary("h")
    total = aggregate_operators([(h, "a"), (h, "a")], ["a"])
    assert np.max(np.abs(total - np.eye(2))) < 1e-12


def test_aggregate_hzh_is_cx():
    h, cz = gate_unitary("h"), gate_unitary("cz")
    total = aggregate_operators(
        [(h, ["t"]), (cz, ["c", "t"]), (h, ["t"])], ["c", "t"]
    )
    assert np.max(np.abs(total - gate_unitary("cx"))) < 1e-12


def test_aggregate_matches_sequential_application():
    rng = np.random.default_rng(77)
    seq = [
        (gate_unitary("sqrt_y"), ["a"]),
        (gate_unitary("cx"), ["b", "a"]),
        (gate_unitary("t"), ["b"]),
    ]
    total = aggregate_operators(seq, ["a", "b"])
    s = rand_tensor(["a", "b"], 55)
    direct = s
    for u, on in seq:
        direct = apply_gate(direct, u, on)
    via_total = apply_gate(s, total, ["a", "b"])
    assert np.max(np.abs(direct.amplitudes - via_total.amplitudes)) < 1e-12


def test_aggregate_bound_enforced():
    with pytest.raises(TensorError):
        aggregate_operators([], [f"l{i}" for i in range(6)])


def test_order_freedom_of_disjoint_simulations():
    # simulating commuting subcircuits in either order, then contracting,
    # gives identical results
    a0, b0 = rand_tensor(["a"], 61), rand_tensor(["b"], 62)
    ua, ub = gate_unitary("sqrt_x"), gate_unitary("y")
    first = contract_shared(apply_gate(a0, ua, ["a"]), apply_gate(b0, ub, ["b"]), ())
    b1 = apply_gate(b0, ub, ["b"])
    a1 = apply_gate(a0, ua, ["a"])
    second = contract_shared(a1, b1, ())
    assert np.array_equal(first.amplitudes, second.amplitudes)


def test_counter_is_monotone():
    c = FlopCounter()
    with pytest.raises(ValueError):
        c.add(mults=-1)
