from __future__ import annotations

import numpy as np
import pytest

from qslice import (
    FlopCounter,
    SliceSelector,
    amplitude,
    build_layer_unitary,
    flops_per_gate_per_amplitude,
    generate_random_circuit,
    parse_circuit,
    plan_heuristic,
    reference_schrodinger,
    run_full,
    run_slice,
    scheme_cost,
)
from qslice.engine import SchemeError, default_selectors
from qslice.executor import iter_slices

HUGE = 1 << 40


def fig4_state():
    # (-i/sqrt(2)) (|00> + |11>), computed by hand from the gate matrices
    return np.array([-1j, 0, 0, -1j]) / np.sqrt(2)


def test_oracle_two_qubit_example(two_qubit_circuit):
    state = reference_schrodinger(two_qubit_circuit)
    assert np.max(np.abs(state - fig4_state())) < 1e-12


def test_oracle_counts_dense_1q_mults():
    c = parse_circuit("qubits 3\nh q[0]\nh q[1]\n")
    counter = FlopCounter()
    reference_schrodinger(c, counter)
    # 2 complex mults per output element per dense 1q gate
    assert counter.multiplications == 2 * 2 * 8
    assert counter.additions == 2 * 8


def test_oracle_respects_bound():
    c = generate_random_circuit(2, 2, 3, seed=0)
    with pytest.raises(ValueError):
        reference_schrodinger(c, max_qubits=3)


def test_layer_unitary_identity_and_hh():
    c = parse_circuit("qubits 2\nid q[0]\nid q[1]\n--\nh q[0]\nh q[1]\n")
    assert np.allclose(build_layer_unitary(c, 0), np.eye(4))
    hh = build_layer_unitary(c, 1)
    assert np.allclose(hh, 0.5 * np.array(
        [[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]]
    ))


def test_layer_unitaries_reproduce_oracle():
    rng = np.random.default_rng(5)
    for seed in range(3):
        c = generate_random_circuit(2, 3, 6, seed=seed)
        state = np.zeros(1 << 6, dtype=complex)
        state[0] = 1.0
        for t in range(c.depth):
            state = build_layer_unitary(c, t) @ state
        assert np.max(np.abs(state - reference_schrodinger(c))) < 1e-12


def test_layer_unitary_is_unitary():
    c = generate_random_circuit(3, 2, 5, seed=8)
    u = build_layer_unitary(c, 2)
    assert np.max(np.abs(u @ u.conj().T - np.eye(u.shape[0]))) < 1e-10


def test_run_full_identity_circuit():
    c = parse_circuit("qubits 3\nid q[0]\n")
    scheme = plan_heuristic(c, HUGE)
    state = run_full(c, scheme)
    assert state[0] == 1 and np.count_nonzero(state) == 1


def test_run_full_all_hadamard():
    c = parse_circuit("qubits 3\nh q[0]\nh q[1]\nh q[2]\n")
    scheme = plan_heuristic(c, HUGE)
    state = run_full(c, scheme)
    assert np.allclose(state, 2 ** -1.5)


def test_hand_schemes_match_oracle(
    two_qubit_circuit, baseline_scheme, deferred_scheme, sliced_scheme
):
    want = fig4_state()
    for scheme in (baseline_scheme, deferred_scheme, sliced_scheme):
        got = run_full(two_qubit_circuit, scheme)
        assert np.max(np.abs(got - want)) < 1e-12


def test_chain_sliced_scheme_matches_oracle(chain_circuit, chain_sliced_scheme):
    want = reference_schrodinger(chain_circuit)
    got = run_full(chain_circuit, chain_sliced_scheme)
    assert np.max(np.abs(got - want)) < 1e-12
    pieces = list(iter_slices(chain_circuit, chain_sliced_scheme))
    assert len(pieces) == 8
    assert all(p.amplitudes.size == 2 for p in pieces)


def test_slice_counter_matches_symbolic_prediction(
    chain_circuit, chain_sliced_scheme
):
    measured = FlopCounter()
    run_full(chain_circuit, chain_sliced_scheme, counter=measured)
    predicted = scheme_cost(chain_circuit, chain_sliced_scheme)
    assert measured.multiplications == predicted.multiplications
    assert measured.additions == predicted.additions


def test_slice_order_independence(chain_circuit, chain_sliced_scheme):
    sels = list(default_selectors(chain_sliced_scheme.sliced))
    forward = [
        run_slice(chain_circuit, chain_sliced_scheme, s).amplitudes for s in sels
    ]
    backward = [
        run_slice(chain_circuit, chain_sliced_scheme, s).amplitudes
        for s in reversed(sels)
    ]
    for f, b in zip(forward, reversed(backward)):
        assert np.array_equal(f, b)


def test_run_slice_requires_complete_selector(chain_circuit, chain_sliced_scheme):
    with pytest.raises(SchemeError):
        run_slice(chain_circuit, chain_sliced_scheme, {"q0": 0})


def test_selector_from_bits(chain_sliced_scheme):
    sel = SliceSelector.from_bits(chain_sliced_scheme, "101")
    assert sel.assignments == {"q0": 1, "q2": 0, "q3": 1}
    with pytest.raises(ValueError):
        SliceSelector.from_bits(chain_sliced_scheme, "10")


def test_norm_of_reconstructed_state(chain_circuit, chain_sliced_scheme):
    state = run_full(chain_circuit, chain_sliced_scheme)
    assert abs(np.linalg.norm(state) - 1) < 1e-10


def test_amplitude_identity_and_uniform():
    ident = parse_circuit("qubits 3\nid q[0]\n")
    scheme = plan_heuristic(ident, HUGE)
    assert amplitude(ident, scheme, "000") == 1
    assert amplitude(ident, scheme, "100") == 0
    allh = parse_circuit("qubits 2\nh q[0]\nh q[1]\n")
    scheme = plan_heuristic(allh, HUGE)
    assert abs(amplitude(allh, scheme, "11") - 0.5) < 1e-12


def test_amplitude_on_two_qubit_example(two_qubit_circuit, sliced_scheme):
    amp = amplitude(two_qubit_circuit, sliced_scheme, "00")
    assert abs(abs(amp) ** 2 - 0.5) < 1e-12


def test_amplitude_random_circuit_matches_oracle():
    c = generate_random_circuit(5, 2, 12, seed=17)
    scheme = plan_heuristic(c, HUGE)
    oracle = reference_schrodinger(c)
    rng = np.random.default_rng(3)
    for _ in range(5):
        idx = int(rng.integers(1 << 10))
        bits = "".join(str((idx >> q) & 1) for q in range(10))
        assert abs(amplitude(c, scheme, bits) - oracle[idx]) < 1e-12


def test_amplitude_rejects_wrong_length(two_qubit_circuit, baseline_scheme):
    with pytest.raises(ValueError):
        amplitude(two_qubit_circuit, baseline_scheme, "0")


def test_jobs_parallel_slices_identical(chain_circuit, chain_sliced_scheme):
    seq = run_full(chain_circuit, chain_sliced_scheme, jobs=1)
    par = run_full(chain_circuit, chain_sliced_scheme, jobs=4)
    assert np.array_equal(seq, par)


def test_flops_per_gate_per_amplitude_dense_1q():
    c = parse_circuit("qubits 4\nh q[0]\nh q[1]\nh q[2]\nh q[3]\n")
    counter = FlopCounter()
    reference_schrodinger(c, counter)
    ratio = flops_per_gate_per_amplitude(counter, c, 1 << 4)
    # dense 1q: 2 mults + 1 add per amplitude = 14 real flops
    assert ratio == 14.0


def test_flops_ratio_guards():
    c = parse_circuit("qubits 2\nh q[0]\n")
    with pytest.raises(ValueError):
        flops_per_gate_per_amplitude(FlopCounter(), c, 0)
