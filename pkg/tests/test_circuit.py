from __future__ import annotations

import numpy as np
import pytest

from qslice import (
    Circuit,
    CircuitError,
    Gate,
    ParseError,
    generate_random_circuit,
    layerize,
    parse_circuit,
    reference_schrodinger,
    serialize_circuit,
    transform_cx,
)
from qslice.generator import cz_pattern


def test_parse_empty_program():
    c = parse_circuit("qubits 1\n")
    assert c.n_qubits == 1 and c.depth == 0


def test_parse_two_qubit_example(two_qubit_circuit):
    c = two_qubit_circuit
    assert c.n_qubits == 2 and c.depth == 3
    assert [g.kind for g in c.layers[0]] == ["h", "x"]
    assert c.layers[1][0].targets == (0, 1)


def test_parse_out_of_range():
    with pytest.raises(ParseError) as err:
        parse_circuit("qubits 4\nh q[5]\n")
    assert "out of range" in str(err.value)
    assert err.value.line == 2


def test_parse_reports_overlap():
    with pytest.raises(ParseError):
        parse_circuit("qubits 2\nh q[0]\nx q[0]\n")


def test_parse_syntax_error_has_position():
    with pytest.raises(ParseError) as err:
        parse_circuit("qubits 2\nh p[0]\n")
    assert err.value.line == 2


def test_round_trip_identity(two_qubit_circuit, chain_circuit):
    for c in (two_qubit_circuit, chain_circuit):
        assert parse_circuit(serialize_circuit(c)) == c


def test_round_trip_generated():
    c = generate_random_circuit(3, 3, 12, seed=42)
    assert parse_circuit(serialize_circuit(c)) == c


def test_layerize_disjoint_and_sequential():
    one = layerize([Gate("h", (0,)), Gate("h", (1,))], 2)
    assert one.depth == 1
    two = layerize([Gate("h", (0,)), Gate("x", (0,))], 1)
    assert two.depth == 2


def test_layerize_chain_example_depth():
    raw = generate_random_circuit(4, 1, 15, seed=1)
    compact = layerize(list(raw.gates()), 4, raw.geometry)
    assert compact.depth == 9


def test_layer_overlap_rejected():
    with pytest.raises(CircuitError):
        Circuit(2, ((Gate("h", (0,)), Gate("x", (0,))),))


def test_transform_cx_shape(two_qubit_circuit):
    out = transform_cx(two_qubit_circuit, 1, 0)
    kinds = [g.kind for g in out.gates()]
    assert kinds.count("cx") == 0 and kinds.count("cz") == 1
    assert kinds.count("h") == 3  # the original plus two inserted
    assert out.depth == 5


def test_transform_cx_minimal():
    c = parse_circuit("qubits 2\ncx q[0],q[1]\n")
    out = transform_cx(c, 0, 0)
    assert [[g.kind for g in layer] for layer in out.layers] == [
        ["h"],
        ["cz"],
        ["h"],
    ]
    assert out.depth == 3


def test_transform_cx_preserves_state(two_qubit_circuit):
    before = reference_schrodinger(two_qubit_circuit)
    after = reference_schrodinger(transform_cx(two_qubit_circuit, 1, 0))
    assert np.max(np.abs(before - after)) < 1e-12


def test_transform_cx_wrong_gate(two_qubit_circuit):
    with pytest.raises(CircuitError):
        transform_cx(two_qubit_circuit, 0, 0)


def test_benchmark_depth_excludes_hadamard_layer():
    c = generate_random_circuit(2, 2, 7, seed=3)
    assert c.depth == 8
    assert c.benchmark_depth == 7
    assert parse_circuit(TEXT_NO_H).benchmark_depth == 1


TEXT_NO_H = "qubits 2\ncz q[0],q[1]\n"


def test_generator_determinism():
    a = serialize_circuit(generate_random_circuit(3, 2, 10, seed=9))
    b = serialize_circuit(generate_random_circuit(3, 2, 10, seed=9))
    assert a == b
    c = serialize_circuit(generate_random_circuit(3, 2, 10, seed=10))
    assert a != c


def test_generator_single_qubit_has_no_cz():
    c = generate_random_circuit(1, 1, 5, seed=0)
    assert c.n_qubits == 1
    assert all(len(g.targets) == 1 for g in c.gates())


def test_generator_layer_zero_all_hadamard():
    c = generate_random_circuit(2, 3, 6, seed=5)
    assert c.has_leading_hadamard_layer


def test_cz_patterns_are_matchings_and_cover():
    rows, cols = 4, 5
    seen = set()
    for clock in range(8):
        edges = cz_pattern(rows, cols, clock)
        used = [q for e in edges for q in e]
        assert len(used) == len(set(used))
        seen.update(frozenset(e) for e in edges)
    horizontal = {
        frozenset((r * cols + k, r * cols + k + 1))
        for r in range(rows)
        for k in range(cols - 1)
    }
    vertical = {
        frozenset((r * cols + k, (r + 1) * cols + k))
        for r in range(rows - 1)
        for k in range(cols)
    }
    assert seen == horizontal | vertical


def test_generator_gate_count_magnitude():
    # the reference instance of this family has 761 gates at 7x7, depth 27
    c = generate_random_circuit(7, 7, 27, seed=2026)
    assert 300 <= c.gate_count <= 1600


def test_generator_rejects_bad_arguments():
    with pytest.raises(ValueError):
        generate_random_circuit(0, 2, 5, seed=1)
    with pytest.raises(ValueError):
        generate_random_circuit(2, 2, 0, seed=1)
