"""Shared fixtures: the small worked-example circuits and hand-built schemes."""
from __future__ import annotations

import pytest

from qslice import parse_circuit
from qslice.scheme import (
    Apply,
    ComputationScheme,
    Defer,
    EmitSlice,
    GateRef,
    Merge,
    SliceLoop,
    Transform,
)

TWO_QUBIT_EXAMPLE = """\
qubits 2
h q[0]
x q[1]
--
cx q[0],q[1]
--
z q[0]
y q[1]
"""

# 4x1 chain, depth 15 compacted to 9 layers (one leading Hadamard layer
# plus eight): the hand-partitioned slicing showcase.
CHAIN_EXAMPLE = """\
qubits 4
h q[0]
h q[1]
h q[2]
h q[3]
--
cz q[1],q[2]
--
t q[1]
t q[2]
--
cz q[0],q[1]
--
cz q[2],q[3]
--
t q[0]
y q[1]
x q[2]
t q[3]
--
cz q[1],q[2]
--
x q[1]
t q[2]
--
cz q[0],q[1]
"""


@pytest.fixture
def two_qubit_circuit():
    return parse_circuit(TWO_QUBIT_EXAMPLE)


@pytest.fixture
def chain_circuit():
    return parse_circuit(CHAIN_EXAMPLE)


@pytest.fixture
def baseline_scheme():
    """Evolve both qubits separately, merge, finish on the pair."""
    return ComputationScheme(
        n_qubits=2,
        actions=(
            Apply("s0", GateRef(0, 0)),
            Apply("s1", GateRef(0, 1)),
            Merge("s0", "s1", ()),
            Apply("s0", GateRef(1, 0)),
            Apply("s0", GateRef(2, 0)),
            Apply("s0", GateRef(2, 1)),
            EmitSlice(("q0", "q1")),
        ),
    )


@pytest.fixture
def deferred_scheme():
    """Defer the entangling gate, assigning it to the bottom subcircuit."""
    return ComputationScheme(
        n_qubits=2,
        actions=(
            Apply("s0", GateRef(0, 0)),
            Apply("s1", GateRef(0, 1)),
            Defer(GateRef(1, 0), "s1", ("e0", "e1")),
            Apply("s0", GateRef(2, 0)),
            Apply("s1", GateRef(2, 1)),
            Merge("s0", "s1", ("e0",)),
            EmitSlice(("q0", "q1")),
        ),
    )


@pytest.fixture
def sliced_scheme():
    """Diagonalize the CX and slice the top qubit in the right subcircuit.

    Rewritten layers: [h q0, x q1] [h q1] [cz q0,q1] [h q1, z q0] [y q1].
    """
    return ComputationScheme(
        n_qubits=2,
        actions=(
            Transform(GateRef(1, 0)),
            Apply("s0", GateRef(0, 0)),
            Apply("s1", GateRef(0, 1)),
            Apply("s1", GateRef(1, 0)),
            SliceLoop(),
            Apply("s1", GateRef(2, 0)),
            Apply("s1", GateRef(3, 0)),
            Apply("s1", GateRef(3, 1)),
            Apply("s1", GateRef(4, 0)),
            Merge("s1", "s0", ()),
            EmitSlice(("q1",)),
        ),
        sliced=("q0",),
    )


@pytest.fixture
def chain_sliced_scheme():
    """Hand schedule of the chain example: 8 slices, size-2 state vectors."""
    return ComputationScheme(
        n_qubits=4,
        actions=(
            SliceLoop(),
            # bottom pair first: it receives the deferred gate
            Apply("s2", GateRef(0, 2)),
            Defer(GateRef(1, 0), "s2", ("e0",)),
            Apply("s2", GateRef(2, 1)),
            Apply("s3", GateRef(0, 3)),
            Apply("s2", GateRef(4, 0)),
            Apply("s2", GateRef(5, 2)),
            Apply("s2", GateRef(7, 1)),
            # top pair
            Apply("s1", GateRef(0, 1)),
            Apply("s1", GateRef(2, 0)),
            Apply("s0", GateRef(0, 0)),
            Apply("s1", GateRef(3, 0)),
            Merge("s1", "s2", ()),
            Apply("s1", GateRef(5, 1)),
            Apply("s0", GateRef(5, 0)),
            Apply("s3", GateRef(5, 3)),
            Apply("s1", GateRef(6, 0)),
            Apply("s1", GateRef(7, 0)),
            Apply("s1", GateRef(8, 0)),
            Merge("s1", "s0", ()),
            Merge("s1", "s3", ()),
            EmitSlice(("q1",)),
        ),
        sliced=("q0", "q2", "q3"),
    )
