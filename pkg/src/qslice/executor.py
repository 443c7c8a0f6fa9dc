"""Scheme execution, the Schrödinger reference oracle, and flop reporting."""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .circuit import Circuit
from .engine import SchemeError, default_selectors, replay, selector_bits
from .gates import gate_unitary
from .scheme import ComputationScheme
from .tensor import FlopCounter, StateTensor, apply_gate, initial_state

ORACLE_QUBIT_LIMIT = 26
LAYER_UNITARY_LIMIT = 12


@dataclass(frozen=True)
class SliceSelector:
    """Bit assignment for (some of) a scheme's sliced labels."""

    assignments: dict[str, int]

    def complete_for(self, scheme: ComputationScheme) -> bool:
        return set(self.assignments) == set(scheme.sliced)

    @classmethod
    def from_bits(cls, scheme: ComputationScheme, bits: str) -> "SliceSelector":
        order = sorted(scheme.sliced, key=lambda l: int(l[1:]))
        if len(bits) != len(order) or any(b not in "01" for b in bits):
            raise ValueError(
                f"selector needs {len(order)} bits over {order}, got {bits!r}"
            )
        return cls({l: int(b) for l, b in zip(order, bits)})


@dataclass
class AmplitudeSlice:
    """One slice of the final state: fixed bits plus a dense block."""

    fixed_bits: dict[str, int]
    output_labels: tuple[str, ...]
    amplitudes: np.ndarray  # shape (2,)*len(output_labels)

    @property
    def pattern(self) -> str:
        return selector_bits(self.fixed_bits) if self.fixed_bits else ""

    def vector(self) -> np.ndarray:
        """Flat little-endian amplitudes (first output label fastest)."""
        return self.amplitudes.ravel(order="F").copy()


def run_slice(
    circuit: Circuit,
    scheme: ComputationScheme,
    selector: SliceSelector | dict[str, int],
    counter: FlopCounter | None = None,
) -> AmplitudeSlice:
    """Execute one slice of the scheme; deterministic for fixed inputs."""
    if isinstance(selector, SliceSelector):
        assignments = selector.assignments
    else:
        assignments = dict(selector)
    if set(assignments) != set(scheme.sliced):
        raise SchemeError(
            f"selector must fix exactly the sliced labels {sorted(scheme.sliced)}"
        )
    result = replay(circuit, scheme, selectors=[assignments])
    if counter is not None:
        counter.merge(result.counter)
    sel, tensor = result.slices[0]
    return AmplitudeSlice(sel, tensor.labels, tensor.amplitudes)


def iter_slices(circuit: Circuit, scheme: ComputationScheme, jobs: int = 1):
    """All slices in selector order; with jobs > 1 they run concurrently."""
    selectors = list(default_selectors(scheme.sliced))
    if jobs <= 1 or len(selectors) <= 1:
        for sel in selectors:
            yield run_slice(circuit, scheme, sel)
        return
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        futures = [
            pool.submit(run_slice, circuit, scheme, sel) for sel in selectors
        ]
        for fut in futures:  # merged in selector order, not completion order
            yield fut.result()


def run_full(
    circuit: Circuit,
    scheme: ComputationScheme,
    counter: FlopCounter | None = None,
    jobs: int = 1,
) -> np.ndarray:
    """Full state as the ordered concatenation of all slices.

    Returns the flat little-endian state vector (qubit 0 is the least
    significant bit of the index).  Slices may execute concurrently;
    per-slice counters merge in selector order.
    """
    n = circuit.n_qubits
    full = np.zeros((2,) * n, dtype=complex)
    selectors = list(default_selectors(scheme.sliced))

    def one(sel):
        c = FlopCounter()
        return run_slice(circuit, scheme, sel, c), c

    if jobs <= 1 or len(selectors) <= 1:
        results = map(one, selectors)
    else:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, selectors))
    for piece, c in results:
        if counter is not None:
            counter.merge(c)
        block = piece.amplitudes
        index: list = [slice(None)] * n
        for label, bit in piece.fixed_bits.items():
            index[int(label[1:])] = bit
        order = [int(l[1:]) for l in piece.output_labels]
        # block axes follow output_labels; realign them to qubit order
        full[tuple(index)] = (
            np.transpose(block, np.argsort(order)) if len(order) > 1 else block
        )
    return full.ravel(order="F")


def amplitude(circuit: Circuit, scheme: ComputationScheme, bits: str) -> complex:
    """One amplitude of the final state for an outcome bit string.

    ``bits`` lists qubit 0 first.  Only the slice containing the
    outcome is materialized.
    """
    n = circuit.n_qubits
    if len(bits) != n or any(b not in "01" for b in bits):
        raise ValueError(f"expected {n} bits of 0/1, got {bits!r}")
    assignment = {f"q{q}": int(bits[q]) for q in range(n)}
    selector = {l: assignment[l] for l in scheme.sliced}
    piece = run_slice(circuit, scheme, selector)
    coords = tuple(assignment[l] for l in piece.output_labels)
    return complex(piece.amplitudes[coords])


def reference_schrodinger(
    circuit: Circuit,
    counter: FlopCounter | None = None,
    max_qubits: int = ORACLE_QUBIT_LIMIT,
) -> np.ndarray:
    """Layer-by-layer full state evolution: the correctness oracle.

    Returns the flat little-endian state vector.
    """
    n = circuit.n_qubits
    if n > max_qubits:
        raise ValueError(f"{n} qubits exceed the oracle bound of {max_qubits}")
    counter = counter if counter is not None else FlopCounter()
    state = initial_state([f"q{q}" for q in range(n)])
    for layer in circuit.layers:
        for gate in layer:
            u = gate_unitary(gate.kind)
            labels = [f"q{q}" for q in gate.targets]
            state = apply_gate(state, u, labels, counter)
    return state.to_vector()


def build_layer_unitary(circuit: Circuit, layer: int) -> np.ndarray:
    """The full 2^n x 2^n matrix of one layer (test scale only).

    Rows and columns are indexed little-endian to match the flat state
    vectors returned by the oracle and executor.
    """
    n = circuit.n_qubits
    if n > LAYER_UNITARY_LIMIT:
        raise ValueError(
            f"{n} qubits exceed the layer-unitary bound of {LAYER_UNITARY_LIMIT}"
        )
    gates = circuit.layers[layer]
    dim = 1 << n
    out = np.empty((dim, dim), dtype=complex)
    for col in range(dim):
        vec = np.zeros((2,) * n, dtype=complex)
        vec[tuple((col >> q) & 1 for q in range(n))] = 1.0
        state = StateTensor([f"q{q}" for q in range(n)], vec)
        for gate in gates:
            state = apply_gate(
                state, gate_unitary(gate.kind), [f"q{q}" for q in gate.targets]
            )
        out[:, col] = state.to_vector()
    return out


def flops_per_gate_per_amplitude(
    counter: FlopCounter, circuit: Circuit, amplitudes_computed: int
) -> float:
    """Real flops per gate per amplitude: (6 mults + 2 adds) / (gates * amps)."""
    if amplitudes_computed < 1:
        raise ValueError("amplitudes_computed must be at least 1")
    gates = circuit.gate_count
    if gates < 1:
        raise ValueError("circuit has no gates")
    return counter.real_flops() / (gates * amplitudes_computed)


def write_amplitude_csv(path, vector: np.ndarray, n_qubits: int, offset_bits=None):
    """CSV rows ``bitstring,re,im``; bitstring lists qubit 0 first."""
    with open(path, "w") as fh:
        fh.write("bitstring,re,im\n")
        _write_rows(fh, vector, n_qubits, offset_bits)


def _write_rows(fh, vector, n_qubits, fixed: dict[str, int] | None):
    fixed = fixed or {}
    fixed_bits = {int(l[1:]): b for l, b in fixed.items()}
    free = [q for q in range(n_qubits) if q not in fixed_bits]
    for i, amp in enumerate(vector):
        bits = []
        for q in range(n_qubits):
            if q in fixed_bits:
                bits.append(str(fixed_bits[q]))
            else:
                bits.append(str((i >> free.index(q)) & 1))
        fh.write(f"{''.join(bits)},{amp.real:.17g},{amp.imag:.17g}\n")
