"""Circuits as layered lists of one- and two-qubit gates."""
from __future__ import annotations

from dataclasses import dataclass, field

from .gates import gate_arity, is_diagonal


class CircuitError(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    """One gate instance: a name, its target qubits and its layer ordinal."""

    kind: str
    targets: tuple[int, ...]
    layer: int = 0

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        if gate_arity(self.kind) != len(self.targets):
            raise CircuitError(
                f"{self.kind} expects {gate_arity(self.kind)} targets, "
                f"got {len(self.targets)}"
            )
        if len(set(self.targets)) != len(self.targets):
            raise CircuitError(f"{self.kind} targets must be distinct: {self.targets}")
        if any(t < 0 for t in self.targets):
            raise CircuitError(f"negative qubit index in {self.targets}")
        if self.layer < 0:
            raise CircuitError("layer must be non-negative")

    @property
    def diagonal(self) -> bool:
        return is_diagonal(self.kind)

    def at_layer(self, layer: int) -> "Gate":
        return Gate(self.kind, self.targets, layer)


@dataclass(frozen=True)
class Circuit:
    """A layered circuit; within one layer no qubit is touched twice."""

    n_qubits: int
    layers: tuple[tuple[Gate, ...], ...]
    geometry: tuple[int, int] | None = None

    def __post_init__(self):
        object.__setattr__(
            self, "layers", tuple(tuple(layer) for layer in self.layers)
        )
        if self.n_qubits <= 0:
            raise CircuitError("n_qubits must be positive")
        if self.geometry is not None:
            rows, cols = self.geometry
            if rows * cols != self.n_qubits:
                raise CircuitError("geometry does not match qubit count")
        for t, layer in enumerate(self.layers):
            seen: set[int] = set()
            for g in layer:
                if g.layer != t:
                    raise CircuitError(f"gate {g} recorded in layer {t}")
                for q in g.targets:
                    if q >= self.n_qubits:
                        raise CircuitError(
                            f"qubit index {q} out of range for {self.n_qubits} qubits"
                        )
                    if q in seen:
                        raise CircuitError(f"qubit {q} used twice in layer {t}")
                    seen.add(q)

    @property
    def depth(self) -> int:
        return len(self.layers)

    @property
    def benchmark_depth(self) -> int:
        """Depth not counting a leading all-Hadamard layer, if one is present."""
        d = len(self.layers)
        if d and self.has_leading_hadamard_layer:
            return d - 1
        return d

    @property
    def has_leading_hadamard_layer(self) -> bool:
        if not self.layers:
            return False
        first = self.layers[0]
        return len(first) == self.n_qubits and all(g.kind == "h" for g in first)

    def gates(self):
        for layer in self.layers:
            yield from layer

    @property
    def gate_count(self) -> int:
        return sum(len(layer) for layer in self.layers)

    def gates_on(self, qubit: int):
        for layer in self.layers:
            for g in layer:
                if qubit in g.targets:
                    yield g

    def gate_at(self, layer: int, index: int) -> Gate:
        try:
            return self.layers[layer][index]
        except IndexError:
            raise CircuitError(f"no gate at layer {layer}, index {index}") from None


def layerize(
    gates,
    n_qubits: int,
    geometry: tuple[int, int] | None = None,
) -> Circuit:
    """Greedy earliest-layer assignment preserving per-qubit gate order."""
    frontier = [0] * n_qubits
    layers: list[list[Gate]] = []
    for g in gates:
        for q in g.targets:
            if q >= n_qubits:
                raise CircuitError(f"qubit index {q} out of range")
        t = max(frontier[q] for q in g.targets)
        while len(layers) <= t:
            layers.append([])
        layers[t].append(g.at_layer(t))
        for q in g.targets:
            frontier[q] = t + 1
    return Circuit(n_qubits, tuple(tuple(l) for l in layers), geometry)


def transform_cx(circuit: Circuit, layer: int, index: int) -> Circuit:
    """Replace one CX by H(target); CZ(control, target); H(target).

    Layers are re-derived greedily afterwards, so positions of later
    gates may shift.
    """
    target_gate = circuit.gate_at(layer, index)
    if target_gate.kind != "cx":
        raise CircuitError(f"gate at ({layer}, {index}) is {target_gate.kind}, not cx")
    return transform_cx_many(circuit, [(layer, index)])


def transform_cx_many(circuit: Circuit, positions) -> Circuit:
    """Apply the CX -> H,CZ,H rewrite at every listed (layer, index) at once."""
    chosen = set()
    for layer, index in positions:
        g = circuit.gate_at(layer, index)
        if g.kind != "cx":
            raise CircuitError(f"gate at ({layer}, {index}) is {g.kind}, not cx")
        chosen.add((layer, index))
    if not chosen:
        return circuit
    out: list[Gate] = []
    for t, layer in enumerate(circuit.layers):
        for i, g in enumerate(layer):
            if (t, i) in chosen:
                control, target = g.targets
                out.append(Gate("h", (target,)))
                out.append(Gate("cz", (control, target)))
                out.append(Gate("h", (target,)))
            else:
                out.append(g)
    return layerize(out, circuit.n_qubits, circuit.geometry)
