"""Line-oriented circuit text format.

Grammar::

    qubits N            header, required first non-comment line
    grid R C            optional 2D geometry header
    <name> q[<i>]       one gate per line, lowercase names
    <name> q[<i>],q[<j>]
    --                  layer separator
    # ...               comment (also allowed after a gate)

Serialization is canonical: lowercase names, single spaces, layers in
order separated by ``--``.
"""
from __future__ import annotations

import re

from .circuit import Circuit, CircuitError, Gate
from .gates import GATE_NAMES, gate_arity

_GATE_RE = re.compile(
    r"^(?P<name>[a-z_][a-z0-9_]*)\s+q\[(?P<i>\d+)\](?:\s*,\s*q\[(?P<j>\d+)\])?$"
)


class ParseError(ValueError):
    """Syntax or validation error, carrying line and column numbers."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


def _strip(raw: str) -> str:
    cut = raw.find("#")
    if cut >= 0:
        raw = raw[:cut]
    return raw.strip()


def parse_circuit(text: str) -> Circuit:
    """Parse the text format into a validated :class:`Circuit`."""
    n_qubits: int | None = None
    geometry: tuple[int, int] | None = None
    layers: list[list[Gate]] = []
    current: list[Gate] = []
    saw_gate_or_sep = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip(raw)
        if not line:
            continue
        if n_qubits is None:
            m = re.fullmatch(r"qubits\s+(\d+)", line)
            if not m:
                raise ParseError("expected 'qubits N' header", lineno)
            n_qubits = int(m.group(1))
            if n_qubits <= 0:
                raise ParseError("qubit count must be positive", lineno)
            continue
        if line.startswith("grid"):
            if saw_gate_or_sep or geometry is not None:
                raise ParseError("grid header must precede gates", lineno)
            m = re.fullmatch(r"grid\s+(\d+)\s+(\d+)", line)
            if not m:
                raise ParseError("expected 'grid R C'", lineno)
            geometry = (int(m.group(1)), int(m.group(2)))
            if geometry[0] * geometry[1] != n_qubits:
                raise ParseError("grid size does not match qubit count", lineno)
            continue
        if line == "--":
            saw_gate_or_sep = True
            layers.append(current)
            current = []
            continue
        m = _GATE_RE.match(line)
        if not m:
            raise ParseError(f"unrecognized statement: {line!r}", lineno)
        saw_gate_or_sep = True
        name = m.group("name")
        if name not in GATE_NAMES:
            raise ParseError(f"unknown gate {name!r}", lineno)
        targets = [int(m.group("i"))]
        if m.group("j") is not None:
            targets.append(int(m.group("j")))
        if gate_arity(name) != len(targets):
            raise ParseError(
                f"{name} takes {gate_arity(name)} qubit(s), got {len(targets)}", lineno
            )
        for q in targets:
            if q >= n_qubits:
                raise ParseError(
                    f"qubit index {q} out of range (qubits {n_qubits})",
                    lineno,
                    line.index(f"q[{q}]") + 1,
                )
        try:
            current.append(Gate(name, tuple(targets), layer=len(layers)))
        except CircuitError as exc:
            raise ParseError(str(exc), lineno) from None
        for prior in current[:-1]:
            if set(prior.targets) & set(targets):
                raise ParseError(
                    f"qubit {sorted(set(prior.targets) & set(targets))[0]} "
                    "used twice in one layer",
                    lineno,
                )

    if n_qubits is None:
        raise ParseError("missing 'qubits N' header", 1)
    if current:
        layers.append(current)
    return Circuit(n_qubits, tuple(tuple(l) for l in layers), geometry)


def serialize_circuit(circuit: Circuit) -> str:
    """Canonical text form; ``parse_circuit(serialize_circuit(c)) == c``."""
    lines = [f"qubits {circuit.n_qubits}"]
    if circuit.geometry is not None:
        lines.append(f"grid {circuit.geometry[0]} {circuit.geometry[1]}")
    for t, layer in enumerate(circuit.layers):
        if t:
            lines.append("--")
        for g in layer:
            refs = ",".join(f"q[{q}]" for q in g.targets)
            lines.append(f"{g.kind} {refs}")
    return "\n".join(lines) + "\n"
