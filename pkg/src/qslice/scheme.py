"""Computation schemes: ordered action programs over named subcircuits.

A scheme fixes everything the executor needs to decide: which CX gates
are rewritten, which subcircuit applies each gate, which entangling
gates are deferred and to which side, where merges happen and what they
sum over, and which qubit labels are sliced (looped over at output).
Actions after the slice marker form the loop body, re-run once per
slice assignment; actions before it run once and their tensors stay
live across the loop.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field

from .circuit import Circuit

SCHEME_FORMAT = "qslice-scheme"
SCHEME_VERSION = 1


@dataclass(frozen=True)
class GateRef:
    """Position of a gate: layer number and index within the layer."""

    layer: int
    index: int

    def to_json(self):
        return [self.layer, self.index]


@dataclass(frozen=True)
class Transform:
    """Rewrite one CX of the original circuit into H, CZ, H."""

    gate: GateRef


@dataclass(frozen=True)
class Apply:
    """Apply one gate inside (or scaled into) a named subcircuit."""

    subcircuit: str
    gate: GateRef


@dataclass(frozen=True)
class Defer:
    """Defer a crossing entangling gate to one side.

    Diagonal gates create one entanglement label, non-diagonal gates
    two (the remote line's value before and after the gate).
    """

    gate: GateRef
    assign: str
    labels: tuple[str, ...]


@dataclass(frozen=True)
class Merge:
    """Combine two subcircuits, summing the listed entanglement labels."""

    into: str
    other: str
    sum_labels: tuple[str, ...] = ()


@dataclass(frozen=True)
class SliceLoop:
    """Marker: the remaining actions run once per slice assignment."""


@dataclass(frozen=True)
class EmitSlice:
    """Emit the final tensor, ordered by the listed output labels."""

    output: tuple[str, ...]


Action = Transform | Apply | Defer | Merge | SliceLoop | EmitSlice


@dataclass
class CostEstimate:
    """Operation counts and peak simultaneously-live logical bytes."""

    multiplications: int = 0
    additions: int = 0
    peak_bytes: int = 0

    @property
    def operations(self) -> int:
        return self.multiplications + self.additions

    def to_json(self):
        return {
            "multiplications": self.multiplications,
            "additions": self.additions,
            "operations": self.operations,
            "peak_bytes": self.peak_bytes,
        }


@dataclass
class ComputationScheme:
    """An executable plan for one circuit."""

    n_qubits: int
    actions: tuple[Action, ...]
    sliced: tuple[str, ...] = ()
    subcircuits: dict[str, tuple[str, ...]] = field(default_factory=dict)
    cost: CostEstimate | None = None
    policy: tuple | None = None  # planner bookkeeping, not serialized

    def __post_init__(self):
        if not self.subcircuits:
            self.subcircuits = {
                f"s{q}": (f"q{q}",) for q in range(self.n_qubits)
            }
        self.actions = tuple(self.actions)
        self.sliced = tuple(self.sliced)

    @property
    def slice_count(self) -> int:
        return 1 << len(self.sliced)

    @property
    def transforms(self) -> tuple[GateRef, ...]:
        return tuple(a.gate for a in self.actions if isinstance(a, Transform))

    @property
    def output_labels(self) -> tuple[str, ...]:
        for a in self.actions:
            if isinstance(a, EmitSlice):
                return a.output
        return ()

    def deferrals(self) -> list[Defer]:
        return [a for a in self.actions if isinstance(a, Defer)]

    def to_json(self) -> dict:
        def enc(a: Action):
            if isinstance(a, Transform):
                return {"op": "transform_cx", "gate": a.gate.to_json()}
            if isinstance(a, Apply):
                return {"op": "apply", "subcircuit": a.subcircuit, "gate": a.gate.to_json()}
            if isinstance(a, Defer):
                return {
                    "op": "defer",
                    "gate": a.gate.to_json(),
                    "assign": a.assign,
                    "labels": list(a.labels),
                }
            if isinstance(a, Merge):
                return {
                    "op": "merge",
                    "into": a.into,
                    "other": a.other,
                    "sum": list(a.sum_labels),
                }
            if isinstance(a, SliceLoop):
                return {"op": "slice_loop"}
            return {"op": "emit", "output": list(a.output)}

        doc = {
            "format": SCHEME_FORMAT,
            "version": SCHEME_VERSION,
            "n_qubits": self.n_qubits,
            "sliced": list(self.sliced),
            "slices": self.slice_count,
            "subcircuits": {k: list(v) for k, v in sorted(self.subcircuits.items())},
            "actions": [enc(a) for a in self.actions],
        }
        if self.cost is not None:
            doc["cost"] = self.cost.to_json()
        return doc

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=1)

    @classmethod
    def from_json(cls, doc: dict) -> "ComputationScheme":
        if doc.get("format") != SCHEME_FORMAT:
            raise ValueError("not a scheme document")
        if doc.get("version") != SCHEME_VERSION:
            raise ValueError(f"unsupported scheme version {doc.get('version')}")

        def dec(d: dict) -> Action:
            op = d["op"]
            if op == "transform_cx":
                return Transform(GateRef(*d["gate"]))
            if op == "apply":
                return Apply(d["subcircuit"], GateRef(*d["gate"]))
            if op == "defer":
                return Defer(GateRef(*d["gate"]), d["assign"], tuple(d["labels"]))
            if op == "merge":
                return Merge(d["into"], d["other"], tuple(d["sum"]))
            if op == "slice_loop":
                return SliceLoop()
            if op == "emit":
                return EmitSlice(tuple(d["output"]))
            raise ValueError(f"unknown action {op!r}")

        cost = None
        if "cost" in doc:
            c = doc["cost"]
            cost = CostEstimate(c["multiplications"], c["additions"], c["peak_bytes"])
        return cls(
            n_qubits=doc["n_qubits"],
            actions=tuple(dec(a) for a in doc["actions"]),
            sliced=tuple(doc["sliced"]),
            subcircuits={k: tuple(v) for k, v in doc["subcircuits"].items()},
            cost=cost,
        )

    @classmethod
    def loads(cls, text: str) -> "ComputationScheme":
        return cls.from_json(json.loads(text))


def working_circuit(circuit: Circuit, scheme: ComputationScheme) -> Circuit:
    """The circuit the scheme's gate references address: transforms applied."""
    from .circuit import transform_cx_many

    refs = scheme.transforms
    if not refs:
        return circuit
    return transform_cx_many(circuit, [(r.layer, r.index) for r in refs])


def digest(text: str | bytes) -> str:
    data = text.encode() if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()
