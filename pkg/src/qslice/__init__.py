"""qslice: exact quantum circuit amplitudes in memory-bounded slices."""

__version__ = "0.1.0"

from .circuit import Circuit, CircuitError, Gate, layerize, transform_cx
from .engine import SchemeError, replay
from .executor import (
    AmplitudeSlice,
    SliceSelector,
    amplitude,
    build_layer_unitary,
    flops_per_gate_per_amplitude,
    reference_schrodinger,
    run_full,
    run_slice,
)
from .gates import gate_unitary, is_diagonal
from .generator import generate_random_circuit
from .planner import (
    detect_sliceable,
    gate_cost,
    pareto_frontier,
    plan_heuristic,
    plan_search,
    scheme_cost,
    validate_scheme,
)
from .qasm import ParseError, parse_circuit, serialize_circuit
from .scheme import ComputationScheme, CostEstimate, GateRef
from .tensor import FlopCounter, StateTensor

__all__ = [
    "AmplitudeSlice",
    "Circuit",
    "CircuitError",
    "ComputationScheme",
    "CostEstimate",
    "FlopCounter",
    "Gate",
    "GateRef",
    "ParseError",
    "SchemeError",
    "SliceSelector",
    "StateTensor",
    "amplitude",
    "build_layer_unitary",
    "detect_sliceable",
    "flops_per_gate_per_amplitude",
    "gate_cost",
    "gate_unitary",
    "generate_random_circuit",
    "is_diagonal",
    "layerize",
    "pareto_frontier",
    "parse_circuit",
    "plan_heuristic",
    "plan_search",
    "reference_schrodinger",
    "replay",
    "run_full",
    "run_slice",
    "scheme_cost",
    "serialize_circuit",
    "transform_cx",
    "validate_scheme",
]
