"""Gate vocabulary: names, matrices and structural predicates."""
from __future__ import annotations

import numpy as np

SQRT2_INV = 1.0 / np.sqrt(2.0)
_T_PHASE = np.exp(1j * np.pi / 4)

# Standard computational-basis conventions; y uses y|0> = i|1>, y|1> = -i|0>.
MATRICES: dict[str, np.ndarray] = {
    "id": np.eye(2, dtype=complex),
    "h": np.array([[1, 1], [1, -1]], dtype=complex) * SQRT2_INV,
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.diag([1, -1]).astype(complex),
    "s": np.diag([1, 1j]).astype(complex),
    "t": np.diag([1, _T_PHASE]).astype(complex),
    "sqrt_x": 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex),
    "sqrt_y": 0.5 * np.array([[1 + 1j, -1 - 1j], [1 + 1j, 1 + 1j]], dtype=complex),
    "cz": np.diag([1, 1, 1, -1]).astype(complex),
    "cx": np.array(
        [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
    ),
}

GATE_ARITY = {name: 2 if m.shape[0] == 4 else 1 for name, m in MATRICES.items()}
DIAGONAL_GATES = frozenset({"id", "z", "s", "t", "cz"})
DENSE_1Q = frozenset(n for n, a in GATE_ARITY.items() if a == 1) - DIAGONAL_GATES
GATE_NAMES = frozenset(MATRICES)


class UnknownGateError(ValueError):
    pass


def gate_unitary(kind: str) -> np.ndarray:
    """Return the (copy of the) unitary matrix for a gate name."""
    try:
        return MATRICES[kind].copy()
    except KeyError:
        raise UnknownGateError(f"unknown gate kind: {kind!r}") from None


def gate_arity(kind: str) -> int:
    try:
        return GATE_ARITY[kind]
    except KeyError:
        raise UnknownGateError(f"unknown gate kind: {kind!r}") from None


def is_diagonal(kind: str) -> bool:
    return kind in DIAGONAL_GATES


def is_unitary(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    matrix = np.asarray(matrix, dtype=complex)
    eye = np.eye(matrix.shape[0])
    return bool(np.max(np.abs(matrix @ matrix.conj().T - eye)) <= tol)


def line_diagonal(matrix: np.ndarray, line: int) -> bool:
    """True if a 2q matrix never changes the value of one of its lines.

    ``line`` 0 is the first (most significant) index of the row/column
    pair.  CZ is diagonal in both lines, CX only in its control line.
    """
    m = np.asarray(matrix).reshape(2, 2, 2, 2)
    if line == 0:
        off = m[0, :, 1, :], m[1, :, 0, :]
    else:
        off = m[:, 0, :, 1], m[:, 1, :, 0]
    return all(np.all(block == 0) for block in off)
