"""Seeded universal random circuits on 2D grids.

Construction: layer 0 applies H everywhere and is excluded from the
depth count.  Each subsequent layer takes its CZ edges from a fixed
cycle of eight grid patterns (horizontal and vertical matchings,
alternating, with row/column parity offsets).  A qubit idle in the
current pattern receives

* T, if it was in a CZ in the previous layer and has had no
  non-Hadamard single-qubit gate yet;
* otherwise a choice from {sqrt_x, sqrt_y, t} differing from its most
  recent single-qubit gate, if it was in a CZ in the previous layer;
* otherwise id (not materialized, so such layers can be empty).

Keeping t in the recurring mix gives a sizable fraction of qubits a
long diagonal tail, which is what makes deep instances of this family
sliceable at all.

Randomness comes from splitmix64 streams keyed per (seed, layer,
qubit) cell, so circuits are bit-identical across platforms.
"""
from __future__ import annotations

from .circuit import Circuit, Gate

_MASK = (1 << 64) - 1


def splitmix64(state: int) -> tuple[int, int]:
    """One splitmix64 step; returns (new_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return state, z ^ (z >> 31)


def cell_random(seed: int, layer: int, qubit: int) -> int:
    """64-bit value of the (layer, qubit) cell of the seeded stream."""
    state = seed & _MASK
    for salt in (0xA076_1D64_78BD_642F, layer, qubit):
        state, _ = splitmix64((state ^ salt) & _MASK)
    _, out = splitmix64(state)
    return out


def cz_pattern(rows: int, cols: int, clock: int) -> list[tuple[int, int]]:
    """CZ edges for pattern ``clock`` (mod 8) on a rows x cols grid.

    Even clocks are horizontal matchings, odd clocks vertical; the four
    of each kind cover every lattice edge across one full cycle.
    """
    c = clock % 8
    qubit = lambda r, k: r * cols + k
    edges: list[tuple[int, int]] = []
    if c % 2 == 0:
        col_parity, row_parity = (c // 2) % 2, (c // 2) // 2
        for r in range(rows):
            if r % 2 != row_parity:
                continue
            for k in range(col_parity, cols - 1, 2):
                edges.append((qubit(r, k), qubit(r, k + 1)))
    else:
        row_parity, col_parity = (c // 2) % 2, (c // 2) // 2
        for k in range(cols):
            if k % 2 != col_parity:
                continue
            for r in range(row_parity, rows - 1, 2):
                edges.append((qubit(r, k), qubit(r + 1, k)))
    return edges


def generate_random_circuit(rows: int, cols: int, depth: int, seed: int) -> Circuit:
    """Deterministic random benchmark circuit; ``depth`` excludes the H layer."""
    if rows < 1 or cols < 1:
        raise ValueError("grid dimensions must be >= 1")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    n = rows * cols
    layers: list[tuple[Gate, ...]] = [
        tuple(Gate("h", (q,), layer=0) for q in range(n))
    ]
    in_cz_prev = [False] * n
    had_non_h = [False] * n
    last_1q: list[str | None] = [None] * n

    for d in range(1, depth + 1):
        gates: list[Gate] = []
        busy = [False] * n
        for a, b in cz_pattern(rows, cols, d - 1):
            gates.append(Gate("cz", (a, b), layer=d))
            busy[a] = busy[b] = True
        in_cz_now = list(busy)
        for q in range(n):
            if busy[q] or not in_cz_prev[q]:
                continue  # idle with no CZ last layer: identity, not materialized
            if not had_non_h[q]:
                kind = "t"
            else:
                options = [k for k in ("sqrt_x", "sqrt_y", "t") if k != last_1q[q]]
                kind = options[cell_random(seed, d, q) % len(options)]
            gates.append(Gate(kind, (q,), layer=d))
            had_non_h[q] = True
            last_1q[q] = kind
        in_cz_prev = in_cz_now
        layers.append(tuple(gates))

    return Circuit(n, tuple(layers), geometry=(rows, cols))
