"""Dense complex tensors over labeled binary indices.

A :class:`StateTensor` stores one complex amplitude per assignment of
its ordered index labels; axis ``i`` of the array corresponds to
``labels[i]``.  The flat export order is little-endian: the first
label's bit is the least significant.  All contraction sums run in
ascending index order so results are reproducible bit for bit.

Operation counts follow one convention everywhere: a kernel whose
output elements each sum over K stored input assignments costs K
complex multiplications and K-1 complex additions per output element;
diagonal kernels cost one multiplication per element.  Axis reordering
and label renames are free.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gates import gate_arity, gate_unitary, is_diagonal

BYTES_PER_AMP = 16


class TensorError(ValueError):
    pass


@dataclass(frozen=True)
class IndexLabel:
    """A named binary index: a qubit line or a deferral bookkeeping index."""

    name: str
    kind: str = "qubit"  # "qubit" | "entanglement"
    origin: int | None = None

    def __post_init__(self):
        if self.kind not in ("qubit", "entanglement"):
            raise TensorError(f"bad label kind {self.kind!r}")


def qubit_label(q: int) -> IndexLabel:
    return IndexLabel(f"q{q}", "qubit", q)


def entanglement_label(k: int, origin: int | None = None) -> IndexLabel:
    return IndexLabel(f"e{k}", "entanglement", origin)


@dataclass
class FlopCounter:
    """Monotone counters of complex multiplications and additions."""

    multiplications: int = 0
    additions: int = 0

    def add(self, mults: int = 0, adds: int = 0) -> None:
        if mults < 0 or adds < 0:
            raise ValueError("counters are monotone")
        self.multiplications += mults
        self.additions += adds

    def merge(self, other: "FlopCounter") -> None:
        self.add(other.multiplications, other.additions)

    @property
    def operations(self) -> int:
        return self.multiplications + self.additions

    def real_flops(self) -> int:
        # one complex multiplication = 6 real flops, one addition = 2
        return 6 * self.multiplications + 2 * self.additions


class StateTensor:
    """Amplitudes over labeled binary indices.

    ``amplitudes`` may be ``None`` for shape-only replay; every
    operation then tracks labels and flop counts without touching data.
    """

    __slots__ = ("labels", "amplitudes")

    def __init__(self, labels, amplitudes: np.ndarray | None):
        self.labels: tuple[str, ...] = tuple(labels)
        if len(set(self.labels)) != len(self.labels):
            raise TensorError(f"duplicate labels: {self.labels}")
        if amplitudes is not None:
            amplitudes = np.asarray(amplitudes, dtype=complex)
            shape = (2,) * len(self.labels)
            if amplitudes.shape != shape:
                # flat input follows the little-endian export convention
                amplitudes = amplitudes.reshape(shape, order="F")
        self.amplitudes = amplitudes

    @property
    def rank(self) -> int:
        return len(self.labels)

    @property
    def nbytes(self) -> int:
        return BYTES_PER_AMP * (1 << self.rank)

    def axis(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise TensorError(f"label {label!r} not in {self.labels}") from None

    def has(self, label: str) -> bool:
        return label in self.labels

    def copy(self) -> "StateTensor":
        data = None if self.amplitudes is None else self.amplitudes.copy()
        return StateTensor(self.labels, data)

    def renamed(self, mapping: dict[str, str]) -> "StateTensor":
        return StateTensor(
            tuple(mapping.get(l, l) for l in self.labels), self.amplitudes
        )

    def norm(self) -> float:
        if self.amplitudes is None:
            raise TensorError("shape-only tensor has no norm")
        return float(np.linalg.norm(self.amplitudes))

    def to_vector(self) -> np.ndarray:
        """Flat little-endian amplitudes (first label least significant)."""
        if self.amplitudes is None:
            raise TensorError("shape-only tensor has no data")
        return self.amplitudes.ravel(order="F").copy()

    def reordered(self, labels) -> "StateTensor":
        """Same tensor with axes permuted to the given label order (free)."""
        labels = tuple(labels)
        if set(labels) != set(self.labels):
            raise TensorError(f"cannot reorder {self.labels} to {labels}")
        if labels == self.labels:
            return self
        if self.amplitudes is None:
            return StateTensor(labels, None)
        perm = [self.axis(l) for l in labels]
        return StateTensor(labels, np.transpose(self.amplitudes, perm))

    def __repr__(self):
        return f"StateTensor(labels={self.labels}, data={self.amplitudes is not None})"


def initial_state(labels) -> StateTensor:
    """All-zero basis state over the given labels (amplitude 1 at 0...0)."""
    labels = tuple(labels)
    if not labels:
        raise TensorError("initial_state needs at least one label")
    data = np.zeros((2,) * len(labels), dtype=complex)
    data[(0,) * len(labels)] = 1.0
    return StateTensor(labels, data)


def _move_axes_last(data: np.ndarray, axes: list[int]) -> tuple[np.ndarray, list[int]]:
    order = [i for i in range(data.ndim) if i not in axes] + axes
    return np.transpose(data, order), order


def apply_gate(
    s: StateTensor,
    u: np.ndarray,
    on,
    counter: FlopCounter | None = None,
) -> StateTensor:
    """Contract a 1- or 2-qubit unitary against stored indices.

    The addressed labels keep their names; all other indices are
    untouched.  Diagonal matrices are applied elementwise.
    """
    on = [on] if isinstance(on, str) else list(on)
    u = np.asarray(u, dtype=complex)
    k = len(on)
    if u.shape != (2**k, 2**k):
        raise TensorError(f"matrix shape {u.shape} does not match {k} labels")
    axes = [s.axis(l) for l in on]
    counter = counter if counter is not None else FlopCounter()
    n = s.rank
    diag = bool(np.all(u == np.diag(np.diagonal(u))))
    if diag:
        counter.add(mults=1 << n)
        if s.amplitudes is None:
            return StateTensor(s.labels, None)
        d = np.diagonal(u).reshape((2,) * k)
        # place the k diagonal axes at the stored positions, broadcast the rest
        order = np.argsort(axes)
        dgrid = np.transpose(d, order).reshape(
            [2 if i in axes else 1 for i in range(n)]
        )
        return StateTensor(s.labels, s.amplitudes * dgrid)
    # dense: 2^k mults and 2^k - 1 adds per output element
    counter.add(mults=(1 << n) * (1 << k), adds=(1 << n) * ((1 << k) - 1))
    if s.amplitudes is None:
        return StateTensor(s.labels, None)
    data, order = _move_axes_last(s.amplitudes, axes)
    lead = data.shape[: n - k]
    mat = data.reshape(-1, 1 << k)
    out = np.zeros_like(mat)
    for col in range(1 << k):  # ascending input assignment: fixed sum order
        out += mat[:, [col]] * u[:, col]
    out = out.reshape(lead + (2,) * k)
    inv = np.argsort(order)
    return StateTensor(s.labels, np.transpose(out, inv))


def apply_sliced_diagonal(
    s: StateTensor,
    u: np.ndarray,
    fixed: dict[str, int],
    on,
    counter: FlopCounter | None = None,
) -> StateTensor:
    """Apply a diagonal gate with some addressed labels fixed to bits.

    Fixed labels must be slice coordinates, absent from the stored
    indices; the diagonal row they select multiplies the rest.
    """
    on = [on] if isinstance(on, str) else list(on)
    u = np.asarray(u, dtype=complex)
    if not np.all(u == np.diag(np.diagonal(u))):
        raise TensorError("apply_sliced_diagonal requires a diagonal matrix")
    for label in fixed:
        if s.has(label):
            raise TensorError(f"fixed label {label!r} is stored in the tensor")
        if label not in on:
            raise TensorError(f"fixed label {label!r} not addressed by the gate")
    stored = [l for l in on if l not in fixed]
    d = np.diagonal(u).reshape((2,) * len(on))
    sel = tuple(
        fixed[l] if l in fixed else slice(None) for l in on
    )
    sub = d[sel]
    counter = counter if counter is not None else FlopCounter()
    if not stored:
        counter.add(mults=1 << s.rank)
        if s.amplitudes is None:
            return StateTensor(s.labels, None)
        return StateTensor(s.labels, s.amplitudes * complex(sub))
    return apply_gate(s, np.diag(np.asarray(sub).ravel()), stored, counter)


def tensor_product(a: StateTensor, b: StateTensor, counter: FlopCounter | None = None) -> StateTensor:
    """Outer product; labels concatenate a-then-b; one mult per output element."""
    return contract_shared(a, b, (), counter)


def contract_shared(
    a: StateTensor,
    b: StateTensor,
    shared,
    counter: FlopCounter | None = None,
    batch=(),
) -> StateTensor:
    """Sum over shared labels of elementwise products.

    ``shared`` labels are consumed (summed away, ascending assignment
    order); ``batch`` labels must appear on both sides and survive as
    aligned elementwise indices.  All other labels must be disjoint and
    concatenate a-then-b in the output.
    """
    shared = tuple(shared)
    batch = tuple(batch)
    for l in shared + batch:
        if not (a.has(l) and b.has(l)):
            raise TensorError(f"label {l!r} must be present in both tensors")
    common = set(a.labels) & set(b.labels)
    declared = set(shared) | set(batch)
    if common != declared:
        raise TensorError(
            f"common labels {sorted(common)} do not match declared {sorted(declared)}"
        )
    a_only = [l for l in a.labels if l not in declared]
    b_only = [l for l in b.labels if l not in declared]
    out_labels = tuple(a_only) + tuple(batch) + tuple(b_only)
    m = len(shared)
    out_rank = len(out_labels)
    counter = counter if counter is not None else FlopCounter()
    counter.add(
        mults=(1 << out_rank) * (1 << m),
        adds=(1 << out_rank) * ((1 << m) - 1),
    )
    if a.amplitudes is None or b.amplitudes is None:
        return StateTensor(out_labels, None)
    a_ord = a.reordered(tuple(a_only) + batch + shared)
    b_ord = b.reordered(shared + batch + tuple(b_only))
    out = np.zeros((2,) * out_rank, dtype=complex)
    na, nb = len(a_only), len(b_only)
    batch_shape = (2,) * len(batch)
    for combo in range(1 << m):  # ascending shared assignment: fixed sum order
        bits = tuple((combo >> (m - 1 - i)) & 1 for i in range(m))
        asel = a_ord.amplitudes[(slice(None),) * (na + len(batch)) + bits]
        bsel = b_ord.amplitudes[bits]
        left = asel.reshape((2,) * na + batch_shape + (1,) * nb)
        right = bsel.reshape((1,) * na + batch_shape + (2,) * nb)
        out += left * right
    return StateTensor(out_labels, out)


def fix_label(s: StateTensor, label: str, bit: int) -> StateTensor:
    """Restrict the tensor to one value of a label (free: a coordinate view)."""
    if bit not in (0, 1):
        raise TensorError("bit must be 0 or 1")
    ax = s.axis(label)
    labels = s.labels[:ax] + s.labels[ax + 1 :]
    if s.amplitudes is None:
        return StateTensor(labels, None)
    return StateTensor(labels, np.take(s.amplitudes, bit, axis=ax))


def row_restrict(
    s: StateTensor,
    u: np.ndarray,
    label: str,
    bit: int,
    counter: FlopCounter | None = None,
) -> StateTensor:
    """Apply a 1q gate and fix its output index to ``bit`` in one step.

    This is the slice-restriction kernel: the label's axis is consumed,
    out = sum_j u[bit, j] * s[.., j, ..].
    """
    u = np.asarray(u, dtype=complex)
    ax = s.axis(label)
    n = s.rank
    counter = counter if counter is not None else FlopCounter()
    counter.add(mults=1 << n, adds=1 << (n - 1))
    labels = s.labels[:ax] + s.labels[ax + 1 :]
    if s.amplitudes is None:
        return StateTensor(labels, None)
    s0 = np.take(s.amplitudes, 0, axis=ax)
    s1 = np.take(s.amplitudes, 1, axis=ax)
    return StateTensor(labels, u[bit, 0] * s0 + u[bit, 1] * s1)


def scale(s: StateTensor, factor: complex, counter: FlopCounter | None = None) -> StateTensor:
    """Multiply every amplitude by a scalar (one mult per element)."""
    counter = counter if counter is not None else FlopCounter()
    counter.add(mults=1 << s.rank)
    if s.amplitudes is None:
        return StateTensor(s.labels, None)
    return StateTensor(s.labels, s.amplitudes * factor)


def grow_outer(
    s: StateTensor,
    block: np.ndarray,
    new_labels,
    counter: FlopCounter | None = None,
) -> StateTensor:
    """Append new axes holding ``block`` as an outer factor (1 mult/element)."""
    new_labels = tuple(new_labels)
    block = np.asarray(block, dtype=complex).reshape((2,) * len(new_labels))
    out_labels = s.labels + new_labels
    counter = counter if counter is not None else FlopCounter()
    counter.add(mults=1 << len(out_labels))
    if s.amplitudes is None:
        return StateTensor(out_labels, None)
    out = np.multiply.outer(s.amplitudes, block)
    return StateTensor(out_labels, out)


def apply_diag_block(
    s: StateTensor,
    block: np.ndarray,
    labels,
    counter: FlopCounter | None = None,
) -> StateTensor:
    """Multiply by a diagonal factor over ``labels``, growing absent axes.

    ``block`` holds one complex factor per assignment of the k labels
    (shape ``(2,)*k``).  Labels already stored align elementwise;
    absent ones are appended as new axes.  One multiplication per
    output element.  With k = 0 this is a plain scalar scale.
    """
    labels = tuple(labels)
    k = len(labels)
    block = np.asarray(block, dtype=complex).reshape((2,) * k)
    absent = tuple(l for l in labels if not s.has(l))
    out_labels = s.labels + absent
    counter = counter if counter is not None else FlopCounter()
    counter.add(mults=1 << len(out_labels))
    if s.amplitudes is None:
        return StateTensor(out_labels, None)
    n_out = len(out_labels)
    pos = {l: i for i, l in enumerate(out_labels)}
    taken = {pos[l] for l in labels}
    order = np.argsort([pos[l] for l in labels]) if k else []
    grid = np.transpose(block, order).reshape(
        [2 if i in taken else 1 for i in range(n_out)]
    )
    data = s.amplitudes.reshape(s.amplitudes.shape + (1,) * len(absent))
    return StateTensor(out_labels, data * grid)


def defer_grow_dense(
    s: StateTensor,
    u: np.ndarray,
    own_label: str,
    pre_label: str,
    post_label: str,
    remote_first: bool,
    counter: FlopCounter | None = None,
) -> StateTensor:
    """Apply a deferred non-diagonal 2q gate, adding both remote indices.

    The stored ``own_label`` axis is contracted against the gate; the
    remote line contributes a column index ``pre_label`` (its value
    before the gate) and a row index ``post_label`` (after).  Two
    multiplications and one addition per output element.
    """
    u = np.asarray(u, dtype=complex).reshape(2, 2, 2, 2)
    if not remote_first:
        # reorder to u[post, own_out, pre, own_in]
        u = np.transpose(u, (1, 0, 3, 2))
    ax = s.axis(own_label)
    out_labels = s.labels + (pre_label, post_label)
    counter = counter if counter is not None else FlopCounter()
    counter.add(mults=1 << (s.rank + 3), adds=1 << (s.rank + 2))
    if s.amplitudes is None:
        return StateTensor(out_labels, None)
    data = np.moveaxis(s.amplitudes, ax, -1)  # [..., own_in]
    # out[..., own_out, pre, post] = sum_j u[post, own_out, pre, j] data[..., j]
    out = np.zeros(data.shape[:-1] + (2, 2, 2), dtype=complex)
    for j in (0, 1):  # ascending input assignment
        out += data[..., j, np.newaxis, np.newaxis, np.newaxis] * np.transpose(
            u[:, :, :, j], (1, 2, 0)
        )
    out = np.moveaxis(out, -3, ax)  # own_out back to its place
    return StateTensor(out_labels, out)


def aggregate_operators(gates, labels, max_labels: int = 5) -> np.ndarray:
    """Compose a gate sequence on <= ``max_labels`` labels into one matrix.

    ``gates`` is a sequence of (matrix, target labels); targets must be
    within ``labels``.  Applying the result once equals applying the
    sequence in order.
    """
    labels = tuple(labels)
    k = len(labels)
    if k > max_labels:
        raise TensorError(f"{k} labels exceed the aggregation bound {max_labels}")
    pos = {l: i for i, l in enumerate(labels)}
    total = np.eye(1 << k, dtype=complex)
    for u, on in gates:
        on = [on] if isinstance(on, str) else list(on)
        for l in on:
            if l not in pos:
                raise TensorError(f"gate label {l!r} outside aggregation labels")
        total = _embed(np.asarray(u, dtype=complex), [pos[l] for l in on], k) @ total
    return total


def _embed(u: np.ndarray, axes: list[int], k: int) -> np.ndarray:
    """Embed a small unitary acting on ``axes`` into the 2^k big-endian space."""
    cols = np.eye(1 << k, dtype=complex)
    res = np.empty_like(cols)
    names = [f"b{i}" for i in range(k)]
    for c in range(1 << k):
        vec = StateTensor(names, cols[:, c].reshape((2,) * k))
        vec = apply_gate(vec, u, [names[i] for i in axes], FlopCounter())
        res[:, c] = vec.amplitudes.reshape(-1)
    return res
