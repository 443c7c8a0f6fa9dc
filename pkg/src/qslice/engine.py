"""Replay engine: one walk that executes, validates and costs schemes.

The same dispatch path drives three uses: execution (tensors carry
amplitudes), cost estimation (shape-only tensors, the loop body walked
once and multiplied by the trip count) and validation (violations
collected instead of raised).  Flop counts are computed from shapes in
shared code, so measured execution counts equal the symbolic estimate
exactly.

Byte accounting: tensors cost 16 bytes per amplitude; same-shape gate
applications are in place; shape-changing kernels and merges hold
input and output simultaneously; tensors created before the slice
marker stay live across the loop and are copied on first in-loop
mutation; emitted slices are streamed out, not retained.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .circuit import Circuit, Gate
from .gates import gate_unitary, line_diagonal
from .scheme import (
    Apply,
    ComputationScheme,
    CostEstimate,
    Defer,
    EmitSlice,
    GateRef,
    Merge,
    SliceLoop,
    Transform,
    working_circuit,
)
from .tensor import (
    FlopCounter,
    StateTensor,
    apply_diag_block,
    apply_gate,
    contract_shared,
    defer_grow_dense,
    fix_label,
    row_restrict,
)


class SchemeError(ValueError):
    """A scheme is structurally invalid for the given circuit."""


class _Violation(Exception):
    pass


@dataclass
class _Sub:
    name: str
    tensor: StateTensor | None = None
    scale: complex = 1.0
    scaled: bool = False
    hoisted: bool = False

    def clone(self) -> "_Sub":
        return _Sub(self.name, self.tensor, self.scale, self.scaled, self.hoisted)


@dataclass
class _Line:
    qubit: int
    label: str
    virgin: bool = True
    restricted: bool = False
    bit: int | None = None
    frozen_axis: bool = False  # restricted, but a hoisted tensor still stores the axis
    zero_valued: bool = False  # sliced line that never left |0>

    def clone(self) -> "_Line":
        return replace(self)


@dataclass
class ReplayResult:
    counter: FlopCounter
    peak_bytes: int
    max_tensor_bytes: int
    slices: list[tuple[dict[str, int], StateTensor]]
    violations: list[str]
    merge_sums: list[tuple[str, ...]]

    @property
    def ok(self) -> bool:
        return not self.violations

    def cost(self) -> CostEstimate:
        return CostEstimate(
            self.counter.multiplications, self.counter.additions, self.peak_bytes
        )


def growth_label(ref: GateRef) -> str:
    """Fresh line label when a pinned index is retained past a dense gate."""
    return f"x{ref.layer}.{ref.index}"


def default_selectors(sliced):
    """All slice assignments, big-endian over labels sorted by qubit index."""
    order = sorted(sliced, key=lambda l: int(l[1:]))
    m = len(order)
    for k in range(1 << m):
        yield {order[j]: (k >> (m - 1 - j)) & 1 for j in range(m)}


def selector_bits(selector: dict[str, int]) -> str:
    order = sorted(selector, key=lambda l: int(l[1:]))
    return "".join(str(selector[l]) for l in order)


class _Walk:
    def __init__(
        self,
        circuit: Circuit,
        scheme: ComputationScheme,
        with_data: bool,
        collect: bool,
        resolve_sums: bool,
    ):
        self.scheme = scheme
        self.with_data = with_data
        self.collect = collect
        self.resolve_sums = resolve_sums
        self.violations: list[str] = []
        self.counter = FlopCounter()
        self.current_bytes = 0
        self.peak_bytes = 0
        self.max_tensor_bytes = 0
        self.slices: list[tuple[dict[str, int], StateTensor]] = []
        self.merge_sums: list[tuple[str, ...]] = []

        if circuit.n_qubits != scheme.n_qubits:
            raise SchemeError("scheme and circuit qubit counts differ")
        self.circuit = working_circuit(circuit, scheme)
        self.sliced = set(scheme.sliced)
        for label in self.sliced:
            if not (label.startswith("q") and label[1:].isdigit()):
                raise SchemeError(f"sliced label {label!r} is not a qubit label")

        # per-qubit gate sequence and restriction point (last non-diagonal gate)
        n = circuit.n_qubits
        self.line_refs: list[list[GateRef]] = [[] for _ in range(n)]
        self.restriction_ref: list[GateRef | None] = [None] * n
        for t, layer in enumerate(self.circuit.layers):
            for i, g in enumerate(layer):
                ref = GateRef(t, i)
                for q in g.targets:
                    self.line_refs[q].append(ref)
                    if not g.diagonal:
                        self.restriction_ref[q] = ref
        # deferral barriers per line, from the scheme's own actions
        self.defer_refs: list[list[GateRef]] = [[] for _ in range(n)]
        for a in scheme.actions:
            if isinstance(a, Defer):
                try:
                    g = self.circuit.gate_at(a.gate.layer, a.gate.index)
                except Exception:
                    continue  # reported when the action runs
                for q in g.targets:
                    self.defer_refs[q].append(a.gate)

        self.subs: dict[str, _Sub] = {}
        self.qubit_sub: dict[int, str] = {}
        for name, labels in scheme.subcircuits.items():
            self.subs[name] = _Sub(name)
            for l in labels:
                self.qubit_sub[int(l[1:])] = name
        if set(self.qubit_sub) != set(range(n)):
            raise SchemeError("subcircuit registry must cover every qubit once")
        self.lines = [_Line(q, f"q{q}") for q in range(n)]
        self.label_home: dict[str, frozenset[str]] = {}
        self.applied: set[GateRef] = set()
        self.line_ptr: list[int] = [0] * n
        self.in_loop = False
        self.selector: dict[str, int] | None = None

    # ------------------------------------------------------------- utils
    def fail(self, msg: str):
        raise _Violation(msg)

    def _alloc(self, nbytes: int):
        self.current_bytes += nbytes
        self.peak_bytes = max(self.peak_bytes, self.current_bytes)
        self.max_tensor_bytes = max(self.max_tensor_bytes, nbytes)

    def _free(self, nbytes: int):
        self.current_bytes -= nbytes

    def _gate(self, ref: GateRef) -> Gate:
        try:
            return self.circuit.gate_at(ref.layer, ref.index)
        except Exception:
            self.fail(f"gate reference ({ref.layer}, {ref.index}) out of range")

    def _bit(self, q: int) -> int | None:
        if self.selector is None:
            return None
        return self.selector.get(f"q{q}")

    def _holder_of_line(self, q: int) -> str | None:
        label = self.lines[q].label
        for name in self.label_home.get(label, frozenset()):
            sub = self.subs.get(name)
            if sub and sub.tensor is not None and sub.tensor.has(label):
                return name
        return None

    def _set_tensor(self, sub: _Sub, tensor: StateTensor):
        sub.tensor = tensor
        for l in tensor.labels:
            self.label_home[l] = self.label_home.get(l, frozenset()) | {sub.name}

    def _mutate(self, sub: _Sub, new: StateTensor, *, same_shape: bool):
        """Replace a subcircuit tensor under the byte conventions."""
        old = sub.tensor
        cow = self.in_loop and sub.hoisted
        if old is None:
            self._alloc(new.nbytes)
        elif same_shape and not cow:
            self.max_tensor_bytes = max(self.max_tensor_bytes, new.nbytes)
        else:
            self._alloc(new.nbytes)
            if not cow:
                self._free(old.nbytes)
        if old is not None:
            for l in old.labels:
                if not new.has(l):
                    homes = self.label_home.get(l, frozenset()) - {sub.name}
                    if homes:
                        self.label_home[l] = homes
                    else:
                        self.label_home.pop(l, None)
        sub.tensor = new
        if cow:
            sub.hoisted = False
        for l in new.labels:
            self.label_home[l] = self.label_home.get(l, frozenset()) | {sub.name}

    # ------------------------------------------------------ line helpers
    def _order_check(self, q: int, ref: GateRef, exempt: bool):
        """Non-exempt gates of a line apply in order; defers are barriers."""
        if exempt:
            return
        refs = self.line_refs[q]
        ptr = self.line_ptr[q]
        while ptr < len(refs) and refs[ptr] in self.applied:
            ptr += 1
        if ptr >= len(refs) or refs[ptr] != ref:
            self.fail(
                f"gate ({ref.layer},{ref.index}) applied out of order on qubit {q}"
            )
        for d in self.defer_refs[q]:
            if d.layer < ref.layer and d not in self.applied:
                self.fail(
                    f"gate ({ref.layer},{ref.index}) on qubit {q} precedes its "
                    f"unapplied deferral at layer {d.layer}"
                )
        self.line_ptr[q] = ptr + 1

    def _check_defer_position(self, q: int, layer: int):
        for ref in self.line_refs[q]:
            if ref.layer > layer and ref in self.applied:
                self.fail(
                    f"deferral at layer {layer} on qubit {q} applied after a "
                    f"later gate on that line"
                )

    def _check_remote_history(self, q: int, layer: int):
        """Earlier dense gates of the remote line must already be applied.

        The only exception is a still-virgin line whose sole pending
        non-diagonal gate is its first gate: its creation column can be
        written into the pinned index later.
        """
        refs = self.line_refs[q]
        pending = [
            r
            for r in refs
            if r.layer < layer
            and r not in self.applied
            and not self._gate(r).diagonal
        ]
        if not pending:
            return
        if self.lines[q].virgin and len(pending) == 1 and refs[0] == pending[0]:
            return
        self.fail(
            f"deferral at layer {layer} on qubit {q} precedes that line's "
            f"unapplied non-diagonal gate at layer {pending[0].layer}"
        )

    def _freeze_sliced_lines(self):
        """Entering the loop: pin sliced lines whose value is already decided."""
        for label in self.sliced:
            q = int(label[1:])
            line = self.lines[q]
            if line.restricted:
                continue
            rr = self.restriction_ref[q]
            if line.virgin:
                if rr is None:
                    line.restricted = True
                    line.zero_valued = True
                    line.bit = 0
                continue
            if rr is None or rr in self.applied:
                line.restricted = True
                line.frozen_axis = True
                line.bit = self._bit(q)

    def _mode(self, q: int, ref: GateRef) -> str:
        line = self.lines[q]
        if line.restricted:
            return "C"
        if (
            self.in_loop
            and f"q{q}" in self.sliced
            and ref == self.restriction_ref[q]
        ):
            return "R"
        return "V" if line.virgin else "S"

    def _materialize_virgin(self, q: int, sub: _Sub):
        """Bring an untouched line into a tensor as the |0> column (free)."""
        line = self.lines[q]
        data = None
        if sub.tensor is None:
            if self.with_data:
                data = np.array([1.0, 0.0], dtype=complex)
            self._set_tensor(sub, StateTensor((line.label,), data))
            self._alloc(sub.tensor.nbytes)
        else:
            old = sub.tensor
            if self.with_data:
                data = np.multiply.outer(
                    old.amplitudes, np.array([1.0, 0.0], dtype=complex)
                )
            self._mutate(
                sub, StateTensor(old.labels + (line.label,), data), same_shape=False
            )
        line.virgin = False

    def _unit_tensor(self, sub: _Sub) -> StateTensor:
        data = np.ones((), dtype=complex) if self.with_data else None
        self._set_tensor(sub, StateTensor((), data))
        self._alloc(sub.tensor.nbytes)
        return sub.tensor

    def _scale_into(self, sub: _Sub, factor: complex | None):
        if sub.tensor is None:
            self.counter.add(mults=1)
            if self.with_data and factor is not None:
                sub.scale *= factor
            sub.scaled = True
            return
        self.counter.add(mults=1 << sub.tensor.rank)
        data = None
        if self.with_data:
            data = sub.tensor.amplitudes * factor
        self._mutate(sub, StateTensor(sub.tensor.labels, data), same_shape=True)

    # ------------------------------------------------------------ actions
    def do_apply(self, act: Apply):
        gate = self._gate(act.gate)
        if act.gate in self.applied:
            self.fail(f"gate ({act.gate.layer},{act.gate.index}) applied twice")
        sub = self.subs.get(act.subcircuit)
        if sub is None:
            self.fail(f"unknown subcircuit {act.subcircuit!r}")
        u = gate_unitary(gate.kind)
        modes = {q: self._mode(q, act.gate) for q in gate.targets}
        for q in gate.targets:
            self._order_check(q, act.gate, exempt=(modes[q] == "C"))
        self.applied.add(act.gate)
        if len(gate.targets) == 1:
            self._apply_1q(sub, gate, u, modes, act.gate)
        else:
            self._apply_2q(sub, gate, u, modes)

    def _apply_1q(
        self, sub: _Sub, gate: Gate, u: np.ndarray, modes: dict[int, str], ref: GateRef
    ):
        (q,) = gate.targets
        mode = modes[q]
        line = self.lines[q]
        if mode == "C":
            if not gate.diagonal:
                self.fail(
                    f"non-diagonal {gate.kind} on qubit {q} after its restriction "
                    f"point"
                )
            factor = u[line.bit, line.bit] if self.with_data else None
            self._scale_into(sub, factor)
            return
        if mode == "R":
            line.restricted = True
            line.bit = self._bit(q)
            if line.virgin:
                line.virgin = False
                if self.with_data:
                    sub.scale *= u[line.bit, 0]  # free column element read
                sub.scaled = True
                return
            if sub.tensor is None or not sub.tensor.has(line.label):
                self.fail(
                    f"restriction of qubit {q} applied in {sub.name!r}, which "
                    f"does not store its index"
                )
            bit = line.bit if self.with_data else 0
            if len(self.label_home.get(line.label, ())) > 1:
                # the line's index is a shared entanglement label: keep the
                # axis (it is summed at the gathering merge) and fold in the
                # selected gate row elementwise
                new = apply_diag_block(
                    sub.tensor, u[bit, :], (line.label,), self.counter
                )
                self._mutate(sub, new, same_shape=True)
                return
            new = row_restrict(sub.tensor, u, line.label, bit, self.counter)
            self._mutate(sub, new, same_shape=False)
            return
        if mode == "V":
            line.virgin = False
            if sub.tensor is None:
                data = u[:, 0].copy() if self.with_data else None
                self._set_tensor(sub, StateTensor((line.label,), data))
                self._alloc(sub.tensor.nbytes)
                return
            self._materialize_virgin(q, sub)
            # continue below as a stored application
        label = line.label
        holders = self.label_home.get(label, frozenset())
        stored_here = sub.tensor is not None and sub.tensor.has(label)
        if stored_here and (gate.diagonal or len(holders) == 1):
            new = apply_gate(sub.tensor, u, [label], self.counter)
            if not gate.diagonal and not label.startswith("q"):
                # keep line names deterministic: a dense gate moves the line
                # off its borrowed index name (free rename)
                fresh = growth_label(ref)
                new = new.renamed({label: fresh})
                self.label_home[fresh] = self.label_home.pop(label)
                line.label = fresh
            self._mutate(sub, new, same_shape=True)
            return
        if not holders:
            self.fail(f"qubit {q} has no stored index anywhere")
        # the label is an open entanglement index (shared with another
        # subcircuit) or lives elsewhere entirely: keep it and fold the
        # gate in as a coupled factor
        base = sub.tensor if sub.tensor is not None else self._unit_tensor(sub)
        if gate.diagonal:
            new = apply_diag_block(base, np.diagonal(u), (label,), self.counter)
            self._mutate(sub, new, same_shape=False)
            return
        new_line = growth_label(ref)
        new = apply_diag_block(base, u.T, (label, new_line), self.counter)
        self._mutate(sub, new, same_shape=False)
        line.label = new_line

    def _apply_2q(self, sub: _Sub, gate: Gate, u: np.ndarray, modes: dict[int, str]):
        a, b = gate.targets
        for pos, q in enumerate(gate.targets):
            if modes[q] == "R":
                self.fail(
                    f"slice restriction of qubit {q} falls on a two-qubit gate; "
                    f"restriction gates must be single-qubit"
                )
            if modes[q] == "C" and not line_diagonal(u, pos):
                self.fail(
                    f"{gate.kind} is not diagonal in restricted qubit {q}'s line"
                )
        for q in gate.targets:
            if modes[q] == "V":
                home = self.qubit_sub.get(q)
                if home != sub.name:
                    self.fail(
                        f"virgin qubit {q} of a two-qubit gate belongs to "
                        f"{home!r}, not {sub.name!r}"
                    )
                self._materialize_virgin(q, sub)
                modes[q] = "S"
        ma, mb = modes[a], modes[b]
        la, lb = self.lines[a], self.lines[b]

        if ma == "C" and mb == "C":
            factor = None
            if self.with_data:
                idx = (la.bit << 1) | lb.bit
                factor = u[idx, idx]
            self._scale_into(sub, factor)
            return
        if ma == "C" or mb == "C":
            fixed_pos = 0 if ma == "C" else 1
            bit = (la.bit if ma == "C" else lb.bit) if self.with_data else 0
            stored_q = b if ma == "C" else a
            if gate.diagonal:
                d = np.diagonal(u).reshape(2, 2)
                row = d[bit, :] if fixed_pos == 0 else d[:, bit]
                sub_u = np.diag(row)
            else:
                m4 = u.reshape(2, 2, 2, 2)
                sub_u = m4[bit, :, bit, :] if fixed_pos == 0 else m4[:, bit, :, bit]
            self._apply_stored(sub, [stored_q], sub_u)
            return
        for q in (a, b):
            label = self.lines[q].label
            if sub.tensor is None or not sub.tensor.has(label):
                self.fail(
                    f"two-qubit gate {gate.kind} crosses subcircuits "
                    f"(qubit {q} is not stored in {sub.name!r}); defer or merge first"
                )
            if not gate.diagonal and len(self.label_home.get(label, ())) > 1:
                self.fail(
                    f"non-diagonal {gate.kind} acts on the open entanglement "
                    f"index {label!r}; merge before applying it"
                )
        self._apply_stored(sub, [a, b], u)

    def _apply_stored(self, sub: _Sub, qubits: list[int], u: np.ndarray):
        labels = [self.lines[q].label for q in qubits]
        if sub.tensor is None or not all(sub.tensor.has(l) for l in labels):
            self.fail(f"labels {labels} not stored in subcircuit {sub.name!r}")
        new = apply_gate(sub.tensor, u, labels, self.counter)
        self._mutate(sub, new, same_shape=True)

    def do_defer(self, act: Defer):
        gate = self._gate(act.gate)
        if act.gate in self.applied:
            self.fail(f"gate ({act.gate.layer},{act.gate.index}) applied twice")
        if len(gate.targets) != 2:
            self.fail("only two-qubit gates can be deferred")
        sub = self.subs.get(act.assign)
        if sub is None:
            self.fail(f"unknown subcircuit {act.assign!r}")
        inside = [q for q in gate.targets if self.qubit_sub.get(q) == act.assign]
        if len(inside) != 1:
            self.fail(f"deferred gate must have exactly one qubit in {act.assign!r}")
        own = inside[0]
        remote = gate.targets[0] if gate.targets[1] == own else gate.targets[1]
        r_line, o_line = self.lines[remote], self.lines[own]
        if r_line.restricted:
            self.fail(
                f"deferral at ({act.gate.layer},{act.gate.index}) has a restricted "
                f"remote qubit {remote}; apply it directly instead"
            )
        expected = 1 if gate.diagonal else 2
        if len(act.labels) != expected:
            self.fail(
                f"{'diagonal' if gate.diagonal else 'non-diagonal'} deferral must "
                f"create exactly {expected} label(s), got {len(act.labels)}"
            )
        self._check_defer_position(remote, act.gate.layer)
        self._check_defer_position(own, act.gate.layer)
        self._check_remote_history(remote, act.gate.layer)
        if not o_line.restricted:
            self._order_check(own, act.gate, exempt=False)
        self.applied.add(act.gate)
        u = gate_unitary(gate.kind)
        remote_first = remote == gate.targets[0]

        if gate.diagonal:
            label = act.labels[0]
            cur = r_line.label
            if cur.startswith("q"):
                if not r_line.virgin:
                    holder = self._holder_of_line(remote)
                    if holder is None:
                        self.fail(f"lost the stored index of qubit {remote}")
                    h = self.subs[holder]
                    h.tensor = h.tensor.renamed({cur: label})
                    self.label_home[label] = self.label_home.pop(cur)
                r_line.label = label
            elif cur != label:
                self.fail(
                    f"deferral label {label!r} does not match the pinned label "
                    f"{cur!r} of qubit {remote}"
                )
            d = np.diagonal(u).reshape(2, 2)
            if not remote_first:
                d = d.T  # d[remote, own]
            if o_line.virgin:
                self._materialize_virgin(own, sub)
            base = sub.tensor if sub.tensor is not None else self._unit_tensor(sub)
            if o_line.restricted:
                obit = o_line.bit if self.with_data else 0
                new = apply_diag_block(base, d[:, obit], (label,), self.counter)
            else:
                new = apply_diag_block(
                    base, d, (label, o_line.label), self.counter
                )
            self._mutate(sub, new, same_shape=False)
            return

        pre, post = act.labels
        if o_line.restricted:
            self.fail("non-diagonal gate deferred onto a restricted own line")
        if r_line.virgin:
            home = self.subs[self.qubit_sub[remote]]
            self._materialize_virgin(remote, home)
        cur = r_line.label
        if cur != pre:
            holder = self._holder_of_line(remote)
            if holder is None:
                self.fail(f"lost the stored index of qubit {remote}")
            h = self.subs[holder]
            h.tensor = h.tensor.renamed({cur: pre})
            self.label_home[pre] = self.label_home.pop(cur)
        if o_line.virgin:
            self._materialize_virgin(own, sub)
        if sub.tensor is None or not sub.tensor.has(o_line.label):
            self.fail(
                f"own qubit {own} of the deferred gate is not stored in {sub.name!r}"
            )
        new = defer_grow_dense(
            sub.tensor, u, o_line.label, pre, post, remote_first, self.counter
        )
        self._mutate(sub, new, same_shape=False)
        r_line.label = post
        r_line.virgin = False

    def do_merge(self, act: Merge):
        if act.into not in self.subs or act.other not in self.subs:
            self.fail(f"merge of unknown subcircuit {act.into!r}/{act.other!r}")
        if act.into == act.other:
            self.fail("merge of a subcircuit with itself")
        a, b = self.subs[act.into], self.subs[act.other]
        ta, tb = self._sliced_view(a), self._sliced_view(b)
        combined_scale = a.scale * b.scale
        combined_scaled = a.scaled or b.scaled
        a_scalar = ta is None or ta.rank == 0
        b_scalar = tb is None or tb.rank == 0

        if a_scalar and b_scalar:
            self.merge_sums.append(())
            self.counter.add(mults=1)
            value = complex(1)
            if self.with_data:
                value = combined_scale
                for t in (ta, tb):
                    if t is not None:
                        value *= complex(t.amplitudes)
            for side in (a, b):
                if side.tensor is not None and not side.hoisted:
                    self._free(side.tensor.nbytes)
            self._drop_home(a.name)
            self._drop_home(b.name)
            a.tensor = None
            a.scale = value if self.with_data else 1.0
            a.scaled = True
            a.hoisted = False
        elif a_scalar or b_scalar:
            self.merge_sums.append(())
            t_side, s_side = (b, a) if a_scalar else (a, b)
            ts = tb if a_scalar else ta
            sc = ta if a_scalar else tb
            self.counter.add(mults=1 << ts.rank)
            data = None
            if self.with_data:
                factor = combined_scale
                if sc is not None:
                    factor *= complex(sc.amplitudes)
                data = ts.amplitudes * factor
            new = StateTensor(ts.labels, data)
            in_place = (
                not (t_side.hoisted and self.in_loop)
                and t_side.tensor is not None
                and ts.rank == t_side.tensor.rank
            )
            if not in_place:
                self._alloc(new.nbytes)
                if t_side.tensor is not None and not t_side.hoisted:
                    self._free(t_side.tensor.nbytes)
            if s_side.tensor is not None and not s_side.hoisted:
                self._free(s_side.tensor.nbytes)
            self._drop_home(a.name)
            self._drop_home(b.name)
            a.tensor = None
            self._set_tensor(a, new)
            a.scale, a.scaled = 1.0, False
            a.hoisted = False
        else:
            shared = sorted(set(ta.labels) & set(tb.labels))
            live_lines = {
                l.label for l in self.lines if not l.restricted
            }
            computed = tuple(
                sorted(
                    l
                    for l in shared
                    if l not in live_lines
                    and self.label_home.get(l, frozenset()) <= {a.name, b.name}
                )
            )
            self.merge_sums.append(computed)
            if not self.resolve_sums and tuple(sorted(act.sum_labels)) != computed:
                self.fail(
                    f"merge of {act.into!r} and {act.other!r} must sum "
                    f"{list(computed)}, scheme declares {sorted(act.sum_labels)}"
                )
            batch = tuple(l for l in shared if l not in computed)
            new = contract_shared(ta, tb, computed, self.counter, batch)
            self._alloc(new.nbytes)
            for side in (a, b):
                if not side.hoisted:
                    self._free(side.tensor.nbytes)
            self._drop_home(a.name)
            self._drop_home(b.name)
            a.tensor = None
            self._set_tensor(a, new)
            a.scale = combined_scale if self.with_data else 1.0
            a.scaled = combined_scaled
            a.hoisted = False
        for q, name in list(self.qubit_sub.items()):
            if name == act.other:
                self.qubit_sub[q] = act.into
        del self.subs[act.other]

    def _drop_home(self, name: str):
        for l, homes in list(self.label_home.items()):
            homes = homes - {name}
            if homes:
                self.label_home[l] = homes
            else:
                del self.label_home[l]

    def _sliced_view(self, sub: _Sub) -> StateTensor | None:
        """Index away frozen axes of sliced lines (free coordinate views)."""
        t = sub.tensor
        if t is None:
            return None
        for line in self.lines:
            if line.frozen_axis and t.has(line.label):
                bit = line.bit if self.with_data else 0
                t = fix_label(t, line.label, bit)
        return t

    def do_emit(self, act: EmitSlice) -> StateTensor:
        expected = {f"q{q}" for q in range(self.scheme.n_qubits)}
        if set(act.output) | self.sliced != expected or set(act.output) & self.sliced:
            self.fail(
                "emit output labels plus sliced labels must cover every qubit "
                "exactly once"
            )
        if len(self.subs) != 1:
            self.fail(
                f"emit with {len(self.subs)} subcircuits remaining; merge them first"
            )
        (sub,) = self.subs.values()
        for label in act.output:
            q = int(label[1:])
            if self.lines[q].virgin:
                self._materialize_virgin(q, sub)
        t = self._sliced_view(sub)
        if t is None:
            t = StateTensor((), np.ones((), dtype=complex) if self.with_data else None)
        want = {self.lines[int(l[1:])].label for l in act.output}
        have = set(t.labels)
        if have != want:
            extra = sorted(have - want)
            if extra:
                self.fail(f"unresolved entanglement: labels {extra} remain at emit")
            self.fail(f"missing output labels {sorted(want - have)} at emit")
        rename = {self.lines[int(l[1:])].label: l for l in act.output}
        t = t.renamed(rename).reordered(act.output)
        if sub.scaled:
            self.counter.add(mults=1 << t.rank)
        if self.with_data:
            factor = sub.scale
            for line in self.lines:
                if line.zero_valued and self.selector is not None:
                    if self.selector.get(f"q{line.qubit}", 0) != 0:
                        factor = 0.0
            if factor != 1.0 or sub.scaled:
                t = StateTensor(t.labels, t.amplitudes * factor)
        return t

    # -------------------------------------------------------------- run
    def snapshot(self):
        return (
            {k: v.clone() for k, v in self.subs.items()},
            [l.clone() for l in self.lines],
            dict(self.label_home),
            dict(self.qubit_sub),
            set(self.applied),
            list(self.line_ptr),
            self.current_bytes,
        )

    def restore(self, snap):
        subs, lines, homes, qs, applied, ptrs, cur = snap
        self.subs = {k: v.clone() for k, v in subs.items()}
        self.lines = [l.clone() for l in lines]
        self.label_home = dict(homes)
        self.qubit_sub = dict(qs)
        self.applied = set(applied)
        self.line_ptr = list(ptrs)
        self.current_bytes = cur

    def run(self, selectors) -> ReplayResult:
        actions = self.scheme.actions
        try:
            self._structure_check(actions)
            split = next(
                (i for i, a in enumerate(actions) if isinstance(a, SliceLoop)), None
            )
            if split is None:
                if self.sliced:
                    self.fail("sliced labels declared but no slice loop marker")
                self._walk(actions, None)
            else:
                self._walk(actions[:split], None)
                for sub in self.subs.values():
                    if sub.tensor is not None:
                        sub.hoisted = True
                self.in_loop = True
                snap = self.snapshot()
                body = actions[split + 1 :]
                if selectors is None:
                    base_m = self.counter.multiplications
                    base_a = self.counter.additions
                    self._walk(body, {})
                    trips = self.scheme.slice_count
                    self.counter.multiplications = base_m + trips * (
                        self.counter.multiplications - base_m
                    )
                    self.counter.additions = base_a + trips * (
                        self.counter.additions - base_a
                    )
                else:
                    first = True
                    for sel in selectors:
                        if not first:
                            self.restore(snap)
                        first = False
                        self._walk(body, dict(sel))
                    if first:
                        self.fail("no slice selectors supplied")
            self._coverage_check()
        except _Violation as v:
            self.violations.append(str(v))
        return ReplayResult(
            counter=self.counter,
            peak_bytes=self.peak_bytes,
            max_tensor_bytes=self.max_tensor_bytes,
            slices=self.slices,
            violations=self.violations,
            merge_sums=self.merge_sums,
        )

    def _structure_check(self, actions):
        if not actions or not isinstance(actions[-1], EmitSlice):
            self.fail("scheme must end with an emit action")
        emits = [a for a in actions if isinstance(a, EmitSlice)]
        if len(emits) != 1:
            self.fail("scheme must contain exactly one emit action")
        marks = [i for i, a in enumerate(actions) if isinstance(a, SliceLoop)]
        if len(marks) > 1:
            self.fail("more than one slice loop marker")
        first_real = next(
            (i for i, a in enumerate(actions) if not isinstance(a, Transform)), None
        )
        if any(
            isinstance(a, Transform)
            for a in actions[first_real if first_real is not None else 0 :]
        ):
            self.fail("transform actions must precede all others")

    def _walk(self, actions, selector: dict[str, int] | None):
        if selector is not None:
            self.selector = selector if self.with_data else None
            if self.with_data:
                missing = self.sliced - set(selector)
                if missing:
                    self.fail(f"selector missing bits for {sorted(missing)}")
            self._freeze_sliced_lines()
        for act in actions:
            if isinstance(act, Transform):
                continue
            if isinstance(act, Apply):
                self.do_apply(act)
            elif isinstance(act, Defer):
                self.do_defer(act)
            elif isinstance(act, Merge):
                self.do_merge(act)
            elif isinstance(act, EmitSlice):
                out = self.do_emit(act)
                if self.collect:
                    self.slices.append((dict(selector or {}), out))

    def _coverage_check(self):
        all_refs = {
            GateRef(t, i)
            for t, layer in enumerate(self.circuit.layers)
            for i in range(len(layer))
        }
        missing = all_refs - self.applied
        if missing:
            ref = min(missing, key=lambda r: (r.layer, r.index))
            self.fail(f"gate coverage: gate ({ref.layer},{ref.index}) never applied")


def replay(
    circuit: Circuit,
    scheme: ComputationScheme,
    *,
    selectors=None,
    with_data: bool = True,
    collect: bool = True,
    strict: bool = True,
    resolve_sums: bool = False,
) -> ReplayResult:
    """Walk a scheme: execute with data, or estimate/validate without.

    ``selectors`` is an iterable of slice assignments for execution, or
    ``None`` for a single symbolic pass whose loop-body costs are
    multiplied by the trip count.
    """
    walk = _Walk(circuit, scheme, with_data, collect, resolve_sums)
    result = walk.run(selectors)
    if strict and result.violations:
        raise SchemeError("; ".join(result.violations))
    return result
