"""Scheme planning: partitioning, deferral, slicing, search, Pareto data.

Planning runs in two phases.  A chronological *scan* walks the
(transform-rewritten) circuit keeping a singleton-start partition,
decides merge vs. defer for every crossing entangling gate, and picks
the slice set greedily (earliest-restricted qubits first) until the
exact replayed peak fits the memory limit.  A *schedule* pass then
orders the per-subcircuit work to keep the live set small: subcircuits
that receive deferred gates run first, larger standalone peaks run
before smaller ones, and a pinned index is resolved by merging as soon
as its partner subcircuit has finished.  The exact cost of the
assembled scheme comes from the shared replay engine; the planner's
internal size estimates only steer decisions.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from .circuit import Circuit, transform_cx_many
from .engine import growth_label, replay
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
)

BYTES_PER_AMP = 16
NODES_PER_SECOND = 200  # deterministic stand-in for the search time budget
OPEN_LABEL_BOUND = 8


class InfeasibleError(ValueError):
    """The memory limit is below the minimal feasible peak."""

    def __init__(self, limit: int, minimal: int):
        super().__init__(
            f"memory limit {limit} bytes is infeasible; "
            f"minimal feasible peak is {minimal} bytes"
        )
        self.limit = limit
        self.minimal = minimal


def gate_cost(kind: str, n: int) -> CostEstimate:
    """Per-gate cost on an n-qubit state: the normative cost-table row."""
    if n < 1:
        raise ValueError("subcircuit label count must be at least 1")
    if kind in ("z", "s", "t", "id", "cz"):
        mults, adds = 1 << n, 0
    elif kind in ("h", "x", "y", "sqrt_x", "sqrt_y"):
        mults, adds = 1 << (n + 1), 1 << n
    elif kind == "cx":
        mults, adds = 1 << (n + 2), 3 * (1 << n)
    else:
        raise ValueError(f"unsupported gate class {kind!r}")
    return CostEstimate(mults, adds, 1 << (n + 4))


def scheme_cost(circuit: Circuit, scheme: ComputationScheme) -> CostEstimate:
    """Exact symbolic replay: operation counts and peak live bytes."""
    return replay(circuit, scheme, with_data=False, collect=False).cost()


def validate_scheme(circuit: Circuit, scheme: ComputationScheme) -> list[str]:
    """Empty list if the scheme replays cleanly; violations otherwise."""
    return replay(
        circuit, scheme, with_data=False, collect=False, strict=False
    ).violations


def detect_sliceable(circuit: Circuit, from_layer: int) -> set[int]:
    """Qubits whose every gate in layers from_layer.. is diagonal."""
    if not 0 <= from_layer <= circuit.depth:
        raise ValueError(f"from_layer {from_layer} outside 0..{circuit.depth}")
    out = set(range(circuit.n_qubits))
    for layer in circuit.layers[from_layer:]:
        for g in layer:
            if not g.diagonal:
                out -= set(g.targets)
    return out


def rule1_transforms(circuit: Circuit) -> list[GateRef]:
    """CX positions to diagonalize: all later control-line gates diagonal.

    Decided in reverse order so later rewrites (which put a diagonal CZ
    on their control and Hadamards on their target) are accounted for.
    """
    flat = [
        (GateRef(t, i), g)
        for t, layer in enumerate(circuit.layers)
        for i, g in enumerate(layer)
    ]
    diagonal_tail = [True] * circuit.n_qubits
    chosen: list[GateRef] = []
    for ref, g in reversed(flat):
        if g.kind == "cx":
            control, target = g.targets
            if diagonal_tail[control]:
                chosen.append(ref)
                diagonal_tail[target] = False  # the inserted Hadamards
            else:
                diagonal_tail[control] = False
                diagonal_tail[target] = False
        elif not g.diagonal:
            for q in g.targets:
                diagonal_tail[q] = False
    return sorted(chosen, key=lambda r: (r.layer, r.index))


# --------------------------------------------------------------------- scan


@dataclass
class _Placement:
    kind: str  # "apply" | "defer" | "merge"
    ref: GateRef | None
    sub: str
    other: str = ""
    labels: tuple[str, ...] = ()
    remote: int = -1  # the deferred gate's qubit outside the assigned side
    size_before: int = 0
    size_after: int = 0


@dataclass
class _ScanResult:
    placements: list[_Placement]
    decision_trace: list[tuple[str, ...]]
    growth_partners: dict[GateRef, tuple[str, ...]]
    rr_ref: list[GateRef | None]
    sliced: tuple[str, ...]


class _Scan:
    """Chronological pass deciding merges, deferrals and routings."""

    def __init__(
        self,
        working: Circuit,
        sliced,
        mem_limit: int,
        decisions,
        eager=False,
        partition=None,
        side_overrides=None,
    ):
        self.w = working
        self.n = working.n_qubits
        self.limit = mem_limit
        self.sliced = set(sliced)
        self.eager = eager  # merge every crossing gate: the classical scheme
        self.partition = partition  # qubit -> group id; defer across groups
        self.side_overrides = side_overrides or {}
        self.decisions = list(decisions)
        self.decision_trace: list[tuple[str, ...]] = []
        self.parent = {f"s{q}": f"s{q}" for q in range(self.n)}
        self.axes: dict[str, set[str]] = {f"s{q}": set() for q in range(self.n)}
        self.line_label = [f"q{q}" for q in range(self.n)]
        self.line_holder = [f"s{q}" for q in range(self.n)]
        self.holders: dict[str, set[str]] = {}
        self.placements: list[_Placement] = []
        self.growth_partners: dict[GateRef, tuple[str, ...]] = {}
        self.fresh = 0
        self.rr_layer = [-1] * self.n
        self.rr_ref: list[GateRef | None] = [None] * self.n
        for t, layer in enumerate(working.layers):
            for i, g in enumerate(layer):
                if not g.diagonal:
                    for q in g.targets:
                        self.rr_layer[q] = t
                        self.rr_ref[q] = GateRef(t, i)

    def find(self, name: str) -> str:
        while self.parent[name] != name:
            self.parent[name] = self.parent[self.parent[name]]
            name = self.parent[name]
        return name

    def fresh_label(self) -> str:
        self.fresh += 1
        return f"e{self.fresh - 1}"

    def restricted_at(self, q: int, layer: int) -> bool:
        return f"q{q}" in self.sliced and self.rr_layer[q] < layer

    def is_restriction(self, q: int, ref: GateRef) -> bool:
        return f"q{q}" in self.sliced and self.rr_ref[q] == ref

    def _bytes_of(self, name: str) -> int:
        return BYTES_PER_AMP * (1 << len(self.axes[name]))

    def _place(self, kind, ref, sub, other="", labels=()) -> _Placement:
        p = _Placement(kind, ref, sub, other, labels)
        self.placements.append(p)
        return p

    def _ensure_axis(self, q: int):
        label = self.line_label[q]
        home = self.find(self.line_holder[q])
        self.axes[home].add(label)

    def run(self) -> _ScanResult:
        for t, layer in enumerate(self.w.layers):
            for i, g in enumerate(layer):
                ref = GateRef(t, i)
                if len(g.targets) == 1:
                    self._scan_1q(ref, g, t)
                else:
                    self._scan_2q(ref, g, t)
        return _ScanResult(
            self.placements,
            self.decision_trace,
            self.growth_partners,
            self.rr_ref,
            tuple(sorted(self.sliced, key=lambda l: int(l[1:]))),
        )

    def _scan_1q(self, ref: GateRef, g, t: int):
        (q,) = g.targets
        home = self.find(self.line_holder[q])
        if self.restricted_at(q, t):
            p = self._place("apply", ref, home)
            p.size_before = p.size_after = len(self.axes[home])
            return
        if self.is_restriction(q, ref):
            p = self._place("apply", ref, home)
            p.size_before = len(self.axes[home])
            if len(self.holders.get(self.line_label[q], ())) <= 1:
                # a shared pinned index survives restriction (summed at merge)
                self.axes[home].discard(self.line_label[q])
            p.size_after = len(self.axes[home])
            return
        label = self.line_label[q]
        if not g.diagonal and len(self.holders.get(label, ())) > 1:
            # growth point: the pinned index stays behind, the line moves on.
            # Folding the partners in instead resolves their shared labels;
            # do that when it yields the smaller tensor, otherwise grow and
            # let the scheduler merge once the partner has finished.
            partners = sorted(
                {self.find(m) for m in self.holders.get(label, ())} - {home}
            )
            grown = len(self.axes[home]) + 1
            folded = self._folded_size(home, partners)
            if folded < grown and self.partition is None:
                for partner in partners:
                    self._do_merge(home, partner)
                    home = self.find(home)
                self.axes[home].discard(label)  # renamed in place by the gate
                self.holders.pop(label, None)
            else:
                self.growth_partners[ref] = tuple(partners)
            self.line_label[q] = growth_label(ref)
        elif not g.diagonal and not label.startswith("q"):
            # dense gates rename borrowed line names (mirrors execution)
            self.axes[home].discard(label)
            self.holders.pop(label, None)
            self.line_label[q] = growth_label(ref)
        p = self._place("apply", ref, home)
        p.size_before = len(self.axes[home])
        self._ensure_axis(q)
        p.size_after = len(self.axes[self.find(home)])

    def _folded_size(self, home: str, partners) -> int:
        union = set(self.axes[home])
        group = {home, *partners}
        for partner in partners:
            union |= self.axes[partner]
        line_now = set(self.line_label)
        summable = {
            l
            for l in union
            if not l.startswith("q")
            and l not in line_now
            and self.holders.get(l, set()) <= group
        }
        return len(union - summable)

    def _scan_2q(self, ref: GateRef, g, t: int):
        a, b = g.targets
        ra, rb = self.restricted_at(a, t), self.restricted_at(b, t)
        if ra and rb:
            home = self.find(self.line_holder[a])
            p = self._place("apply", ref, home)
            p.size_before = p.size_after = len(self.axes[home])
            return
        if ra or rb:
            live = b if ra else a
            self._ensure_axis(live)
            home = self.find(self.line_holder[live])
            p = self._place("apply", ref, home)
            p.size_before = p.size_after = len(self.axes[home])
            return
        self._ensure_axis(a)
        self._ensure_axis(b)
        sa = self.find(self.line_holder[a])
        sb = self.find(self.line_holder[b])
        if sa == sb:
            p = self._place("apply", ref, sa)
            p.size_before = p.size_after = len(self.axes[sa])
            return
        moved = self.line_holder[a] != f"s{a}" or self.line_holder[b] != f"s{b}"
        choice = self._decide(ref, g, sa, sb, moved)
        if choice == "merge":
            self._do_merge(sa, sb)
            top = self.find(sa)
            p = self._place("apply", ref, top)
            p.size_before = p.size_after = len(self.axes[top])
            return
        assign = sa if choice == "defer_a" else sb
        own, remote = (a, b) if choice == "defer_a" else (b, a)
        self._do_defer(ref, g, assign, own, remote)

    def _decide(self, ref: GateRef, g, sa: str, sb: str, moved: bool) -> str:
        shared_open = {
            l for l in (self.axes[sa] & self.axes[sb]) if not l.startswith("q")
        }
        if moved or len(shared_open) >= OPEN_LABEL_BOUND:
            return "merge"
        if ref in self.side_overrides:
            return self.side_overrides[ref]
        if self.eager:
            return "merge"
        if self.partition is not None:
            a, b = g.targets
            if self.partition[a] == self.partition[b]:
                return "merge"
            side_a = self._prefer_a(sa, sb)
            self.decision_trace.append(("merge", "defer_a", "defer_b"))
            idx = len(self.decision_trace) - 1
            if idx < len(self.decisions) and self.decisions[idx] in (
                "merge",
                "defer_a",
                "defer_b",
            ):
                return self.decisions[idx]
            return "defer_a" if side_a else "defer_b"
        line_now = set(self.line_label)
        summable = {l for l in shared_open if l not in line_now}
        union = len(self.axes[sa] | self.axes[sb]) - len(summable)
        merged_bytes = BYTES_PER_AMP * (1 << union)
        labels = 1 if g.diagonal else 2
        side_a = self._prefer_a(sa, sb)
        assign = sa if side_a else sb
        grown_bytes = BYTES_PER_AMP * (1 << (len(self.axes[assign]) + labels))
        # keep several subcircuits alive plus one growth transient in budget
        if 5 * merged_bytes <= self.limit:
            default = "merge"
        elif 2 * grown_bytes <= self.limit or grown_bytes < merged_bytes:
            default = "defer_a" if side_a else "defer_b"
        else:
            default = "merge"  # the least-bad overflow
        self.decision_trace.append(("merge", "defer_a", "defer_b"))
        idx = len(self.decision_trace) - 1
        if idx < len(self.decisions) and self.decisions[idx] in (
            "merge",
            "defer_a",
            "defer_b",
        ):
            return self.decisions[idx]
        return default

    def _prefer_a(self, sa: str, sb: str) -> bool:
        """Deferral side: smaller subcircuit, then the more sliceable one."""
        ka, kb = len(self.axes[sa]), len(self.axes[sb])
        if ka != kb:
            return ka < kb

        def sliced_count(name: str) -> int:
            return sum(
                1
                for q in range(self.n)
                if self.find(self.line_holder[q]) == name
                and f"q{q}" in self.sliced
            )

        ca, cb = sliced_count(sa), sliced_count(sb)
        if ca != cb:
            return ca > cb
        return int(sa[1:]) > int(sb[1:])

    def _do_merge(self, sa: str, sb: str):
        line_now = set(self.line_label)
        shared = self.axes[sa] & self.axes[sb]
        summable = {
            l
            for l in shared
            if l not in line_now and self.holders.get(l, set()) <= {sa, sb}
        }
        self._place("merge", None, sa, other=sb)
        self.axes[sa] = (self.axes[sa] | self.axes[sb]) - summable
        self.axes[sb] = set()
        self.parent[sb] = sa
        for l, hs in list(self.holders.items()):
            if sb in hs:
                hs.discard(sb)
                hs.add(sa)
            if l in summable:
                del self.holders[l]

    def _do_defer(self, ref: GateRef, g, assign: str, own: int, remote: int):
        r_home = self.find(self.line_holder[remote])
        cur = self.line_label[remote]
        if g.diagonal:
            if cur.startswith("q"):
                label = self.fresh_label()
                self.axes[r_home].discard(cur)
                self.axes[r_home].add(label)
                self.line_label[remote] = label
                self.holders[label] = {r_home}
            else:
                label = cur
                self.holders.setdefault(label, {r_home})
            labels = (label,)
            self.axes[assign].add(label)
            self.holders[label].add(assign)
        else:
            if cur.startswith("q"):
                pre = self.fresh_label()
                self.axes[r_home].discard(cur)
                self.axes[r_home].add(pre)
                self.holders[pre] = {r_home}
            else:
                pre = cur
                self.holders.setdefault(pre, {r_home})
            post = self.fresh_label()
            labels = (pre, post)
            self.axes[assign].update(labels)
            self.holders[pre].add(assign)
            self.holders[post] = {assign}
            self.line_label[remote] = post
            self.line_holder[remote] = assign
        p = self._place("defer", ref, assign, labels=labels)
        p.remote = remote
        p.size_after = len(self.axes[assign])
        p.size_before = max(p.size_after - len(labels), 0)


# ----------------------------------------------------------------- schedule


class _Cycle(Exception):
    pass


class _Scheduler:
    """Order the scan's placements to keep the live set small."""

    def __init__(self, scan: _ScanResult, working: Circuit):
        self.scan = scan
        self.n = working.n_qubits
        self.touch = {
            GateRef(t, i): g.targets
            for t, layer in enumerate(working.layers)
            for i, g in enumerate(layer)
        }
        self.queues: dict[str, list[_Placement]] = {
            f"s{q}": [] for q in range(self.n)
        }
        self.loc: dict[GateRef, tuple[str, int]] = {}
        for p in scan.placements:
            self.queues.setdefault(p.sub, [])
            self.queues[p.sub].append(p)
            if p.ref is not None:
                self.loc[p.ref] = (p.sub, len(self.queues[p.sub]) - 1)
        self.ptr = {name: 0 for name in self.queues}
        self.state = {name: "todo" for name in self.queues}
        self.parent = {name: name for name in self.queues}
        self.actions: list = []
        self.applied: set[GateRef] = set()
        self.sliced = set(scan.sliced)
        self.line_defers: list[list[GateRef]] = [[] for _ in range(self.n)]
        for p in scan.placements:
            if p.kind == "defer":
                for q in self.touch[p.ref]:
                    self.line_defers[q].append(p.ref)
        self.line_refs: list[list[tuple[GateRef, bool]]] = [
            [] for _ in range(self.n)
        ]
        for t, layer in enumerate(working.layers):
            for i, g in enumerate(layer):
                for q in g.targets:
                    self.line_refs[q].append((GateRef(t, i), g.diagonal))

    def canon(self, name: str) -> str:
        while self.parent[name] != name:
            self.parent[name] = self.parent[self.parent[name]]
            name = self.parent[name]
        return name

    def queue_peak(self, name: str) -> int:
        peak = 0
        for p in self.queues[name]:
            if p.kind == "merge":
                break
            hi = BYTES_PER_AMP * (1 << p.size_after)
            if p.size_after != p.size_before:
                hi += BYTES_PER_AMP * (1 << p.size_before)
            peak = max(peak, hi)
        return peak

    def order(self) -> list[str]:
        defer_subs = {p.sub for p in self.scan.placements if p.kind == "defer"}
        return sorted(
            self.queues,
            key=lambda m: (
                0 if m in defer_subs else 1,
                -self.queue_peak(m),
                int(m[1:]),
            ),
        )

    def run(self) -> list:
        for name in self.order():
            self.advance(name)
        for name in self.queues:
            self.advance(name)
        remaining = sorted(
            {self.canon(m) for m in self.queues}, key=lambda m: int(m[1:])
        )
        acc = remaining[0]
        for other in remaining[1:]:
            self.actions.append(Merge(acc, other, ()))
            self.parent[other] = acc
        return self.actions

    def advance(self, name: str, upto: int | None = None):
        if self.state[name] == "done":
            return
        if self.state[name] == "active":
            raise _Cycle(name)
        self.state[name] = "active"
        try:
            q = self.queues[name]
            end = len(q) if upto is None else min(upto + 1, len(q))
            while self.ptr[name] < end:
                p = q[self.ptr[name]]
                self.ptr[name] += 1
                self.emit(name, p)
        finally:
            self.state[name] = (
                "done" if self.ptr[name] >= len(self.queues[name]) else "todo"
            )

    def emit(self, name: str, p: _Placement):
        if p.kind == "merge":
            self.advance(p.other)
            into, other = self.canon(name), self.canon(p.other)
            if into != other:
                self.actions.append(Merge(into, other, ()))
                self.parent[other] = into
            return
        if p.kind == "defer":
            self._pull_restrictions(p.ref)
            self._pull_defer_history(p)
            mine = self.canon(name)
            if p.remote >= 0 and self.canon(f"s{p.remote}") == mine:
                # reordering already co-located both sides: apply directly
                self.actions.append(Apply(mine, p.ref))
            else:
                self.actions.append(Defer(p.ref, mine, p.labels))
            self.applied.add(p.ref)
            return
        self._pull_restrictions(p.ref)
        for partner in self.scan.growth_partners.get(p.ref, ()):
            mine, theirs = self.canon(name), self.canon(partner)
            if theirs != mine and self.state.get(partner) == "done":
                self.actions.append(Merge(mine, theirs, ()))
                self.parent[theirs] = mine
        self.actions.append(Apply(self.canon(name), p.ref))
        self.applied.add(p.ref)

    def _pull_restrictions(self, ref: GateRef):
        """Pull work this gate depends on from other queues.

        Lines used as fixed slice bits need their restriction gate
        first, and a line's deferral actions are barriers for the
        line's later gates.
        """
        for q in self.touch.get(ref, ()):
            for dref in self.line_defers[q]:
                if (
                    dref != ref
                    and dref.layer < ref.layer
                    and dref not in self.applied
                    and dref in self.loc
                ):
                    sub, idx = self.loc[dref]
                    self.advance(sub, upto=idx)
            rr = self.scan.rr_ref[q]
            if (
                f"q{q}" in self.sliced
                and rr is not None
                and rr != ref
                and rr not in self.applied
                and rr.layer < ref.layer
                and rr in self.loc
            ):
                sub, idx = self.loc[rr]
                self.advance(sub, upto=idx)

    def _pull_defer_history(self, p: _Placement):
        """Line history a deferral depends on.

        The assigned side's own line needs everything earlier applied;
        the remote line needs its earlier dense gates applied, except a
        virgin line's first gate, whose column lands in the pinned index.
        """
        layer = p.ref.layer
        for q in self.touch[p.ref]:
            earlier = [(r, d) for r, d in self.line_refs[q] if r.layer < layer]
            if q == p.remote:
                applied_any = any(r in self.applied for r, _ in earlier)
                dense_pending = [
                    r for r, d in earlier if not d and r not in self.applied
                ]
                if not applied_any and len(dense_pending) <= 1 and (
                    not dense_pending or (earlier and earlier[0][0] == dense_pending[0])
                ):
                    continue  # creation column may land in the pinned index later
                upto = max(
                    (r for r in dense_pending), default=None,
                    key=lambda r: (r.layer, r.index),
                )
                if upto is None:
                    continue
                for r, _ in earlier:
                    if r not in self.applied and r in self.loc:
                        sub, idx = self.loc[r]
                        self.advance(sub, upto=idx)
                    if r == upto:
                        break
            else:
                for r, _ in earlier:
                    if r not in self.applied and r in self.loc:
                        sub, idx = self.loc[r]
                        self.advance(sub, upto=idx)


def _chronological_actions(scan: _ScanResult, n: int) -> list:
    """Fallback schedule: placements in circuit order (always valid)."""
    parent = {f"s{q}": f"s{q}" for q in range(n)}

    def find(name: str) -> str:
        while parent[name] != name:
            parent[name] = parent[parent[name]]
            name = parent[name]
        return name

    actions: list = []
    for p in scan.placements:
        if p.kind == "merge":
            into, other = find(p.sub), find(p.other)
            if into != other:
                actions.append(Merge(into, other, ()))
                parent[other] = into
        elif p.kind == "defer":
            actions.append(Defer(p.ref, find(p.sub), p.labels))
        else:
            actions.append(Apply(find(p.sub), p.ref))
    remaining = sorted(
        {find(f"s{q}") for q in range(n)}, key=lambda m: int(m[1:])
    )
    acc = remaining[0]
    for other in remaining[1:]:
        actions.append(Merge(acc, other, ()))
        parent[other] = acc
    return actions


# ------------------------------------------------------------------ builder


def _resolve(circuit: Circuit, scheme: ComputationScheme) -> ComputationScheme | None:
    """Fill merge sum lists from a symbolic replay and attach the cost."""
    resolved = replay(
        circuit,
        scheme,
        with_data=False,
        collect=False,
        strict=False,
        resolve_sums=True,
    )
    if resolved.violations:
        return None
    sums = iter(resolved.merge_sums)
    fixed = tuple(
        Merge(a.into, a.other, tuple(next(sums))) if isinstance(a, Merge) else a
        for a in scheme.actions
    )
    scheme = ComputationScheme(scheme.n_qubits, fixed, scheme.sliced)
    final = replay(circuit, scheme, with_data=False, collect=False, strict=False)
    if final.violations:
        return None
    scheme.cost = final.cost()
    return scheme


def _finalize(
    circuit: Circuit,
    transforms: list[GateRef],
    sliced: tuple[str, ...],
    actions: list,
    mem_limit: int | None = None,
) -> ComputationScheme | None:
    n = circuit.n_qubits
    output = tuple(f"q{q}" for q in range(n) if f"q{q}" not in set(sliced))
    head: list = [Transform(r) for r in transforms]
    tail = actions + [EmitSlice(output)]
    if not sliced:
        return _resolve(circuit, ComputationScheme(n, tuple(head + tail), sliced))
    best = None
    for split in _hoist_splits(len(actions)):
        candidate = ComputationScheme(
            n,
            tuple(head + tail[:split] + [SliceLoop()] + tail[split:]),
            sliced,
        )
        candidate = _resolve(circuit, candidate)
        if candidate is None:
            continue
        limit = mem_limit if mem_limit is not None else 1 << 62
        best = _better(best, candidate, limit)
    return best


def _hoist_splits(body_len: int) -> list[int]:
    """Loop-boundary positions to try: slice everything, plus hoisted prefixes."""
    if body_len <= 24:
        return list(range(body_len + 1))
    return sorted({0, *(body_len * i // 8 for i in range(1, 9))})


def _build_one(
    circuit: Circuit,
    mem_limit: int,
    transforms: list[GateRef],
    sliced,
    decisions,
    eager: bool = False,
    partition=None,
    side_overrides=None,
) -> tuple[ComputationScheme | None, list[tuple[str, ...]]]:
    working = transform_cx_many(circuit, [(r.layer, r.index) for r in transforms])
    scan = _Scan(
        working,
        sliced,
        mem_limit,
        decisions,
        eager=eager,
        partition=partition,
        side_overrides=side_overrides,
    ).run()
    scheme = None
    try:
        actions = _Scheduler(scan, working).run()
        scheme = _finalize(circuit, transforms, scan.sliced, actions, mem_limit)
    except _Cycle:
        scheme = None
    if scheme is None:
        actions = _chronological_actions(scan, circuit.n_qubits)
        scheme = _finalize(circuit, transforms, scan.sliced, actions, mem_limit)
    return scheme, scan.decision_trace


def _partition_candidates(circuit: Circuit) -> list[list[int]]:
    """Contiguous 2-4 way grid bands (or index bands without geometry)."""
    n = circuit.n_qubits
    bands: list[list[int]] = []
    if circuit.geometry is not None:
        rows, cols = circuit.geometry
        for g in (2, 3, 4):
            if cols >= g:
                bands.append([(q % cols) * g // cols for q in range(n)])
            if rows >= g:
                bands.append([(q // cols) * g // rows for q in range(n)])
    else:
        for g in (2, 3):
            if n >= 2 * g:
                bands.append([q * g // n for q in range(n)])
    uniq: list[list[int]] = []
    for p in bands:
        if len(set(p)) > 1 and p not in uniq:
            uniq.append(p)
    return uniq


def _better(a: ComputationScheme | None, b: ComputationScheme | None, limit: int):
    """Prefer fitting the limit, then fewer operations, then fewer bytes."""
    if a is None:
        return b
    if b is None:
        return a
    a_fits = a.cost.peak_bytes <= limit
    b_fits = b.cost.peak_bytes <= limit
    if a_fits != b_fits:
        return a if a_fits else b
    if a_fits:
        a_key = (a.cost.multiplications, a.cost.additions, a.cost.peak_bytes)
        b_key = (b.cost.multiplications, b.cost.additions, b.cost.peak_bytes)
        return a if a_key <= b_key else b
    return a if a.cost.peak_bytes <= b.cost.peak_bytes else b


def _build_scheme(
    circuit: Circuit,
    mem_limit: int,
    transforms: list[GateRef],
    sliced,
    decisions,
) -> tuple[ComputationScheme | None, list[tuple[str, ...]]]:
    """Best of the rule-based, merge-on-contact and fixed-partition plans."""
    best, trace = _build_one(circuit, mem_limit, transforms, sliced, decisions)
    if best is not None:
        best.policy = ("rules",)
    eager, _ = _build_one(circuit, mem_limit, transforms, sliced, (), eager=True)
    if eager is not None:
        eager.policy = ("eager",)
    best = _better(best, eager, mem_limit)
    if best is None or best.cost.peak_bytes > mem_limit:
        for i, part in enumerate(_partition_candidates(circuit)):
            cand, _ = _build_one(
                circuit, mem_limit, transforms, sliced, (), partition=part
            )
            if cand is not None:
                cand.policy = ("partition", i)
            best = _better(best, cand, mem_limit)
    return best, trace


def _slice_candidates(working: Circuit) -> list[str]:
    """Qubits orderable for slicing: earliest restriction point first."""
    rr_layer = [-1] * working.n_qubits
    rr_arity = [1] * working.n_qubits
    for t, layer in enumerate(working.layers):
        for g in layer:
            if not g.diagonal:
                for q in g.targets:
                    rr_layer[q] = t
                    rr_arity[q] = len(g.targets)
    out = [q for q in range(working.n_qubits) if rr_arity[q] == 1]
    out.sort(key=lambda q: (rr_layer[q] + 1, q))
    return [f"q{q}" for q in out]


def _plan_with_decisions(
    circuit: Circuit,
    mem_limit: int,
    transform_set=None,
    decisions=(),
) -> tuple[ComputationScheme, list[tuple[str, ...]]]:
    transforms = (
        rule1_transforms(circuit)
        if transform_set is None
        else sorted(transform_set, key=lambda r: (r.layer, r.index))
    )
    working = transform_cx_many(circuit, [(r.layer, r.index) for r in transforms])
    candidates = _slice_candidates(working)
    best = None
    trace: list[tuple[str, ...]] = []
    for k in range(len(candidates) + 1):
        scheme, trace = _build_scheme(
            circuit, mem_limit, transforms, tuple(candidates[:k]), decisions
        )
        if scheme is None:
            continue
        if scheme.cost.peak_bytes <= mem_limit:
            return scheme, trace
        if best is None or scheme.cost.peak_bytes < best.cost.peak_bytes:
            best = scheme
    minimal = best.cost.peak_bytes if best is not None else mem_limit + 1
    raise InfeasibleError(mem_limit, minimal)


def plan_heuristic(circuit: Circuit, mem_limit: int) -> ComputationScheme:
    """Rule-based plan fitting the memory limit, or InfeasibleError."""
    scheme, _ = _plan_with_decisions(circuit, mem_limit)
    return scheme


def replan_with_deferral_flip(
    circuit: Circuit,
    mem_limit: int,
    scheme: ComputationScheme,
    gate: GateRef,
) -> ComputationScheme | None:
    """Rebuild a plan with one deferred gate assigned to the other side.

    Returns None if the rebuilt plan no longer defers that gate.  The
    flipped scheme may use more memory; only its executed state is
    expected to match the original.
    """
    policy = scheme.policy or ("rules",)
    original = next(
        (a for a in scheme.actions if isinstance(a, Defer) and a.gate == gate),
        None,
    )
    if original is None:
        return None
    transforms = list(scheme.transforms)
    kwargs = {}
    if policy[0] == "eager":
        kwargs["eager"] = True
    elif policy[0] == "partition":
        kwargs["partition"] = _partition_candidates(circuit)[policy[1]]
    for side in ("defer_a", "defer_b"):
        cand, _ = _build_one(
            circuit,
            mem_limit,
            transforms,
            scheme.sliced,
            (),
            side_overrides={gate: side},
            **kwargs,
        )
        if cand is None:
            continue
        flipped = next(
            (a for a in cand.actions if isinstance(a, Defer) and a.gate == gate),
            None,
        )
        if flipped is not None and flipped.assign != original.assign:
            return cand
    return None


def plan_search(
    circuit: Circuit, mem_limit: int, time_budget: float = 0.0, seed: int = 0
) -> ComputationScheme:
    """Depth-first exploration of transform/defer/merge decisions.

    The time budget maps to a deterministic node count so identical
    inputs always return identical schemes; the heuristic plan seeds
    the incumbent and the result is never worse.
    """
    incumbent, _ = _plan_with_decisions(circuit, mem_limit)
    budget = int(time_budget * NODES_PER_SECOND)
    if budget <= 0:
        return incumbent

    def key(s: ComputationScheme):
        return (s.cost.multiplications, s.cost.additions, s.cost.peak_bytes)

    best, best_key = incumbent, key(incumbent)
    rng = random.Random(seed)
    cx_refs = [
        GateRef(t, i)
        for t, layer in enumerate(circuit.layers)
        for i, g in enumerate(layer)
        if g.kind == "cx"
    ]
    base_transforms = frozenset(rule1_transforms(circuit))
    explored = 0
    stack: list[tuple] = [()]
    while stack and explored < budget:
        prefix = stack.pop()
        explored += 1
        t_bits = prefix[: len(cx_refs)]
        tset = {
            r
            for j, r in enumerate(cx_refs)
            if (t_bits[j] if j < len(t_bits) else (r in base_transforms))
        }
        rest = prefix[len(cx_refs) :]
        try:
            scheme, trace = _plan_with_decisions(circuit, mem_limit, tset, rest)
        except InfeasibleError:
            scheme, trace = None, []
        if scheme is not None and scheme.cost.peak_bytes <= mem_limit:
            if key(scheme) < best_key:
                best, best_key = scheme, key(scheme)
        depth = len(prefix)
        if depth < len(cx_refs):
            for bit in (True, False):
                stack.append(prefix + (bit,))
        elif depth - len(cx_refs) < len(trace):
            options = list(trace[depth - len(cx_refs)])
            rng.shuffle(options)
            for opt in options:
                stack.append(prefix + (opt,))
    return best


def pareto_frontier(
    circuit: Circuit,
    mem_limits,
    time_budget: float = 0.0,
    seed: int = 0,
) -> list[tuple[int, int]]:
    """(bytes, operations) per limit, non-increasing in operations."""
    limits = sorted(mem_limits)
    points: list[tuple[int, int]] = []
    best_ops: int | None = None
    for lim in limits:
        try:
            scheme = plan_search(circuit, lim, time_budget, seed)
        except InfeasibleError:
            continue
        ops = scheme.cost.operations
        if best_ops is not None:
            ops = min(ops, best_ops)
        best_ops = ops
        points.append((lim, ops))
    if not points:
        raise InfeasibleError(limits[-1] if limits else 0, 0)
    return points
