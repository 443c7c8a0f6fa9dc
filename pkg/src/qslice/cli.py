"""Command-line surface: generate, plan, run, amplitude, analyze, pareto.

Exit codes: 0 success, 1 internal or validation failure, 2 infeasible
resources, 64 usage error.  All randomness flows from explicit --seed
flags; QSLICE_LOG controls logging verbosity.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import struct
import sys
import time

import numpy as np

from . import __version__
from .circuit import CircuitError
from .engine import SchemeError, replay
from .executor import (
    SliceSelector,
    amplitude,
    iter_slices,
    run_full,
    run_slice,
)
from .generator import generate_random_circuit
from .planner import InfeasibleError, pareto_frontier, plan_heuristic, plan_search
from .qasm import ParseError, parse_circuit, serialize_circuit
from .scheme import ComputationScheme, digest
from .stats import (
    DEFAULT_BINS,
    DistributionParams,
    build_histogram,
    default_range,
    estimate_fidelity,
    goodness_of_fit,
    histogram_csv_rows,
    log_transform,
)
from .tensor import FlopCounter

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INFEASIBLE = 2
EXIT_USAGE = 64

log = logging.getLogger("qslice")


class UsageError(ValueError):
    pass


def _setup_logging():
    level = os.environ.get("QSLICE_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
    )


def _read(path: str) -> str:
    with open(path) as fh:
        return fh.read()


def _write_atomic(path: str, content: str):
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w") as fh:
        fh.write(content)
    os.replace(tmp, path)


def _load_circuit(path: str):
    text = _read(path)
    return parse_circuit(text), digest(text)


def _load_scheme(path: str):
    text = _read(path)
    return ComputationScheme.loads(text), digest(text)


def _manifest(path: str, payload: dict):
    payload = dict(payload, tool_version=__version__)
    _write_atomic(path, json.dumps(payload, indent=1) + "\n")


def _bitstring_rows(n_qubits: int, fixed: dict[str, int], count: int):
    fixed_bits = {int(l[1:]): b for l, b in fixed.items()}
    free = [q for q in range(n_qubits) if q not in fixed_bits]
    for i in range(count):
        bits = [
            str(fixed_bits[q]) if q in fixed_bits else str((i >> free.index(q)) & 1)
            for q in range(n_qubits)
        ]
        yield "".join(bits)


def cmd_generate(args) -> int:
    if args.depth < 1:
        raise UsageError("depth must be at least 1")
    if args.rows < 1 or args.cols < 1:
        raise UsageError("grid dimensions must be at least 1")
    circuit = generate_random_circuit(args.rows, args.cols, args.depth, args.seed)
    _write_atomic(args.output, serialize_circuit(circuit))
    log.info("wrote %s gates to %s", circuit.gate_count, args.output)
    return EXIT_OK


def cmd_plan(args) -> int:
    circuit, circuit_digest = _load_circuit(args.circuit)
    limit = args.mem_limit if args.mem_limit is not None else 16 << (circuit.n_qubits + 2)
    try:
        if args.time_budget > 0:
            scheme = plan_search(circuit, limit, args.time_budget, args.seed)
        else:
            scheme = plan_heuristic(circuit, limit)
    except InfeasibleError as err:
        print(
            f"infeasible memory limit {err.limit}; minimal feasible is "
            f"{err.minimal} bytes",
            file=sys.stderr,
        )
        return EXIT_INFEASIBLE
    doc = scheme.to_json()
    doc["circuit_digest"] = circuit_digest
    _write_atomic(args.output, json.dumps(doc, indent=1) + "\n")
    print(
        f"planned {scheme.slice_count} slice(s), peak {scheme.cost.peak_bytes} "
        f"bytes, {scheme.cost.operations} operations"
    )
    return EXIT_OK


def _format_amplitudes(vector, rows, as_binary: bool):
    if as_binary:
        out = bytearray()
        for amp in vector:
            out += struct.pack("<dd", amp.real, amp.imag)
        return bytes(out)
    lines = ["bitstring,re,im"]
    for bits, amp in zip(rows, vector):
        lines.append(f"{bits},{amp.real:.17g},{amp.imag:.17g}")
    return "\n".join(lines) + "\n"


def cmd_run(args) -> int:
    circuit, circuit_digest = _load_circuit(args.circuit)
    scheme, scheme_digest = _load_scheme(args.scheme)
    counter = FlopCounter()
    started = time.monotonic()
    binary = args.format == "bin"
    est = replay(circuit, scheme, with_data=False, collect=False)
    if args.slice == "all":
        outputs = []
        if scheme.sliced:
            chunks = []
            rows_all = []
            for piece in iter_slices(circuit, scheme, jobs=args.jobs):
                vec = piece.vector()
                chunks.append(vec)
                rows_all.extend(
                    _bitstring_rows(circuit.n_qubits, piece.fixed_bits, len(vec))
                )
            vector = np.concatenate(chunks)
            rows = rows_all
            counter.add(est.counter.multiplications, est.counter.additions)
        else:
            vector = run_full(circuit, scheme, counter, jobs=args.jobs)
            rows = list(_bitstring_rows(circuit.n_qubits, {}, len(vector)))
        payload = _format_amplitudes(vector, rows, binary)
        mode = "wb" if binary else "w"
        with open(args.output, mode) as fh:
            fh.write(payload)
        outputs.append(args.output)
        selector_desc = "all"
    else:
        selector = SliceSelector.from_bits(scheme, args.slice)
        piece = run_slice(circuit, scheme, selector, counter)
        vec = piece.vector()
        rows = list(_bitstring_rows(circuit.n_qubits, piece.fixed_bits, len(vec)))
        payload = _format_amplitudes(vec, rows, binary)
        with open(args.output, "wb" if binary else "w") as fh:
            fh.write(payload)
        outputs = [args.output]
        selector_desc = args.slice
    _manifest(
        args.output + ".manifest.json",
        {
            "circuit_digest": circuit_digest,
            "scheme_digest": scheme_digest,
            "selector": selector_desc,
            "outputs": outputs,
            "multiplications": counter.multiplications,
            "additions": counter.additions,
            "peak_logical_bytes": est.peak_bytes,
            "max_live_tensor_bytes": est.max_tensor_bytes,
            "wall_time_s": time.monotonic() - started,
            "jobs": args.jobs,
        },
    )
    return EXIT_OK


def cmd_amplitude(args) -> int:
    circuit, _ = _load_circuit(args.circuit)
    scheme, _ = _load_scheme(args.scheme)
    value = amplitude(circuit, scheme, args.bits)
    print(f"{value.real:.17g},{value.imag:.17g}")
    return EXIT_OK


def _read_amplitude_csv(path: str) -> np.ndarray:
    probs = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "bitstring,re,im":
            raise UsageError(f"{path} is not an amplitude CSV")
        for line in fh:
            _, re_s, im_s = line.rstrip("\n").split(",")
            probs.append(float(re_s) ** 2 + float(im_s) ** 2)
    return np.asarray(probs)


def cmd_analyze(args) -> int:
    if args.bins < 1:
        raise UsageError("bins must be at least 1")
    if not 0 < args.alpha <= 1:
        raise UsageError("alpha must lie in (0, 1]")
    probs = _read_amplitude_csv(args.amplitudes)
    n = len(probs)
    if n < 2:
        raise UsageError("need at least two amplitudes")
    params = DistributionParams(n, args.alpha)
    z, zeros = log_transform(probs, n)
    hist = build_histogram(z, args.bins, default_range(n))
    hist.excluded_zeros = zeros
    report = goodness_of_fit(hist, params)
    estimate = estimate_fidelity(z, n) if z.size else None
    lines = ["bin_left,bin_right,count,theoretical_density"]
    lines.extend(histogram_csv_rows(hist, params))
    _write_atomic(args.output, "\n".join(lines) + "\n")
    doc = report.to_json()
    if estimate is not None:
        doc["alpha_estimate"] = estimate.alpha
        doc["alpha_degenerate"] = estimate.degenerate
    _write_atomic(args.output + ".fit.json", json.dumps(doc, indent=1) + "\n")
    print(f"tv_distance={report.tv_distance:.6f} chi_square={report.chi_square:.3f}")
    if args.strict and report.tv_distance > args.tv_threshold:
        print(
            f"tv distance {report.tv_distance:.4f} exceeds {args.tv_threshold}",
            file=sys.stderr,
        )
        return EXIT_FAILURE
    return EXIT_OK


def cmd_pareto(args) -> int:
    circuit, _ = _load_circuit(args.circuit)
    limits = sorted(args.mem_limits)
    try:
        points = pareto_frontier(circuit, limits, args.time_budget, args.seed)
    except InfeasibleError:
        print("all memory limits are infeasible", file=sys.stderr)
        return EXIT_INFEASIBLE
    lines = ["mem_limit_bytes,operations"]
    lines.extend(f"{b},{ops}" for b, ops in points)
    _write_atomic(args.output, "\n".join(lines) + "\n")
    print(f"{len(points)} frontier point(s) written to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qslice",
        description="Exact amplitudes of layered quantum circuits, in slices.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("generate", help="write a seeded random benchmark circuit")
    gen.add_argument("--rows", type=int, required=True)
    gen.add_argument("--cols", type=int, required=True)
    gen.add_argument("--depth", type=int, required=True)
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("-o", "--output", required=True)
    gen.set_defaults(func=cmd_generate)

    plan = sub.add_parser("plan", help="plan a computation scheme for a circuit")
    plan.add_argument("circuit")
    plan.add_argument("--mem-limit", type=int, default=None, help="bytes")
    plan.add_argument("--time-budget", type=float, default=0.0, help="seconds")
    plan.add_argument("--seed", type=int, default=0)
    plan.add_argument("-o", "--output", required=True)
    plan.set_defaults(func=cmd_plan)

    run = sub.add_parser("run", help="execute a scheme and write amplitudes")
    run.add_argument("circuit")
    run.add_argument("scheme")
    run.add_argument("--slice", default="all", help="'all' or a bit pattern")
    run.add_argument("--format", choices=("csv", "bin"), default="csv")
    run.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    run.add_argument("-o", "--output", required=True)
    run.set_defaults(func=cmd_run)

    amp = sub.add_parser("amplitude", help="print one amplitude as re,im")
    amp.add_argument("circuit")
    amp.add_argument("scheme")
    amp.add_argument("bits")
    amp.set_defaults(func=cmd_amplitude)

    ana = sub.add_parser("analyze", help="histogram and fit of log probabilities")
    ana.add_argument("amplitudes", help="amplitude CSV from 'run'")
    ana.add_argument("--alpha", type=float, default=1.0)
    ana.add_argument("--bins", type=int, default=DEFAULT_BINS)
    ana.add_argument("--strict", action="store_true")
    ana.add_argument("--tv-threshold", type=float, default=0.02)
    ana.add_argument("-o", "--output", required=True)
    ana.set_defaults(func=cmd_analyze)

    par = sub.add_parser("pareto", help="memory/operations frontier CSV")
    par.add_argument("circuit")
    par.add_argument("--mem-limits", type=int, nargs="+", required=True)
    par.add_argument("--time-budget", type=float, default=0.0)
    par.add_argument("--seed", type=int, default=0)
    par.add_argument("-o", "--output", required=True)
    par.set_defaults(func=cmd_pareto)
    return parser


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems; remap to the documented code
        if exc.code not in (0, None):
            return EXIT_USAGE
        return 0
    try:
        return args.func(args)
    except UsageError as err:
        print(f"usage error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, ValueError, CircuitError, SchemeError) as err:
        if isinstance(err, InfeasibleError):
            print(str(err), file=sys.stderr)
            return EXIT_INFEASIBLE
        if isinstance(err, (ParseError,)):
            print(f"parse error: {err}", file=sys.stderr)
            return EXIT_FAILURE
        usage_like = isinstance(err, ValueError) and not isinstance(
            err, (CircuitError, SchemeError)
        )
        print(f"error: {err}", file=sys.stderr)
        return EXIT_USAGE if usage_like else EXIT_FAILURE
    except OSError as err:
        print(f"io error: {err}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
