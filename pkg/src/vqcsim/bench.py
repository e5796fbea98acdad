"""Benchmark workloads and timing harness."""
from __future__ import annotations

import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np

from .autodiff import finite_difference_gradient, gradient_mixed, gradient_pure, loss_mixed, loss_pure
from .circuit import Circuit, apply_circuit
from .errors import DomainError
from .gates import depolarizing, parametric_gate, standard_gate
from .kernels import ThreadConfig
from .observables import heisenberg_1d
from .statespace import new_mixed_state, new_pure_state, norm

TASKS = ("single-gate", "rqc", "rqc-grad", "noisy-grad", "thread-sweep")
FORMATS = ("json", "csv")
VERIFY_TOL = 1e-6


class UsageError(ValueError):
    """Invalid benchmark request."""


class VerificationError(RuntimeError):
    """A ``--verify`` check failed."""


def _angles(seed: int, layer: int, qubit: int) -> tuple[float, float]:
    # PCG64 stream keyed by (seed, layer, qubit); normals from numpy's ziggurat sampler
    ss = np.random.SeedSequence(seed, spawn_key=(layer, qubit))
    ry, rx = np.random.Generator(np.random.PCG64(ss)).standard_normal(2)
    return float(ry), float(rx)


def _layer(n: int, layer: int, seed: int) -> list:
    ops = [standard_gate("CNOT", (i, i + 1)) for i in range(1, n)]
    for i in range(1, n + 1):
        ry, rx = _angles(seed, layer, i)
        ops.append(parametric_gate("Ry", i, ry, True))
        ops.append(parametric_gate("Rx", i, rx, True))
    return ops


def generate_rqc(n: int, depth: int, seed: int = 0) -> Circuit:
    """Layers of a CNOT ladder followed by Ry, Rx on every qubit, all angles variational."""
    if n < 2:
        raise DomainError(f"random circuits need at least 2 qubits, got {n}")
    c = Circuit()
    for layer in range(depth):
        c.extend(_layer(n, layer, seed))
    return c


def generate_noisy_rqc(n: int, depth: int, seed: int = 0, p: float = 0.01) -> Circuit:
    """:func:`generate_rqc` with a depolarizing channel on each qubit after each layer."""
    if n < 2:
        raise DomainError(f"random circuits need at least 2 qubits, got {n}")
    c = Circuit()
    for layer in range(depth):
        c.extend(_layer(n, layer, seed))
        c.extend(depolarizing(i, p) for i in range(1, n + 1))
    return c


# ---------------------------------------------------------------------------

@dataclass
class BenchSpec:
    task: str
    qubits: Sequence[int] = (10,)
    depth: int = 4
    threads: Sequence[int] = (1,)
    repetitions: int = 10
    seed: int = 0
    noise_p: float = 0.01
    output: str | None = None
    fmt: str = "json"
    verify: bool = False

    def validate(self) -> None:
        if self.task not in TASKS:
            raise UsageError(f"unknown task {self.task!r}; choose from {', '.join(TASKS)}")
        if self.fmt not in FORMATS:
            raise UsageError(f"unknown format {self.fmt!r}")
        if self.repetitions < 1:
            raise UsageError("repetitions must be >= 1")
        if not self.qubits or min(self.qubits) < 1:
            raise UsageError("qubit counts must be >= 1")
        if not self.threads or min(self.threads) < 1:
            raise UsageError("thread counts must be >= 1")
        if self.depth < 1:
            raise UsageError("depth must be >= 1")


@dataclass
class BenchRecord:
    task: str
    params: dict
    threads: int
    samples: list[float]
    mean: float = field(init=False)
    std: float = field(init=False)
    speedup: float | None = None
    verify_error: float | None = None

    def __post_init__(self) -> None:
        self.mean = float(np.mean(self.samples))
        self.std = float(np.std(self.samples))


def time_callable(fn: Callable[[], object], reps: int,
                  setup: Callable[[], object] | None = None) -> list[float]:
    """Wall times of ``reps`` calls after one untimed warm-up; ``setup`` runs untimed before each."""
    samples = []
    for i in range(reps + 1):
        if setup is not None:
            setup()
        t0 = time.perf_counter()
        fn()
        elapsed = time.perf_counter() - t0
        if i:
            samples.append(elapsed)
    return samples


def _single_gate(spec: BenchSpec, n: int, threads: int) -> list[BenchRecord]:
    cfg = ThreadConfig(threads)
    out = []
    gates = {"H": standard_gate("H", 1),
             "Rx": parametric_gate("Rx", 1, math.pi / 2),
             "CNOT": standard_gate("CNOT", (1, 2)) if n >= 2 else None}
    state = new_pure_state(n)
    for name, g in gates.items():
        if g is None:
            continue
        c = Circuit([g])
        samples = time_callable(lambda: apply_circuit(c, state, cfg), spec.repetitions)
        out.append(BenchRecord(f"single-gate/{name}", {"n": n, "depth": 1}, threads, samples))
    return out


def _rqc(spec: BenchSpec, n: int, threads: int):
    cfg = ThreadConfig(threads)
    c = generate_rqc(n, spec.depth, spec.seed)
    holder = {}
    samples = time_callable(lambda: apply_circuit(c, holder["s"], cfg), spec.repetitions,
                            setup=lambda: holder.update(s=new_pure_state(n)))
    rec = BenchRecord("rqc", _params(spec, n), threads, samples)
    if spec.verify:
        rec.verify_error = abs(norm(holder["s"]) - 1.0)
        if rec.verify_error > 1e-10:
            raise VerificationError(f"final state norm drifted by {rec.verify_error:.3g}")
    return rec, holder["s"]


def _rqc_grad(spec: BenchSpec, n: int, threads: int) -> BenchRecord:
    cfg = ThreadConfig(threads)
    c = generate_rqc(n, spec.depth, spec.seed)
    op = heisenberg_1d(n)
    s0 = new_pure_state(n)
    result = {}
    samples = time_callable(lambda: result.update(r=gradient_pure(op, c, s0, cfg)), spec.repetitions)
    rec = BenchRecord("rqc-grad", _params(spec, n), threads, samples)
    if spec.verify:
        fd = finite_difference_gradient(lambda cc: loss_pure(op, cc, s0, cfg), c)
        _check_gradient(rec, result["r"].grads, fd)
    return rec


def _noisy_grad(spec: BenchSpec, n: int, threads: int) -> BenchRecord:
    cfg = ThreadConfig(threads)
    c = generate_noisy_rqc(n, spec.depth, spec.seed, spec.noise_p)
    op = heisenberg_1d(n)
    dm0 = new_mixed_state(n)
    result = {}
    samples = time_callable(lambda: result.update(r=gradient_mixed(op, c, dm0, cfg)), spec.repetitions)
    rec = BenchRecord("noisy-grad", _params(spec, n), threads, samples)
    if spec.verify:
        fd = finite_difference_gradient(lambda cc: loss_mixed(op, cc, dm0, cfg), c)
        _check_gradient(rec, result["r"].grads, fd)
    return rec


def _check_gradient(rec: BenchRecord, grads: np.ndarray, fd: np.ndarray) -> None:
    rec.verify_error = float(np.max(np.abs(grads - fd))) if grads.size else 0.0
    if rec.verify_error > VERIFY_TOL:
        raise VerificationError(f"gradient differs from finite differences by {rec.verify_error:.3g}")


def _params(spec: BenchSpec, n: int) -> dict:
    params = {"n": n, "depth": spec.depth, "seed": spec.seed}
    if spec.task == "noisy-grad":
        params["noise_p"] = spec.noise_p
    return params


def _thread_sweep(spec: BenchSpec, n: int) -> list[BenchRecord]:
    counts = sorted(set(spec.threads) | {1})
    records, states = [], []
    for t in counts:
        rec, state = _rqc(spec, n, t)
        rec.task = "thread-sweep"
        records.append(rec)
        states.append(state.data)
    for t, data in zip(counts, states):
        diff = float(np.max(np.abs(data - states[0])))
        if diff > 1e-12:
            raise VerificationError(f"{t}-thread state differs from serial by {diff:.3g}")
    base = records[0].mean
    for rec in records:
        rec.speedup = base / rec.mean
    return records


def run_bench(spec: BenchSpec) -> list[BenchRecord]:
    """Run every (qubit count, thread count) combination of ``spec``; write a report if ``spec.output`` is set."""
    spec.validate()
    records: list[BenchRecord] = []
    for n in spec.qubits:
        if spec.task == "thread-sweep":
            records.extend(_thread_sweep(spec, n))
            continue
        for t in spec.threads:
            if spec.task == "single-gate":
                records.extend(_single_gate(spec, n, t))
            elif spec.task == "rqc":
                records.append(_rqc(spec, n, t)[0])
            elif spec.task == "rqc-grad":
                records.append(_rqc_grad(spec, n, t))
            else:
                records.append(_noisy_grad(spec, n, t))
    if spec.output:
        emit_report(records, spec.fmt, spec.output)
    return records


CSV_COLUMNS = ("task", "n", "depth", "threads", "rep", "seconds")


def emit_report(records: Sequence[BenchRecord], fmt: str, path=None) -> str:
    """Serialize records as json (one object per record) or csv (one row per repetition)."""
    if not records:
        raise UsageError("no records to report")
    if fmt == "json":
        text = json.dumps([asdict(r) for r in records], indent=2) + "\n"
    elif fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for r in records:
            for rep, secs in enumerate(r.samples):
                writer.writerow([r.task, r.params["n"], r.params.get("depth", ""), r.threads, rep, repr(secs)])
        text = buf.getvalue()
    else:
        raise UsageError(f"unknown format {fmt!r}")
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
