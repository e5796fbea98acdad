"""Gate and channel application kernels.

Two paths apply a gate to a flat state array:

* :func:`apply_gate_naive` contracts the gate tensor against the reshaped
  state with ``numpy.tensordot``. It is slow and serves as the oracle.
* :func:`apply_gate_fast` walks the state in batches. Each batch gathers the
  ``2**m`` coupled rows for 8 neighbouring column indices, multiplies the
  ``2**m x 2**m`` gate into that ``2**m x 8`` block and scatters it back. When
  every target qubit sits at or above :data:`AGGREGATION_THRESHOLD` the 8
  columns are contiguous in memory; otherwise they are taken from the lowest
  free bits, which keeps each block inside a short window of the array.
  Batches are split into disjoint segments that numba runs in parallel.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache

import numba
import numpy as np
from numba import njit, prange

from .errors import QubitIndexError
from .gates import ChannelOp, GateOp, Superoperator, matrix_structure, channel_superoperator
from .statespace import MixedState, PureState

THREADS_ENV = "VQCSIM_NUM_THREADS"
AGGREGATION_THRESHOLD = 5
BATCH_WIDTH = 8
MIN_SEGMENT = 1 << 12


def _default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


@dataclass(frozen=True)
class ThreadConfig:
    """How many workers a kernel may use.

    ``num_threads`` defaults to ``$VQCSIM_NUM_THREADS`` or the CPU count.
    States smaller than ``min_work_per_thread`` amplitudes run serially.
    """

    num_threads: int = field(default_factory=_default_threads)
    min_work_per_thread: int = 1 << 14

    def __post_init__(self) -> None:
        if self.num_threads < 1:
            raise ValueError("num_threads must be >= 1")


SERIAL = ThreadConfig(num_threads=1)


@dataclass(frozen=True)
class ApplyPlan:
    """Loop geometry for one gate on one state size."""

    num_qubits: int
    targets: tuple[int, ...]      # zero-based bit positions, in gate order
    strides: tuple[int, ...]      # 2**bit per target
    case: str                     # 'both-low', 'mixed' or 'both-high'
    batch_width: int
    row_offsets: np.ndarray
    col_offsets: np.ndarray
    holes: np.ndarray             # sorted bit positions fixed inside a batch
    num_batches: int
    segments: np.ndarray          # batch boundaries, len == num_segments + 1
    contiguous: bool
    run: int = 1                  # adjacent batches forming one contiguous stretch

    @property
    def num_segments(self) -> int:
        return len(self.segments) - 1

    def segment_slots(self, s: int) -> np.ndarray:
        """Flat amplitude indices touched by segment ``s`` (for checks, not speed)."""
        out = []
        for b in range(self.segments[s], self.segments[s + 1]):
            base = _deposit(b, self.holes)
            out.append((base + self.row_offsets[:, None] + self.col_offsets[None, :]).ravel())
        return np.concatenate(out) if out else np.empty(0, dtype=np.int64)


def _deposit(b: int, holes) -> int:
    for h in holes:
        b = ((b >> h) << (h + 1)) | (b & ((1 << h) - 1))
    return b


def _classify(targets, threshold: int) -> str:
    low = [t + 1 < threshold for t in targets]
    if all(low):
        return "both-low"
    if not any(low):
        return "both-high"
    return "mixed"


@lru_cache(maxsize=4096)
def _plan(positions: tuple[int, ...], n: int, num_threads: int, min_work: int,
          threshold: int) -> ApplyPlan:
    targets = tuple(p - 1 for p in positions)
    m = len(targets)
    free = [b for b in range(n) if b not in targets]
    col_bits = free[:min(3, len(free))]
    width = 1 << len(col_bits)
    row_offsets = np.array([sum(((r >> k) & 1) << t for k, t in enumerate(targets))
                            for r in range(1 << m)], dtype=np.int64)
    col_offsets = np.array([sum(((c >> k) & 1) << t for k, t in enumerate(col_bits))
                            for c in range(width)], dtype=np.int64)
    holes = np.array(sorted(targets + tuple(col_bits)), dtype=np.int64)
    num_batches = 1 << (n - m - len(col_bits))
    total = 1 << n
    if total < min_work or num_threads == 1:
        nseg = 1
    else:
        grain = max(width << m, MIN_SEGMENT)
        nseg = max(1, min(num_threads, total // grain, num_batches))
    contiguous = width == BATCH_WIDTH and col_bits == [0, 1, 2]
    run = 1
    if contiguous:
        # batches below the lowest target are adjacent; keep one run per segment at least
        run = 1 << (min(targets) - 3)
        while run > 1 and num_batches // run < nseg:
            run >>= 1
    num_runs = num_batches // run
    segments = np.array([(num_runs * s) // nseg * run for s in range(nseg + 1)], dtype=np.int64)
    case = _classify(targets, threshold)
    return ApplyPlan(n, targets, tuple(1 << t for t in targets), case, width,
                     row_offsets, col_offsets, holes, num_batches, segments, contiguous, run)


def plan_apply(positions, n: int, cfg: ThreadConfig | None = None,
               threshold: int = AGGREGATION_THRESHOLD) -> ApplyPlan:
    """Deterministic batch/segment decomposition for an operation on ``positions``."""
    cfg = cfg or ThreadConfig()
    pos = tuple(int(p) for p in positions)
    _check_range(pos, n)
    return _plan(pos, n, cfg.num_threads, cfg.min_work_per_thread, threshold)


def _check_range(positions, n: int) -> None:
    for p in positions:
        if not 1 <= p <= n:
            raise QubitIndexError(f"qubit {p} outside a {n}-qubit state")


# ---------------------------------------------------------------------------
# numba kernels, each compiled serial and parallel over segments.
#
# Batch ``b`` starts at ``deposit(b, holes)``. Gathered kernels address column c
# of a batch through ``col_offs[c]``. Contiguous kernels (every target at bit 3
# or above) walk ``run`` adjacent batches at once, i.e. ``8 * run`` consecutive
# amplitudes per row, which the compiler can vectorize.

CHUNK = 64


@njit(cache=True, inline="always")
def _base(b, holes):
    for h in holes:
        b = ((b >> h) << (h + 1)) | (b & ((1 << h) - 1))
    return b


def _dense1_impl(state, mat, stride, col_offs, holes, segments):
    m00, m01, m10, m11 = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    w = col_offs.shape[0]
    for s in prange(segments.shape[0] - 1):
        for b in range(segments[s], segments[s + 1]):
            base = _base(b, holes)
            for c in range(w):
                i0 = base + col_offs[c]
                i1 = i0 + stride
                a0 = state[i0]
                a1 = state[i1]
                state[i0] = m00 * a0 + m01 * a1
                state[i1] = m10 * a0 + m11 * a1


def _dense1_run_impl(state, mat, stride, run, holes, segments):
    m00, m01, m10, m11 = mat[0, 0], mat[0, 1], mat[1, 0], mat[1, 1]
    span = 8 * run
    for s in prange(segments.shape[0] - 1):
        for b in range(segments[s], segments[s + 1], run):
            base = _base(b, holes)
            for i0 in range(base, base + span):
                a0 = state[i0]
                a1 = state[i0 + stride]
                state[i0] = m00 * a0 + m01 * a1
                state[i0 + stride] = m10 * a0 + m11 * a1


def _dense2_impl(state, m, s1, s2, col_offs, holes, segments):
    # 4x4 gate times the 4x8 block of a batch, one column at a time
    w = col_offs.shape[0]
    for s in prange(segments.shape[0] - 1):
        for b in range(segments[s], segments[s + 1]):
            base = _base(b, holes)
            for c in range(w):
                i0 = base + col_offs[c]
                a0 = state[i0]
                a1 = state[i0 + s1]
                a2 = state[i0 + s2]
                a3 = state[i0 + s1 + s2]
                state[i0] = m[0, 0] * a0 + m[0, 1] * a1 + m[0, 2] * a2 + m[0, 3] * a3
                state[i0 + s1] = m[1, 0] * a0 + m[1, 1] * a1 + m[1, 2] * a2 + m[1, 3] * a3
                state[i0 + s2] = m[2, 0] * a0 + m[2, 1] * a1 + m[2, 2] * a2 + m[2, 3] * a3
                state[i0 + s1 + s2] = m[3, 0] * a0 + m[3, 1] * a1 + m[3, 2] * a2 + m[3, 3] * a3


def _dense2_run_impl(state, m, s1, s2, run, holes, segments):
    m00, m01, m02, m03 = m[0, 0], m[0, 1], m[0, 2], m[0, 3]
    m10, m11, m12, m13 = m[1, 0], m[1, 1], m[1, 2], m[1, 3]
    m20, m21, m22, m23 = m[2, 0], m[2, 1], m[2, 2], m[2, 3]
    m30, m31, m32, m33 = m[3, 0], m[3, 1], m[3, 2], m[3, 3]
    span = 8 * run
    s3 = s1 + s2
    for s in prange(segments.shape[0] - 1):
        for b in range(segments[s], segments[s + 1], run):
            base = _base(b, holes)
            for i0 in range(base, base + span):
                a0 = state[i0]
                a1 = state[i0 + s1]
                a2 = state[i0 + s2]
                a3 = state[i0 + s3]
                state[i0] = m00 * a0 + m01 * a1 + m02 * a2 + m03 * a3
                state[i0 + s1] = m10 * a0 + m11 * a1 + m12 * a2 + m13 * a3
                state[i0 + s2] = m20 * a0 + m21 * a1 + m22 * a2 + m23 * a3
                state[i0 + s3] = m30 * a0 + m31 * a1 + m32 * a2 + m33 * a3


def _dense_impl(state, mat, row_offs, col_offs, run, span, holes, segments):
    # gathered when col_offs has 8 entries, chunks of a contiguous run otherwise
    d = row_offs.shape[0]
    w = col_offs.shape[0]
    for s in prange(segments.shape[0] - 1):
        buf = np.empty((d, w), dtype=state.dtype)
        for b in range(segments[s], segments[s + 1], run):
            for k0 in range(0, span, w):
                base = _base(b, holes) + k0
                for r in range(d):
                    ro = base + row_offs[r]
                    for c in range(w):
                        buf[r, c] = state[ro + col_offs[c]]
                for r in range(d):
                    ro = base + row_offs[r]
                    for c in range(w):
                        acc = mat[r, 0] * buf[0, c]
                        for k in range(1, d):
                            acc += mat[r, k] * buf[k, c]
                        state[ro + col_offs[c]] = acc


def _diag_impl(state, diag, rows, row_offs, col_offs, run, span, holes, segments):
    # only ``rows`` (entries != 1) are touched
    w = col_offs.shape[0]
    for s in prange(segments.shape[0] - 1):
        for b in range(segments[s], segments[s + 1], run):
            for k0 in range(0, span, w):
                base = _base(b, holes) + k0
                for r in rows:
                    ro = base + row_offs[r]
                    f = diag[r]
                    for c in range(w):
                        state[ro + col_offs[c]] *= f


def _monomial_impl(state, dest, phase, rows, row_offs, col_offs, run, span, holes, segments):
    # column r of the gate has its single nonzero phase[r] in row dest[r];
    # rows left in place with phase 1 are not in ``rows`` and never touched
    w = col_offs.shape[0]
    for s in prange(segments.shape[0] - 1):
        buf = np.empty((rows.shape[0], w), dtype=state.dtype)
        for b in range(segments[s], segments[s + 1], run):
            for k0 in range(0, span, w):
                base = _base(b, holes) + k0
                for i in range(rows.shape[0]):
                    ro = base + row_offs[rows[i]]
                    for c in range(w):
                        buf[i, c] = state[ro + col_offs[c]]
                for i in range(rows.shape[0]):
                    ro = base + row_offs[dest[rows[i]]]
                    f = phase[rows[i]]
                    for c in range(w):
                        state[ro + col_offs[c]] = f * buf[i, c]


def _adjoint1_impl(phi, psi, a, q, mask, stride, col_offs, holes, segments, overlap):
    """phi <- a @ phi, psi <- q @ psi on one qubit, in one sweep.

    ``overlap[s, i, j]`` accumulates conj(psi_old[i]) * phi_old[j] where ``mask[i, j]``.
    """
    a00, a01, a10, a11 = a[0, 0], a[0, 1], a[1, 0], a[1, 1]
    q00, q01, q10, q11 = q[0, 0], q[0, 1], q[1, 0], q[1, 1]
    k00, k01, k10, k11 = mask[0, 0], mask[0, 1], mask[1, 0], mask[1, 1]
    w = col_offs.shape[0]
    for s in prange(segments.shape[0] - 1):
        r00 = r01 = r10 = r11 = 0j
        for b in range(segments[s], segments[s + 1]):
            base = _base(b, holes)
            for c in range(w):
                i0 = base + col_offs[c]
                i1 = i0 + stride
                p0 = phi[i0]
                p1 = phi[i1]
                v0 = psi[i0]
                v1 = psi[i1]
                if k00:
                    r00 += np.conj(v0) * p0
                if k01:
                    r01 += np.conj(v0) * p1
                if k10:
                    r10 += np.conj(v1) * p0
                if k11:
                    r11 += np.conj(v1) * p1
                phi[i0] = a00 * p0 + a01 * p1
                phi[i1] = a10 * p0 + a11 * p1
                psi[i0] = q00 * v0 + q01 * v1
                psi[i1] = q10 * v0 + q11 * v1
        overlap[s, 0, 0] = r00
        overlap[s, 0, 1] = r01
        overlap[s, 1, 0] = r10
        overlap[s, 1, 1] = r11


def _adjoint1_run_impl(phi, psi, a, q, mask, stride, run, holes, segments, overlap):
    a00, a01, a10, a11 = a[0, 0], a[0, 1], a[1, 0], a[1, 1]
    q00, q01, q10, q11 = q[0, 0], q[0, 1], q[1, 0], q[1, 1]
    diag = mask[0, 0] or mask[1, 1]
    off = mask[0, 1] or mask[1, 0]
    span = 8 * run
    for s in prange(segments.shape[0] - 1):
        r00 = r01 = r10 = r11 = 0j
        for b in range(segments[s], segments[s + 1], run):
            base = _base(b, holes)
            for i0 in range(base, base + span):
                i1 = i0 + stride
                p0 = phi[i0]
                p1 = phi[i1]
                v0 = psi[i0]
                v1 = psi[i1]
                if diag:
                    r00 += np.conj(v0) * p0
                    r11 += np.conj(v1) * p1
                if off:
                    r01 += np.conj(v0) * p1
                    r10 += np.conj(v1) * p0
                phi[i0] = a00 * p0 + a01 * p1
                phi[i1] = a10 * p0 + a11 * p1
                psi[i0] = q00 * v0 + q01 * v1
                psi[i1] = q10 * v0 + q11 * v1
        overlap[s, 0, 0] = r00
        overlap[s, 0, 1] = r01
        overlap[s, 1, 0] = r10
        overlap[s, 1, 1] = r11


def _adjoint_impl(phi, psi, a, q, mask, row_offs, col_offs, run, span, holes, segments, overlap):
    """Any-size version of :func:`_adjoint1_impl`, gathered or over contiguous runs."""
    d = row_offs.shape[0]
    w = col_offs.shape[0]
    for s in prange(segments.shape[0] - 1):
        pb = np.empty((d, w), dtype=phi.dtype)
        qb = np.empty((d, w), dtype=psi.dtype)
        acc = np.zeros((d, d), dtype=phi.dtype)
        for b in range(segments[s], segments[s + 1], run):
            for k0 in range(0, span, w):
                base = _base(b, holes) + k0
                for r in range(d):
                    ro = base + row_offs[r]
                    for c in range(w):
                        pb[r, c] = phi[ro + col_offs[c]]
                        qb[r, c] = psi[ro + col_offs[c]]
                for i in range(d):
                    for j in range(d):
                        if mask[i, j]:
                            t = 0j
                            for c in range(w):
                                t += np.conj(qb[i, c]) * pb[j, c]
                            acc[i, j] += t
                for r in range(d):
                    ro = base + row_offs[r]
                    for c in range(w):
                        x = a[r, 0] * pb[0, c]
                        y = q[r, 0] * qb[0, c]
                        for k in range(1, d):
                            x += a[r, k] * pb[k, c]
                            y += q[r, k] * qb[k, c]
                        phi[ro + col_offs[c]] = x
                        psi[ro + col_offs[c]] = y
        for i in range(d):
            for j in range(d):
                overlap[s, i, j] = acc[i, j]


def _compile(fn):
    return (njit(cache=True, nogil=True, fastmath=True)(fn),
            njit(cache=True, nogil=True, fastmath=True, parallel=True)(fn))


_dense1 = _compile(_dense1_impl)
_dense1_run = _compile(_dense1_run_impl)
_dense2 = _compile(_dense2_impl)
_dense2_run = _compile(_dense2_run_impl)
_dense = _compile(_dense_impl)
_diag = _compile(_diag_impl)
_monomial = _compile(_monomial_impl)
_adjoint1 = _compile(_adjoint1_impl)
_adjoint1_run = _compile(_adjoint1_run_impl)
_adjoint = _compile(_adjoint_impl)


def _pick(pair, plan: ApplyPlan):
    if plan.num_segments == 1:
        return pair[0]
    numba.set_num_threads(min(plan.num_segments, numba.config.NUMBA_NUM_THREADS))
    return pair[1]


_CHUNK_OFFSETS = np.arange(CHUNK, dtype=np.int64)


def _columns(plan: ApplyPlan) -> tuple[np.ndarray, int, int]:
    """Column offsets, batch step and amplitudes per step for the generic kernels."""
    if plan.contiguous:
        span = BATCH_WIDTH * plan.run
        return _CHUNK_OFFSETS[:min(CHUNK, span)], plan.run, span
    return plan.col_offsets, 1, len(plan.col_offsets)


# ---------------------------------------------------------------------------
# Array-level entry points (flat ``data`` holding ``n`` qubits)

@lru_cache(maxsize=4096)
def _monomial_tables(key: bytes, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Destination row, phase and the rows that actually change, per gate column."""
    mat = np.frombuffer(key, dtype=complex).reshape(d, d)
    dest = np.argmax(mat != 0, axis=0).astype(np.int64)
    phase = mat[dest, np.arange(d)]
    rows = np.flatnonzero((dest != np.arange(d)) | (phase != 1)).astype(np.int64)
    return dest, phase, rows


def apply_matrix(data: np.ndarray, n: int, positions, matrix: np.ndarray,
                 cfg: ThreadConfig | None = None, structure: str = "dense") -> None:
    """Apply ``matrix`` (internal convention) on ``positions`` of the flat array ``data`` in place."""
    plan = plan_apply(positions, n, cfg)
    mat = np.asarray(matrix, dtype=data.dtype)
    d = mat.shape[0]
    cols, run, span = _columns(plan)
    if structure == "diagonal":
        diag = np.ascontiguousarray(np.diagonal(mat))
        rows = np.flatnonzero(diag != 1).astype(np.int64)
        _pick(_diag, plan)(data, diag, rows, plan.row_offsets, cols, run, span, plan.holes,
                           plan.segments)
    elif structure == "monomial":
        dest, phase, rows = _monomial_tables(np.asarray(matrix, dtype=complex).tobytes(), d)
        _pick(_monomial, plan)(data, dest, phase.astype(data.dtype), rows, plan.row_offsets,
                               cols, run, span, plan.holes, plan.segments)
    elif d == 2 and plan.contiguous:
        _pick(_dense1_run, plan)(data, mat, plan.strides[0], plan.run, plan.holes, plan.segments)
    elif d == 2:
        _pick(_dense1, plan)(data, mat, plan.strides[0], plan.col_offsets, plan.holes,
                             plan.segments)
    elif d == 4 and plan.contiguous:
        _pick(_dense2_run, plan)(data, mat, plan.strides[0], plan.strides[1], plan.run,
                                 plan.holes, plan.segments)
    elif d == 4:
        _pick(_dense2, plan)(data, mat, plan.strides[0], plan.strides[1], plan.col_offsets,
                             plan.holes, plan.segments)
    else:
        _pick(_dense, plan)(data, mat, plan.row_offsets, cols, run, span, plan.holes,
                            plan.segments)


def adjoint_step(phi: np.ndarray, psi: np.ndarray, n: int, positions,
                 mat_phi: np.ndarray, mat_psi: np.ndarray, cfg: ThreadConfig | None = None,
                 mask: np.ndarray | None = None, structure: str | None = None) -> np.ndarray:
    """Update two states with one local matrix each in a single sweep.

    Before the update, accumulates ``R[a, b] = sum conj(psi[a, rest]) * phi[b, rest]``
    for the entries selected by ``mask`` (none by default), so that
    ``<psi| W |phi> == sum(W * R)`` whenever ``W`` vanishes outside ``mask``.
    ``structure`` is a hint shared by both matrices; it is detected when omitted.
    """
    plan = plan_apply(positions, n, cfg)
    d = len(plan.row_offsets)
    a = np.asarray(mat_phi, dtype=phi.dtype)
    q = np.asarray(mat_psi, dtype=psi.dtype)
    if mask is None:
        sa = sq = structure
        if structure is None:
            sa, sq = matrix_structure(a), matrix_structure(q)
        if sa != "dense" and sq != "dense":
            # permutation-like steps need no overlap; the cheap single-state kernels win
            apply_matrix(phi, n, positions, a, cfg, sa)
            apply_matrix(psi, n, positions, q, cfg, sq)
            return np.zeros((d, d), dtype=complex)
    mask = np.zeros((d, d), dtype=np.bool_) if mask is None else np.asarray(mask, dtype=np.bool_)
    acc = np.zeros((plan.num_segments, d, d), dtype=phi.dtype)
    if d == 2 and plan.contiguous:
        _pick(_adjoint1_run, plan)(phi, psi, a, q, mask, plan.strides[0], plan.run,
                                   plan.holes, plan.segments, acc)
    elif d == 2:
        _pick(_adjoint1, plan)(phi, psi, a, q, mask, plan.strides[0], plan.col_offsets,
                               plan.holes, plan.segments, acc)
    else:
        cols, run, span = _columns(plan)
        _pick(_adjoint, plan)(phi, psi, a, q, mask, plan.row_offsets, cols, run, span,
                              plan.holes, plan.segments, acc)
    return acc.sum(axis=0).astype(complex)


def apply_matrix_naive(data: np.ndarray, n: int, positions, matrix: np.ndarray) -> None:
    """Reference contraction: reshape to a rank-``n`` tensor and contract the gate tensor."""
    positions = tuple(int(p) for p in positions)
    _check_range(positions, n)
    m = len(positions)
    tensor = data.reshape((2,) * n, order="F")
    gate = np.asarray(matrix).reshape((2,) * (2 * m), order="F")
    axes = [p - 1 for p in positions]
    # gate axes: (out_1..out_m, in_1..in_m)
    out = np.tensordot(gate, tensor, axes=(list(range(m, 2 * m)), axes))
    out = np.moveaxis(out, list(range(m)), axes)
    data[:] = out.reshape(-1, order="F")


# ---------------------------------------------------------------------------
# State-level operations

def apply_gate_naive(state: PureState, g: GateOp) -> None:
    apply_matrix_naive(state.data, state.num_qubits, g.positions, g.matrix)


def apply_gate_fast(state: PureState, g: GateOp, cfg: ThreadConfig | None = None) -> None:
    apply_matrix(state.data, state.num_qubits, g.positions, g.matrix, cfg, g.structure)


def apply_gate_mixed(dm: MixedState, g: GateOp, cfg: ThreadConfig | None = None) -> None:
    """``rho <- U rho U^dagger``: ``U`` on the ket bits, ``conj(U)`` on the bra bits."""
    n = dm.num_qubits
    _check_range(g.positions, n)
    apply_matrix(dm.data, 2 * n, g.positions, g.matrix, cfg, g.structure)
    apply_matrix(dm.data, 2 * n, tuple(p + n for p in g.positions), g.matrix.conj(), cfg,
                 g.structure)


def apply_superoperator(dm: MixedState, sup: Superoperator, cfg: ThreadConfig | None = None) -> None:
    n = dm.num_qubits
    _check_range(sup.positions, n)
    apply_matrix(dm.data, 2 * n, sup.full_positions(n), sup.matrix, cfg)


def apply_channel(dm: MixedState, c: ChannelOp, cfg: ThreadConfig | None = None) -> None:
    """Apply a Kraus channel through its superoperator as a ``2m``-qubit gate."""
    apply_superoperator(dm, channel_superoperator(c), cfg)
