"""Pure and mixed state storage.

Amplitudes are stored flat in column-major tensor order: qubit 1 is the
least significant bit of the flat index. A density matrix of ``n`` qubits
is stored as ``4**n`` entries with ket bits ``1..n`` low and bra bits
``n+1..2n`` high, so ``entries[a + 2**n * b] == rho[a, b]``.
"""
from __future__ import annotations

import contextlib
import struct
import weakref
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import DegenerateStateError, DomainError, ShapeError, SizeError, ValidityError

COMPLEX_SINGLE = np.dtype(np.complex64)
COMPLEX_DOUBLE = np.dtype(np.complex128)
DEFAULT_DTYPE = COMPLEX_DOUBLE

# 2**MAX_QUBITS complex doubles must fit in memory; 34 qubits is 256 GiB.
MAX_QUBITS = 34

_NORM_TOL = 1e-8


def _as_precision(precision) -> np.dtype:
    dtype = np.dtype(precision) if precision is not None else DEFAULT_DTYPE
    if dtype not in (COMPLEX_SINGLE, COMPLEX_DOUBLE):
        raise DomainError(f"unsupported precision {dtype}; use complex64 or complex128")
    return dtype


# ---------------------------------------------------------------------------
# Allocation accounting for full-size state buffers.

class AllocationTracker:
    """Counts live state buffers created through :func:`new_buffer`."""

    def __init__(self) -> None:
        self.live = 0
        self.peak = 0
        self.total = 0

    def _alloc(self) -> None:
        self.live += 1
        self.total += 1
        self.peak = max(self.peak, self.live)

    def _free(self) -> None:
        self.live -= 1


_trackers: list[AllocationTracker] = []


def new_buffer(size: int, dtype) -> np.ndarray:
    """Allocate a zeroed state buffer, visible to active allocation trackers."""
    buf = np.zeros(size, dtype=dtype)
    for tracker in _trackers:
        tracker._alloc()
        weakref.finalize(buf, tracker._free)
    return buf


@contextlib.contextmanager
def track_allocations() -> Iterator[AllocationTracker]:
    """Record how many state buffers are simultaneously alive inside the block."""
    tracker = AllocationTracker()
    _trackers.append(tracker)
    try:
        yield tracker
    finally:
        _trackers.remove(tracker)


# ---------------------------------------------------------------------------

class PureState:
    """State vector of ``num_qubits`` qubits."""

    __slots__ = ("data", "num_qubits", "__weakref__")

    def __init__(self, data: np.ndarray, num_qubits: int | None = None) -> None:
        self.data = data
        self.num_qubits = num_qubits if num_qubits is not None else _log2_len(len(data))

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    def copy(self) -> "PureState":
        buf = new_buffer(self.data.size, self.data.dtype)
        buf[:] = self.data
        return PureState(buf, self.num_qubits)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.data) ** 2

    def __repr__(self) -> str:
        return f"PureState(num_qubits={self.num_qubits}, dtype={self.dtype})"


class MixedState:
    """Density matrix of ``num_qubits`` qubits stored as a flat ``4**n`` array."""

    __slots__ = ("data", "num_qubits", "__weakref__")

    def __init__(self, data: np.ndarray, num_qubits: int | None = None) -> None:
        self.data = data
        if num_qubits is None:
            twice = _log2_len(len(data))
            if twice % 2:
                raise ShapeError(f"length {len(data)} is not a power of four")
            num_qubits = twice // 2
        self.num_qubits = num_qubits

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def matrix(self) -> np.ndarray:
        """``2**n x 2**n`` view of the entries, rows indexed by ket bits."""
        d = 1 << self.num_qubits
        return self.data.reshape(d, d, order="F")

    def copy(self) -> "MixedState":
        buf = new_buffer(self.data.size, self.data.dtype)
        buf[:] = self.data
        return MixedState(buf, self.num_qubits)

    def __repr__(self) -> str:
        return f"MixedState(num_qubits={self.num_qubits}, dtype={self.dtype})"


def _log2_len(length: int) -> int:
    if length < 2 or length & (length - 1):
        raise ShapeError(f"length {length} is not a power of two >= 2")
    return length.bit_length() - 1


def _check_qubit_count(n: int) -> None:
    if not isinstance(n, (int, np.integer)) or n <= 0:
        raise SizeError(f"qubit count must be a positive integer, got {n!r}")
    if n > MAX_QUBITS:
        raise SizeError(f"{n} qubits exceeds the supported maximum of {MAX_QUBITS}")


def new_pure_state(n: int, precision=None) -> PureState:
    """``|0...0>`` on ``n`` qubits."""
    _check_qubit_count(n)
    data = new_buffer(1 << n, _as_precision(precision))
    data[0] = 1
    return PureState(data, int(n))


def pure_state_from_amplitudes(data: Sequence[complex], precision=None) -> PureState:
    """Wrap a copy of ``data``; the norm must be within 1e-8 of one and is renormalized."""
    arr = np.asarray(data)
    if arr.ndim != 1:
        raise ShapeError("amplitudes must be one-dimensional")
    n = _log2_len(arr.size)
    dtype = _as_precision(precision)
    nrm = float(np.linalg.norm(arr))
    if nrm == 0.0:
        raise DegenerateStateError("zero vector is not a quantum state")
    if abs(nrm - 1.0) > _NORM_TOL:
        raise ValidityError(f"state norm {nrm} differs from 1")
    buf = new_buffer(arr.size, dtype)
    buf[:] = arr / nrm
    return PureState(buf, n)


def unchecked_pure_state(data: Sequence[complex], precision=None) -> PureState:
    """Wrap ``data`` without any normalization check. Intended for tests and oracles."""
    arr = np.asarray(data, dtype=_as_precision(precision))
    return PureState(arr.copy(), _log2_len(arr.size))


def new_mixed_state(n: int, precision=None) -> MixedState:
    """``|0...0><0...0|`` on ``n`` qubits."""
    _check_qubit_count(n)
    if 2 * n > MAX_QUBITS:
        raise SizeError(f"{n}-qubit density matrix exceeds the supported size")
    data = new_buffer(1 << (2 * n), _as_precision(precision))
    data[0] = 1
    return MixedState(data, int(n))


def mixed_state_from_entries(data, precision=None) -> MixedState:
    """Density matrix from a flat ``4**n`` array or a square ``2**n`` matrix.

    Flat input is read in the storage order documented at module level.
    """
    arr = np.asarray(data)
    if arr.ndim == 2:
        if arr.shape[0] != arr.shape[1]:
            raise ShapeError(f"density matrix must be square, got {arr.shape}")
        flat = arr.reshape(-1, order="F")
    elif arr.ndim == 1:
        flat = arr
    else:
        raise ShapeError("density matrix must be 1- or 2-dimensional")
    twice = _log2_len(flat.size)
    if twice % 2:
        raise ShapeError(f"length {flat.size} is not a power of four")
    n = twice // 2
    d = 1 << n
    mat = flat.reshape(d, d, order="F")
    tr = np.trace(mat)
    if abs(tr - 1.0) > _NORM_TOL:
        raise ValidityError(f"trace {tr} differs from 1")
    if np.max(np.abs(mat - mat.conj().T)) > _NORM_TOL:
        raise ValidityError("density matrix is not Hermitian")
    buf = new_buffer(flat.size, _as_precision(precision))
    buf[:] = flat
    return MixedState(buf, n)


def purify_index_view(dm: MixedState) -> PureState:
    """The density matrix entries seen as an unnormalized ``2n``-qubit state (shared storage)."""
    return PureState(dm.data, 2 * dm.num_qubits)


def mixed_from_pseudo_state(pseudo: PureState) -> MixedState:
    """Inverse of :func:`purify_index_view`; shares storage."""
    if pseudo.num_qubits % 2:
        raise ShapeError("pseudo-state must have an even qubit count")
    return MixedState(pseudo.data, pseudo.num_qubits // 2)


def basis_index(bits: Iterable[int]) -> int:
    """Flat index of the basis state with ``bits[j]`` on qubit ``j + 1``."""
    index = 0
    for j, b in enumerate(bits):
        if b not in (0, 1):
            raise DomainError(f"bit {j + 1} is {b!r}, expected 0 or 1")
        index |= int(b) << j
    return index


def norm(state: PureState) -> float:
    return float(np.linalg.norm(state.data))


def trace(dm: MixedState) -> complex:
    d = 1 << dm.num_qubits
    # diagonal entries sit at a + d*a
    return complex(np.sum(dm.data[:: d + 1]))


# ---------------------------------------------------------------------------
# Raw dumps: "VQCS" | version u32 | n u32 | precision u8 | (re, im) float64 pairs

_MAGIC = b"VQCS"
_VERSION = 1
_HEADER = struct.Struct("<4sIIB")
_PRECISION_CODES = {COMPLEX_SINGLE: 0, COMPLEX_DOUBLE: 1}


def write_state(path, state: PureState | MixedState) -> None:
    """Dump amplitudes little-endian. Mixed states are written as their ``2n``-qubit pseudo-state."""
    if isinstance(state, MixedState):
        state = purify_index_view(state)
    header = _HEADER.pack(_MAGIC, _VERSION, state.num_qubits, _PRECISION_CODES[state.dtype])
    body = np.ascontiguousarray(state.data, dtype="<c16").tobytes()
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(body)


def read_state(path, mixed: bool = False) -> PureState | MixedState:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ShapeError("file too short for a state header")
    magic, version, n, code = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValidityError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise ValidityError(f"unsupported dump version {version}")
    dtype = {v: k for k, v in _PRECISION_CODES.items()}.get(code)
    if dtype is None:
        raise ValidityError(f"unknown precision code {code}")
    body = np.frombuffer(raw, dtype="<c16", offset=_HEADER.size)
    if body.size != 1 << n:
        raise ShapeError(f"expected {1 << n} amplitudes, found {body.size}")
    data = new_buffer(body.size, dtype)
    data[:] = body
    pure = PureState(data, n)
    return mixed_from_pseudo_state(pure) if mixed else pure
