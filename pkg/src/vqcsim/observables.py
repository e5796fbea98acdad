"""Pauli-string operators and their expectation values."""
from __future__ import annotations

from typing import Iterable, Iterator, Mapping

import numpy as np
from numba import njit

from .errors import DomainError, QubitIndexError, ShapeError
from .statespace import MixedState, PureState, new_buffer

_LABELS = {"x", "y", "z"}


class PauliTerm:
    """``coeff`` times a product of Pauli factors; identity on unlisted qubits."""

    __slots__ = ("factors", "coeff", "xmask", "zmask", "num_y")

    def __init__(self, factors: Mapping[int, str] | Iterable[tuple[int, str]], coeff: complex = 1.0) -> None:
        items = factors.items() if isinstance(factors, Mapping) else factors
        fac: dict[int, str] = {}
        for q, label in items:
            q, label = int(q), str(label).lower()
            if q < 1:
                raise DomainError(f"qubit positions start at 1, got {q}")
            if q in fac:
                raise DomainError(f"qubit {q} appears twice in one term")
            if label == "i":
                continue
            if label not in _LABELS:
                raise DomainError(f"unknown Pauli label {label!r}")
            fac[q] = label
        self.factors = dict(sorted(fac.items()))
        self.coeff = complex(coeff)
        self.xmask = sum(1 << (q - 1) for q, l in self.factors.items() if l in "xy")
        self.zmask = sum(1 << (q - 1) for q, l in self.factors.items() if l in "yz")
        self.num_y = sum(l == "y" for l in self.factors.values())

    @property
    def max_position(self) -> int:
        return max(self.factors, default=0)

    def matrix(self, n: int) -> np.ndarray:
        """Dense ``2**n`` matrix. Only meant for small checks."""
        paulis = {"x": [[0, 1], [1, 0]], "y": [[0, -1j], [1j, 0]], "z": [[1, 0], [0, -1]]}
        out = np.eye(1, dtype=complex)
        for q in range(1, n + 1):
            f = np.array(paulis[self.factors[q]], dtype=complex) if q in self.factors else np.eye(2)
            out = np.kron(f, out)
        return self.coeff * out

    def __repr__(self) -> str:
        body = " ".join(f"{l}{q}" for q, l in self.factors.items()) or "I"
        return f"PauliTerm({self.coeff} * {body})"


class PauliOperator:
    """Sum of Pauli terms. Duplicate terms are kept and simply add up."""

    def __init__(self, terms: Iterable[PauliTerm] = ()) -> None:
        self.terms = list(terms)

    def __iter__(self) -> Iterator[PauliTerm]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self.terms)

    def __add__(self, other: "PauliOperator") -> "PauliOperator":
        return PauliOperator(self.terms + list(other.terms))

    @property
    def max_position(self) -> int:
        return max((t.max_position for t in self.terms), default=0)

    def matrix(self, n: int) -> np.ndarray:
        return sum((t.matrix(n) for t in self.terms), np.zeros((1 << n, 1 << n), dtype=complex))

    def __repr__(self) -> str:
        return f"PauliOperator({len(self.terms)} terms)"


def _check_fits(op: PauliOperator, n: int) -> None:
    if op.max_position > n:
        raise QubitIndexError(f"operator touches qubit {op.max_position} of a {n}-qubit state")


def _term_phase(term: PauliTerm) -> complex:
    # P|k> = i**num_y * (-1)**popcount(k & zmask) |k ^ xmask>
    return 1j ** term.num_y


@njit(cache=True, nogil=True)
def _parity(k):
    k ^= k >> 32
    k ^= k >> 16
    k ^= k >> 8
    k ^= k >> 4
    k ^= k >> 2
    k ^= k >> 1
    return k & 1


@njit(cache=True, nogil=True)
def _term_expectation(data, xmask, zmask):
    acc = 0j
    for k in range(data.shape[0]):
        v = np.conj(data[k ^ xmask]) * data[k]
        if _parity(k & zmask):
            acc -= v
        else:
            acc += v
    return acc


@njit(cache=True, nogil=True)
def _term_accumulate(out, data, xmask, zmask, coeff):
    for k in range(data.shape[0]):
        v = coeff * data[k]
        if _parity(k & zmask):
            out[k ^ xmask] -= v
        else:
            out[k ^ xmask] += v


@njit(cache=True, nogil=True)
def _term_trace(data, d, xmask, zmask):
    # tr(P rho) = sum_a sign(a) rho[a, a ^ x], rho[a, b] at a + d * b
    acc = 0j
    for a in range(d):
        v = data[a + d * (a ^ xmask)]
        if _parity(a & zmask):
            acc -= v
        else:
            acc += v
    return acc


@njit(cache=True, nogil=True)
def _term_dual(out, d, xmask, zmask, coeff):
    # entries of (c P)^dagger: conj(c * sign(a)) at (a, a ^ x)
    for a in range(d):
        if _parity(a & zmask):
            out[a + d * (a ^ xmask)] -= coeff
        else:
            out[a + d * (a ^ xmask)] += coeff


def expectation(op: PauliOperator, state: PureState | MixedState) -> complex:
    """``<psi|op|psi>``, or ``tr(op rho)`` for a mixed state."""
    if isinstance(state, MixedState):
        return expectation_mixed(op, state)
    _check_fits(op, state.num_qubits)
    total = 0j
    for t in op.terms:
        total += t.coeff * _term_phase(t) * _term_expectation(state.data, t.xmask, t.zmask)
    return complex(total)


def expectation_mixed(op: PauliOperator, dm: MixedState) -> complex:
    _check_fits(op, dm.num_qubits)
    d = 1 << dm.num_qubits
    total = 0j
    for t in op.terms:
        total += t.coeff * _term_phase(t) * _term_trace(dm.data, d, t.xmask, t.zmask)
    return complex(total)


def apply_operator(op: PauliOperator, state: PureState) -> PureState:
    """``op |psi>`` as a new, generally unnormalized, state."""
    _check_fits(op, state.num_qubits)
    out = new_buffer(state.data.size, state.dtype)
    for t in op.terms:
        _term_accumulate(out, state.data, t.xmask, t.zmask, out.dtype.type(t.coeff * _term_phase(t)))
    return PureState(out, state.num_qubits)


def operator_dual_vector(op: PauliOperator, n: int, dtype=np.complex128) -> PureState:
    """Vectorized ``op^dagger`` as a ``2n``-qubit pseudo-state.

    ``vdot(result, vec(rho)) == tr(op rho)``, which turns the final trace of a
    noisy loss into an overlap.
    """
    _check_fits(op, n)
    d = 1 << n
    out = new_buffer(d * d, dtype)
    for t in op.terms:
        _term_dual(out, d, t.xmask, t.zmask, out.dtype.type(np.conj(t.coeff * _term_phase(t))))
    return PureState(out, 2 * n)


def heisenberg_1d(L: int, hz: float = 1.0, J: float = 1.0) -> PauliOperator:
    """Open-chain Heisenberg model with a uniform field along z."""
    if L < 1:
        raise DomainError(f"chain length must be >= 1, got {L}")
    terms = [PauliTerm({i: "z"}, hz) for i in range(1, L + 1)]
    for i in range(1, L):
        for label in "xyz":
            terms.append(PauliTerm({i: label, i + 1: label}, J))
    return PauliOperator(terms)


# ---------------------------------------------------------------------------
# Text interchange: one term per line, ``TERM coeff_re coeff_im 1:z 2:x ...``

def format_operator(op: PauliOperator) -> str:
    lines = []
    for t in op.terms:
        factors = " ".join(f"{q}:{l}" for q, l in t.factors.items())
        lines.append(f"TERM {t.coeff.real!r} {t.coeff.imag!r} {factors}".rstrip())
    return "\n".join(lines) + "\n"


def parse_operator(text: str) -> PauliOperator:
    terms = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] != "TERM" or len(parts) < 3:
            raise ShapeError(f"line {lineno}: expected 'TERM re im q:label ...'")
        try:
            coeff = complex(float(parts[1]), float(parts[2]))
            factors = [(int(q), l) for q, l in (p.split(":") for p in parts[3:])]
        except ValueError as exc:
            raise ShapeError(f"line {lineno}: {exc}") from None
        terms.append(PauliTerm(factors, coeff))
    return PauliOperator(terms)


def read_operator(path) -> PauliOperator:
    with open(path) as fh:
        return parse_operator(fh.read())


def write_operator(path, op: PauliOperator) -> None:
    with open(path, "w") as fh:
        fh.write(format_operator(op))
