"""Gate and channel definitions.

All matrices use the internal tensor convention: for an operation on
``positions = (p1, p2, ...)`` the local basis index is
``b1 + 2*b2 + 4*b3 + ...`` where ``bk`` is the bit of qubit ``pk``.
Textbook matrices (first qubit most significant) go through
:func:`row_major_to_column_major`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np

from .errors import DomainError, ShapeError, UnsupportedError, ValidityError

CONSTRUCT_TOL = 1e-8

GENERIC = "Generic"
PARAMETRIC_KINDS = ("Rx", "Ry", "Rz", "CRx", "CRy", "CRz", "FSIM")
DIAGONAL_KINDS = frozenset({"Z", "S", "T", "CZ", "Rz", "CRz"})
PERMUTATION_KINDS = frozenset({"X", "Y", "CNOT", "SWAP", "iSWAP", "TOFFOLI", "FREDKIN"})
CHANNEL_KINDS = ("AmplitudeDamping", "PhaseDamping", "Depolarizing")

_I2 = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def matrix_structure(matrix: np.ndarray) -> str:
    """Classify as 'diagonal', 'monomial' (one nonzero per column) or 'dense'."""
    nz = matrix != 0
    if not np.any(nz & ~np.eye(matrix.shape[0], dtype=bool)):
        return "diagonal"
    if np.all(nz.sum(axis=0) == 1) and np.all(nz.sum(axis=1) == 1):
        return "monomial"
    return "dense"


def _check_positions(positions) -> tuple[int, ...]:
    if isinstance(positions, (int, np.integer)):
        positions = (positions,)
    pos = tuple(int(p) for p in positions)
    if not pos:
        raise ShapeError("an operation needs at least one qubit")
    if any(p < 1 for p in pos):
        raise ValidityError(f"qubit positions start at 1, got {pos}")
    if len(set(pos)) != len(pos):
        raise ValidityError(f"duplicate qubit positions {pos}")
    return pos


def _check_square(matrix, m: int) -> np.ndarray:
    mat = np.array(matrix, dtype=complex)
    dim = 1 << m
    if mat.shape != (dim, dim):
        raise ShapeError(f"expected a {dim}x{dim} matrix for {m} qubit(s), got {mat.shape}")
    return mat


def unitarity_error(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix.conj().T @ matrix - np.eye(matrix.shape[0]))))


@dataclass(frozen=True, eq=False)
class GateOp:
    """A unitary on ``positions``. Parametric kinds rebuild ``matrix`` from ``params``."""

    positions: tuple[int, ...]
    matrix: np.ndarray
    kind: str = GENERIC
    params: tuple[float, ...] = ()
    is_param: tuple[bool, ...] = ()

    @property
    def num_qubits(self) -> int:
        return len(self.positions)

    @property
    def num_active(self) -> int:
        return sum(self.is_param)

    @cached_property
    def structure(self) -> str:
        if self.kind in DIAGONAL_KINDS:
            return "diagonal"
        if self.kind in PERMUTATION_KINDS:
            return "monomial"
        return matrix_structure(self.matrix)

    def with_params(self, params: Sequence[float]) -> "GateOp":
        return parametric_gate(self.kind, self.positions, params, self.is_param)

    def __repr__(self) -> str:
        extra = f", params={self.params}" if self.params else ""
        return f"GateOp({self.kind}, {self.positions}{extra})"


@dataclass(frozen=True, eq=False)
class ChannelOp:
    """Kraus channel on ``positions``; carries no variational parameters."""

    positions: tuple[int, ...]
    kraus: tuple[np.ndarray, ...]
    kind: str = GENERIC
    noise_params: Mapping[str, float] = field(default_factory=dict)

    @property
    def num_qubits(self) -> int:
        return len(self.positions)

    def __repr__(self) -> str:
        return f"ChannelOp({self.kind}, {self.positions}, {dict(self.noise_params)})"


@dataclass(frozen=True, eq=False)
class Superoperator:
    """``4**m x 4**m`` map on a vectorized density matrix.

    Acts as a ``2m``-qubit gate on ``positions + (p + n for p in positions)``:
    the ket bits form the low half of the local index, the bra bits the high half.
    In numpy terms ``matrix == sum(np.kron(K.conj(), K))`` over Kraus operators.
    """

    positions: tuple[int, ...]
    matrix: np.ndarray

    def full_positions(self, n: int) -> tuple[int, ...]:
        return self.positions + tuple(p + n for p in self.positions)


# ---------------------------------------------------------------------------
# Fixed gates

def row_major_to_column_major(matrix, m: int) -> np.ndarray:
    """Re-index an ``m``-qubit textbook matrix (first qubit most significant) to the internal order."""
    mat = _check_square(matrix, m)
    dim = 1 << m
    perm = np.array([int(format(i, f"0{m}b")[::-1], 2) if m else 0 for i in range(dim)])
    return mat[np.ix_(perm, perm)]


def make_gate(positions, matrix) -> GateOp:
    pos = _check_positions(positions)
    mat = _check_square(matrix, len(pos))
    err = unitarity_error(mat)
    if err > CONSTRUCT_TOL:
        raise ValidityError(f"matrix is not unitary (max deviation {err:.2e})")
    mat.flags.writeable = False
    return GateOp(pos, mat)


def _controlled_matrix(num_controls: int, target: np.ndarray) -> np.ndarray:
    dim = 1 << (num_controls + 1)
    mat = np.eye(dim, dtype=complex)
    on = (1 << num_controls) - 1
    idx = [on, on + (1 << num_controls)]
    mat[np.ix_(idx, idx)] = target
    return mat


_SQRT_X = 0.5 * np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]])
_SQRT_Y = 0.5 * np.array([[1 + 1j, -1 - 1j], [1 + 1j, 1 + 1j]])

_FIXED = {
    "X": (1, _X),
    "Y": (1, _Y),
    "Z": (1, _Z),
    "H": (1, np.array([[1, 1], [1, -1]]) / np.sqrt(2)),
    "S": (1, np.diag([1, 1j])),
    "T": (1, np.diag([1, np.exp(1j * np.pi / 4)])),
    "sqrtX": (1, _SQRT_X),
    "sqrtY": (1, _SQRT_Y),
    "SWAP": (2, row_major_to_column_major(
        [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], 2)),
    "iSWAP": (2, row_major_to_column_major(
        [[1, 0, 0, 0], [0, 0, 1j, 0], [0, 1j, 0, 0], [0, 0, 0, 1]], 2)),
    "CZ": (2, np.diag([1, 1, 1, -1])),
    "CNOT": (2, _controlled_matrix(1, _X)),
    "TOFFOLI": (3, _controlled_matrix(2, _X)),
    # control on the first position, swap the other two
    "FREDKIN": (3, np.eye(8)[:, [0, 1, 2, 5, 4, 3, 6, 7]]),
}
STANDARD_KINDS = tuple(_FIXED)


def standard_gate(kind: str, positions) -> GateOp:
    try:
        m, mat = _FIXED[kind]
    except KeyError:
        raise DomainError(f"unknown gate kind {kind!r}") from None
    pos = _check_positions(positions)
    if len(pos) != m:
        raise ShapeError(f"{kind} acts on {m} qubit(s), got positions {pos}")
    mat = np.array(mat, dtype=complex)
    mat.flags.writeable = False
    return GateOp(pos, mat, kind)


def controlled_gate(controls, target: int, target_matrix) -> GateOp:
    """Apply ``target_matrix`` on ``target`` iff every control qubit is 1."""
    ctrl = (controls,) if isinstance(controls, (int, np.integer)) else tuple(controls)
    if len(ctrl) not in (1, 2):
        raise ShapeError("one or two control qubits are supported")
    pos = _check_positions(ctrl + (target,))
    u = _check_square(target_matrix, 1)
    err = unitarity_error(u)
    if err > CONSTRUCT_TOL:
        raise ValidityError(f"target matrix is not unitary (max deviation {err:.2e})")
    mat = _controlled_matrix(len(ctrl), u)
    mat.flags.writeable = False
    return GateOp(pos, mat)


# ---------------------------------------------------------------------------
# Parametric gates

def _rx(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def _ry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def _rz(t: float) -> np.ndarray:
    return np.diag([np.exp(-0.5j * t), np.exp(0.5j * t)])


def _drx(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return 0.5 * np.array([[-s, -1j * c], [-1j * c, -s]])


def _dry(t: float) -> np.ndarray:
    c, s = np.cos(t / 2), np.sin(t / 2)
    return 0.5 * np.array([[-s, -c], [c, -s]], dtype=complex)


def _drz(t: float) -> np.ndarray:
    return np.diag([-0.5j * np.exp(-0.5j * t), 0.5j * np.exp(0.5j * t)])


_ROTATIONS = {"Rx": (_rx, _drx), "Ry": (_ry, _dry), "Rz": (_rz, _drz)}


def _fsim_textbook(theta, phi, dp, dm, doff) -> np.ndarray:
    c, s = np.cos(theta), np.sin(theta)
    mat = np.zeros((4, 4), dtype=complex)
    mat[0, 0] = 1
    mat[1, 1] = np.exp(1j * (dp + dm)) * c
    mat[1, 2] = -1j * np.exp(1j * (dp - doff)) * s
    mat[2, 1] = -1j * np.exp(1j * (dp + doff)) * s
    mat[2, 2] = np.exp(1j * (dp - dm)) * c
    mat[3, 3] = np.exp(1j * (2 * dp - phi))
    return mat


def _dfsim_textbook(params, k: int) -> np.ndarray:
    theta, phi, dp, dm, doff = params
    c, s = np.cos(theta), np.sin(theta)
    full = _fsim_textbook(*params)
    d = np.zeros((4, 4), dtype=complex)
    if k == 0:
        d[1, 1] = -np.exp(1j * (dp + dm)) * s
        d[1, 2] = -1j * np.exp(1j * (dp - doff)) * c
        d[2, 1] = -1j * np.exp(1j * (dp + doff)) * c
        d[2, 2] = -np.exp(1j * (dp - dm)) * s
    elif k == 1:
        d[3, 3] = -1j * full[3, 3]
    elif k == 2:
        d[1:3, 1:3] = 1j * full[1:3, 1:3]
        d[3, 3] = 2j * full[3, 3]
    elif k == 3:
        d[1, 1] = 1j * full[1, 1]
        d[2, 2] = -1j * full[2, 2]
    else:
        d[1, 2] = -1j * full[1, 2]
        d[2, 1] = 1j * full[2, 1]
    return d


def _param_count(kind: str) -> int:
    if kind == "FSIM":
        return 5
    if kind in PARAMETRIC_KINDS:
        return 1
    raise DomainError(f"{kind!r} is not a parametric gate kind")


def _parametric_matrix(kind: str, params: tuple[float, ...]) -> np.ndarray:
    if kind == "FSIM":
        return row_major_to_column_major(_fsim_textbook(*params), 2)
    if kind in _ROTATIONS:
        return _ROTATIONS[kind][0](params[0])
    return _controlled_matrix(1, _ROTATIONS[kind[1:]][0](params[0]))


def parametric_gate(kind: str, positions, params, is_param=False) -> GateOp:
    """Rotation, controlled rotation or FSIM gate.

    ``params`` is a scalar for single-parameter kinds or the sequence
    ``(theta, phi, delta_plus, delta_minus, delta_minus_off)`` for FSIM.
    ``is_param`` marks which parameters are variational (default: none).
    """
    count = _param_count(kind)
    vals = tuple(float(p) for p in np.atleast_1d(params))
    flags = tuple(bool(f) for f in np.atleast_1d(is_param))
    if len(flags) == 1 and count > 1:
        flags = flags * count
    if len(vals) != count or len(flags) != count:
        raise ShapeError(f"{kind} takes {count} parameter(s), got {len(vals)} values / {len(flags)} flags")
    pos = _check_positions(positions)
    arity = 1 if kind in _ROTATIONS else 2
    if len(pos) != arity:
        raise ShapeError(f"{kind} acts on {arity} qubit(s), got positions {pos}")
    mat = _parametric_matrix(kind, vals)
    mat.flags.writeable = False
    return GateOp(pos, mat, kind, vals, flags)


def gate_derivative(g: GateOp, param_index: int) -> np.ndarray:
    """Analytic derivative of ``g.matrix`` with respect to one of its active parameters."""
    if g.kind not in PARAMETRIC_KINDS:
        raise UnsupportedError(f"no closed-form derivative for {g.kind} gates")
    if not 0 <= param_index < len(g.params) or not g.is_param[param_index]:
        raise DomainError(f"parameter {param_index} of {g!r} is not active")
    if g.kind == "FSIM":
        return row_major_to_column_major(_dfsim_textbook(g.params, param_index), 2)
    if g.kind in _ROTATIONS:
        return _ROTATIONS[g.kind][1](g.params[0])
    d = np.zeros((4, 4), dtype=complex)
    d[np.ix_([1, 3], [1, 3])] = _ROTATIONS[g.kind[1:]][1](g.params[0])
    return d


_SELF_INVERSE = frozenset({"X", "Y", "Z", "H", "SWAP", "CZ", "CNOT", "TOFFOLI", "FREDKIN"})


def gate_inverse(g: GateOp) -> GateOp:
    if g.kind in _SELF_INVERSE:
        return g
    if g.kind == "FSIM":
        theta, phi, dp, dm, doff = g.params
        return parametric_gate("FSIM", g.positions, (-theta, -phi, -dp, -dm, doff), g.is_param)
    if g.kind in PARAMETRIC_KINDS:
        return parametric_gate(g.kind, g.positions, -g.params[0], g.is_param)
    mat = g.matrix.conj().T.copy()
    mat.flags.writeable = False
    return GateOp(g.positions, mat)


# ---------------------------------------------------------------------------
# Channels

def completeness_error(kraus: Sequence[np.ndarray]) -> float:
    total = sum(k.conj().T @ k for k in kraus)
    return float(np.max(np.abs(total - np.eye(total.shape[0]))))


def make_channel(positions, kraus_list) -> ChannelOp:
    pos = _check_positions(positions)
    kraus = tuple(_check_square(k, len(pos)) for k in kraus_list)
    if not kraus:
        raise ShapeError("a channel needs at least one Kraus operator")
    err = completeness_error(kraus)
    if err > CONSTRUCT_TOL:
        raise ValidityError(f"Kraus operators violate completeness (max deviation {err:.2e})")
    for k in kraus:
        k.flags.writeable = False
    return ChannelOp(pos, kraus)


def _unit_interval(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0:
        raise DomainError(f"{name} must lie in [0, 1], got {value}")
    return value


def amplitude_damping(pos: int, gamma: float) -> ChannelOp:
    g = _unit_interval("gamma", gamma)
    kraus = (np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex),
             np.array([[0, np.sqrt(g)], [0, 0]], dtype=complex))
    return ChannelOp(_check_positions(pos), kraus, "AmplitudeDamping", {"gamma": g})


def phase_damping(pos: int, gamma: float) -> ChannelOp:
    g = _unit_interval("gamma", gamma)
    kraus = (np.array([[1, 0], [0, np.sqrt(1 - g)]], dtype=complex),
             np.array([[0, 0], [0, np.sqrt(g)]], dtype=complex))
    return ChannelOp(_check_positions(pos), kraus, "PhaseDamping", {"gamma": g})


def depolarizing(pos: int, p: float) -> ChannelOp:
    """``rho -> (1 - 3p/4) rho + p/4 (X rho X + Y rho Y + Z rho Z)``.

    The Pauli Kraus weights are ``sqrt(p)/2``; weights of ``sqrt(p/2)`` would
    not be trace preserving.
    """
    p = _unit_interval("p", p)
    w = np.sqrt(p) / 2
    kraus = (np.sqrt(1 - 0.75 * p) * _I2, w * _X, w * _Y, w * _Z)
    return ChannelOp(_check_positions(pos), kraus, "Depolarizing", {"p": p})


_CHANNEL_BUILDERS = {
    "AmplitudeDamping": amplitude_damping,
    "PhaseDamping": phase_damping,
    "Depolarizing": depolarizing,
}


def standard_channel(kind: str, pos: int, param: float) -> ChannelOp:
    try:
        return _CHANNEL_BUILDERS[kind](pos, param)
    except KeyError:
        raise DomainError(f"unknown channel kind {kind!r}") from None


def channel_superoperator(c: ChannelOp) -> Superoperator:
    mat = sum(np.kron(k.conj(), k) for k in c.kraus)
    return Superoperator(c.positions, mat)


def gate_superoperator(g: GateOp) -> Superoperator:
    return Superoperator(g.positions, np.kron(g.matrix.conj(), g.matrix))
