"""Reverse-mode gradients of expectation-value losses.

The noiseless sweep keeps exactly two states: the forward state, which is
walked back through the circuit by applying each gate's inverse, and the
co-state ``H|psi>``, which is walked back alongside it. No intermediate
states are stored.

The noisy sweep runs the same recursion on vectorized density matrices,
where every gate ``U`` becomes the superoperator ``U (x) conj(U)``. The
forward state is rewound with the inverse superoperator; the co-state is
rewound with the adjoint, which differs from the inverse once channels are
involved.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .circuit import Circuit, active_parameters, apply_circuit, reset_parameters
from .errors import NonInvertibleChannelError
from .gates import ChannelOp, GateOp, channel_superoperator, gate_derivative
from .kernels import ThreadConfig, adjoint_step
from .observables import PauliOperator, apply_operator, expectation, expectation_mixed, operator_dual_vector
from .statespace import MixedState, PureState

CONDITION_LIMIT = 1e12


@dataclass
class GradientResult:
    loss: float
    grads: np.ndarray


def _require_noiseless(c: Circuit) -> None:
    if not c.is_noiseless:
        raise TypeError("circuit contains channels; use the mixed-state routines")


def _support(ws) -> np.ndarray:
    """Entries where any weight matrix is nonzero; the overlap kernel skips the rest."""
    scale = max(float(np.abs(w).max()) for w in ws)
    return np.any([np.abs(w) > 1e-14 * max(scale, 1.0) for w in ws], axis=0)


def loss_pure(op: PauliOperator, c: Circuit, s0: PureState, cfg: ThreadConfig | None = None) -> float:
    """``Re <s0| C^dagger H C |s0>``; ``s0`` is not modified."""
    _require_noiseless(c)
    state = s0.copy()
    apply_circuit(c, state, cfg)
    return float(np.real(expectation(op, state)))


# dR U^dagger for R = exp(-i t P / 2) is the constant -i P / 2
_ROTATION_WEIGHTS = {"Rx": -0.5j * np.array([[0, 1], [1, 0]]),
                     "Ry": -0.5j * np.array([[0, -1j], [1j, 0]]),
                     "Rz": -0.5j * np.array([[1, 0], [0, -1]])}
_ROTATION_SUPPORT = {k: w != 0 for k, w in _ROTATION_WEIGHTS.items()}


def _weights(g: GateOp, inv: np.ndarray) -> list[np.ndarray]:
    if g.kind in _ROTATION_WEIGHTS:
        return [_ROTATION_WEIGHTS[g.kind]]
    return [gate_derivative(g, idx) @ inv for idx, on in enumerate(g.is_param) if on]


def _store(grads: np.ndarray, k: int, ws, r: np.ndarray) -> None:
    for w in ws:
        grads[k] = 2.0 * np.real(np.sum(w * r))
        k += 1


def _run_start(ops, j: int) -> int:
    """First index of the run of one-qubit gates on the same wire that ends at ``j``."""
    if ops[j].num_qubits != 1:
        return j
    i = j
    while i > 0 and ops[i - 1].positions == ops[j].positions:
        i -= 1
    return i


def _sweep_pure(op: PauliOperator, c: Circuit, s0: PureState, cfg: ThreadConfig | None):
    _require_noiseless(c)
    cfg = cfg or ThreadConfig()
    ops = list(c.operations())
    n = s0.num_qubits

    phi = s0.copy()
    apply_circuit(c, phi, cfg)
    psi = apply_operator(op, phi)
    loss = float(np.real(np.vdot(phi.data, psi.data)))

    offsets = np.cumsum([0] + [g.num_active for g in ops])
    grads = np.zeros(offsets[-1])
    j = len(ops) - 1
    while j >= 0:
        g = ops[j]
        i = _run_start(ops, j)
        if i < j:
            # a run of one-qubit gates on one wire: read every overlap from the
            # states after the run, then rewind through the whole run at once
            inv = np.eye(2, dtype=complex)
            ws, ks = [], []
            for k in range(j, i - 1, -1):
                gk = ops[k]
                ginv = gk.matrix.conj().T
                if gk.num_active:
                    # conjugate by the later gates of the run, already undone in inv
                    ws.extend(inv.conj().T @ w @ inv for w in _weights(gk, ginv))
                    ks.extend(range(offsets[k], offsets[k + 1]))
                inv = ginv @ inv
            r = adjoint_step(phi.data, psi.data, n, g.positions, inv, inv, cfg,
                             _support(ws) if ws else None)
            for k, w in zip(ks, ws):
                grads[k] = 2.0 * np.real(np.sum(w * r))
            j = i - 1
            continue
        inv = g.matrix.conj().T
        if g.num_active:
            # <psi_j| dU |phi_{j-1}> == <psi_j| dU U^dagger |phi_j>, read before the step
            ws = _weights(g, inv)
            mask = _ROTATION_SUPPORT.get(g.kind)
            mask = _support(ws) if mask is None else mask
            r = adjoint_step(phi.data, psi.data, n, g.positions, inv, inv, cfg, mask)
            _store(grads, offsets[j], ws, r)
        else:
            adjoint_step(phi.data, psi.data, n, g.positions, inv, inv, cfg, structure=g.structure)
        j -= 1
    return GradientResult(loss, grads), phi


def gradient_pure(op: PauliOperator, c: Circuit, s0: PureState,
                  cfg: ThreadConfig | None = None) -> GradientResult:
    """Loss and gradient with respect to ``active_parameters(c)``, in that order."""
    return _sweep_pure(op, c, s0, cfg)[0]


# ---------------------------------------------------------------------------

def loss_mixed(op: PauliOperator, c: Circuit, dm0: MixedState, cfg: ThreadConfig | None = None) -> float:
    """``Re tr(H C(rho0))``; ``dm0`` is not modified."""
    state = dm0.copy()
    apply_circuit(c, state, cfg)
    return float(np.real(expectation_mixed(op, state)))


def _channel_inverses(ops) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    out = {}
    for j, op in enumerate(ops):
        if isinstance(op, ChannelOp):
            sup = channel_superoperator(op).matrix
            cond = np.linalg.cond(sup)
            if not np.isfinite(cond) or cond > CONDITION_LIMIT:
                raise NonInvertibleChannelError(
                    f"element {j} ({op!r}) has a singular superoperator (condition {cond:.3g})")
            out[j] = (np.linalg.inv(sup), sup.conj().T)
    return out


def _sweep_mixed(op: PauliOperator, c: Circuit, dm0: MixedState, cfg: ThreadConfig | None):
    cfg = cfg or ThreadConfig()
    ops = list(c.operations())
    n = dm0.num_qubits
    inverses = _channel_inverses(ops)

    phi = dm0.copy()
    apply_circuit(c, phi, cfg)
    psi = operator_dual_vector(op, n, phi.dtype)
    loss = float(np.real(np.vdot(psi.data, phi.data)))

    offsets = np.cumsum([0] + [g.num_active if isinstance(g, GateOp) else 0 for g in ops])
    grads = np.zeros(offsets[-1])
    for j in range(len(ops) - 1, -1, -1):
        g = ops[j]
        full = g.positions + tuple(p + n for p in g.positions)
        if isinstance(g, ChannelOp):
            inv, adj = inverses[j]
            adjoint_step(phi.data, psi.data, 2 * n, full, inv, adj, cfg)
            continue
        u = g.matrix
        inv = np.kron(u.T, u.conj().T)  # superoperator of U^dagger
        if g.num_active:
            ws = []
            for idx, on in enumerate(g.is_param):
                if on:
                    du = gate_derivative(g, idx)
                    ws.append((np.kron(u.conj(), du) + np.kron(du.conj(), u)) @ inv)
            r = adjoint_step(phi.data, psi.data, 2 * n, full, inv, inv, cfg, _support(ws))
            k = offsets[j]
            for w in ws:
                grads[k] = np.real(np.sum(w * r))
                k += 1
        else:
            adjoint_step(phi.data, psi.data, 2 * n, full, inv, inv, cfg)
    return GradientResult(loss, grads), phi


def gradient_mixed(op: PauliOperator, c: Circuit, dm0: MixedState,
                   cfg: ThreadConfig | None = None) -> GradientResult:
    """Gradient of :func:`loss_mixed`; channels must have invertible superoperators."""
    return _sweep_mixed(op, c, dm0, cfg)[0]


# ---------------------------------------------------------------------------

def finite_difference_gradient(loss: Callable[[Circuit], float], c: Circuit, h: float = 1e-5) -> np.ndarray:
    """Central differences of ``loss(c)`` over the active parameters; ``c`` is restored."""
    if h <= 0:
        raise ValueError("step must be positive")
    theta = active_parameters(c)
    grads = np.zeros_like(theta)
    try:
        for j in range(theta.size):
            shifted = theta.copy()
            shifted[j] += h
            reset_parameters(c, shifted)
            up = loss(c)
            shifted[j] -= 2 * h
            reset_parameters(c, shifted)
            down = loss(c)
            grads[j] = (up - down) / (2 * h)
    finally:
        reset_parameters(c, theta)
    return grads
