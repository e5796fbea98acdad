"""Circuit container, application, parameter handling, fusion and measurement."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence, Union

import numpy as np

from . import kernels
from .errors import DegenerateStateError, ShapeError, UnsupportedError
from .gates import ChannelOp, GateOp, make_gate
from .kernels import ThreadConfig
from .statespace import MixedState, PureState

Element = Union[GateOp, ChannelOp, "Circuit"]


class Circuit:
    """Ordered list of gates, channels and nested circuits; the first element acts first."""

    def __init__(self, elements: Iterable[Element] = ()) -> None:
        self.elements: list[Element] = []
        self.extend(elements)

    def append(self, element: Element) -> None:
        if not isinstance(element, (GateOp, ChannelOp, Circuit)):
            raise TypeError(f"cannot add {type(element).__name__} to a circuit")
        self.elements.append(element)

    def extend(self, elements: Iterable[Element]) -> None:
        for e in elements:
            self.append(e)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __getitem__(self, i):
        return self.elements[i]

    def __mul__(self, state):
        return apply(self, state)

    def __repr__(self) -> str:
        return f"Circuit({len(self.elements)} elements)"

    def operations(self) -> Iterator[GateOp | ChannelOp]:
        """Leaf gates and channels, depth first in application order."""
        for e in self.elements:
            if isinstance(e, Circuit):
                yield from e.operations()
            else:
                yield e

    @property
    def is_noiseless(self) -> bool:
        return not any(isinstance(op, ChannelOp) for op in self.operations())

    @property
    def max_position(self) -> int:
        return max((max(op.positions) for op in self.operations()), default=0)


def _apply_op(op, state, cfg: ThreadConfig | None) -> None:
    if isinstance(state, PureState):
        if isinstance(op, ChannelOp):
            raise TypeError("channels need a MixedState; got a PureState")
        kernels.apply_gate_fast(state, op, cfg)
    elif isinstance(state, MixedState):
        if isinstance(op, ChannelOp):
            kernels.apply_channel(state, op, cfg)
        else:
            kernels.apply_gate_mixed(state, op, cfg)
    else:
        raise TypeError(f"expected a PureState or MixedState, got {type(state).__name__}")


def apply_circuit(c: Circuit, state: PureState | MixedState, cfg: ThreadConfig | None = None) -> None:
    """Apply ``c`` to ``state`` in place."""
    if isinstance(state, PureState) and not c.is_noiseless:
        raise TypeError("circuit contains channels; simulate it on a MixedState")
    cfg = cfg or ThreadConfig()
    for op in c.operations():
        _apply_op(op, state, cfg)


def apply(c: Circuit, state: PureState | MixedState, cfg: ThreadConfig | None = None):
    """Out-of-place :func:`apply_circuit`; ``state`` is left untouched."""
    out = state.copy()
    apply_circuit(c, out, cfg)
    return out


# ---------------------------------------------------------------------------
# Parameters

def active_parameters(c: Circuit) -> np.ndarray:
    vals = [p for op in c.operations() if isinstance(op, GateOp)
            for p, on in zip(op.params, op.is_param) if on]
    return np.array(vals, dtype=float)


def reset_parameters(c: Circuit, values: Sequence[float]) -> None:
    """Replace active parameters in traversal order, rebuilding the affected gates."""
    values = np.asarray(values, dtype=float).ravel()
    expected = len(active_parameters(c))
    if values.size != expected:
        raise ShapeError(f"circuit has {expected} active parameters, got {values.size}")
    _reset(c, values, 0)


def _reset(c: Circuit, values: np.ndarray, k: int) -> int:
    for i, e in enumerate(c.elements):
        if isinstance(e, Circuit):
            k = _reset(e, values, k)
        elif isinstance(e, GateOp) and e.num_active:
            params = list(e.params)
            for j, on in enumerate(e.is_param):
                if on:
                    params[j] = values[k]
                    k += 1
            c.elements[i] = e.with_params(params)
    return k


# ---------------------------------------------------------------------------
# Fusion

def _embed_single(g: GateOp, host: GateOp) -> np.ndarray:
    """Matrix of single-qubit ``g`` in the local basis of two-qubit ``host``."""
    if host.positions.index(g.positions[0]) == 0:
        return np.kron(np.eye(2), g.matrix)
    return np.kron(g.matrix, np.eye(2))


def fuse_gates(c: Circuit) -> Circuit:
    """Absorb single-qubit gates into a neighbouring two-qubit gate on the same wire.

    A single-qubit gate joins the next operation on its qubit when that is a
    two-qubit gate, otherwise the previous one when that is. Every output gate is
    a non-parametric generic gate; the circuit unitary is unchanged.
    """
    if not c.is_noiseless:
        raise UnsupportedError("fuse_gates only handles noiseless circuits")
    ops: list[GateOp | None] = list(c.operations())
    mats = [op.matrix for op in ops]

    def neighbour(k: int, step: int) -> int | None:
        q = ops[k].positions[0]
        j = k + step
        while 0 <= j < len(ops):
            if ops[j] is not None and q in ops[j].positions:
                return j
            j += step
        return None

    # right-to-left: absorb into the following two-qubit gate, so runs collapse
    for k in range(len(ops) - 1, -1, -1):
        if ops[k] is None or ops[k].num_qubits != 1:
            continue
        j = neighbour(k, +1)
        if j is not None and ops[j].num_qubits == 2:
            mats[j] = mats[j] @ _embed_single(ops[k], ops[j])
            ops[k] = None
    # left-to-right: whatever is left joins the preceding two-qubit gate
    for k in range(len(ops)):
        if ops[k] is None or ops[k].num_qubits != 1:
            continue
        j = neighbour(k, -1)
        if j is not None and ops[j].num_qubits == 2:
            mats[j] = _embed_single(ops[k], ops[j]) @ mats[j]
            ops[k] = None
    return Circuit(make_gate(op.positions, mat) for op, mat in zip(ops, mats) if op is not None)


# ---------------------------------------------------------------------------
# Measurement

@dataclass(frozen=True)
class MeasurementOutcome:
    outcome: int
    probability: float

    def __iter__(self):
        return iter((self.outcome, self.probability))


def _pure_split(state: PureState, i: int) -> np.ndarray:
    # flat index = low + 2**(i-1) * bit + 2**i * high
    return state.data.reshape(-1, 2, 1 << (i - 1))


def _mixed_diag_split(dm: MixedState, i: int) -> np.ndarray:
    d = 1 << dm.num_qubits
    return np.real(dm.data[:: d + 1]).reshape(-1, 2, 1 << (i - 1))


def _check_qubit(state, i: int) -> None:
    if not 1 <= i <= state.num_qubits:
        raise kernels.QubitIndexError(f"qubit {i} outside a {state.num_qubits}-qubit state")


def outcome_probabilities(state: PureState | MixedState, i: int) -> tuple[float, float]:
    """``(p0, p1)`` for measuring qubit ``i``, clamped to [0, 1]."""
    _check_qubit(state, i)
    if isinstance(state, MixedState):
        diag = _mixed_diag_split(state, i)
        p0, p1 = float(diag[:, 0].sum()), float(diag[:, 1].sum())
    else:
        probs = np.abs(_pure_split(state, i)) ** 2
        p0, p1 = float(probs[:, 0].sum()), float(probs[:, 1].sum())
    return min(max(p0, 0.0), 1.0), min(max(p1, 0.0), 1.0)


def measure(state: PureState | MixedState, i: int,
            rng: np.random.Generator | None = None) -> MeasurementOutcome:
    """Projectively measure qubit ``i``, collapsing ``state`` in place."""
    p0, p1 = outcome_probabilities(state, i)
    if p0 + p1 < 1e-300:
        raise DegenerateStateError("state has no weight on either outcome")
    rng = rng if rng is not None else np.random.default_rng()
    total = p0 + p1
    outcome = int(rng.random() * total < p1)
    prob = (p1 if outcome else p0) / total
    if isinstance(state, MixedState):
        n = state.num_qubits
        view = state.data.reshape((2,) * (2 * n), order="F")
        idx = [slice(None)] * (2 * n)
        idx[i - 1] = 1 - outcome
        view[tuple(idx)] = 0
        idx[i - 1] = slice(None)
        idx[i - 1 + n] = 1 - outcome
        view[tuple(idx)] = 0
        state.data /= prob * total
    else:
        split = _pure_split(state, i)
        split[:, 1 - outcome, :] = 0
        state.data /= np.sqrt(prob * total)
    return MeasurementOutcome(outcome, prob)
