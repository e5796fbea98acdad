"""Independent reference implementations used only by the tests.

Everything here works on dense numpy matrices and never touches the kernels.
"""
from __future__ import annotations

import numpy as np
from scipy.stats import unitary_group

from vqcsim.gates import (PARAMETRIC_KINDS, STANDARD_KINDS, amplitude_damping, depolarizing, make_gate,
                          parametric_gate, phase_damping, standard_gate)
from vqcsim.circuit import Circuit
from vqcsim.gates import _FIXED


def permute_bits(n: int, order) -> np.ndarray:
    """Permutation matrix sending bit ``k`` of the input index to bit ``order[k]``."""
    dim = 1 << n
    perm = np.zeros((dim, dim))
    for i in range(dim):
        j = 0
        for k in range(n):
            if i >> k & 1:
                j |= 1 << order[k]
        perm[j, i] = 1
    return perm


def embed(matrix: np.ndarray, positions, n: int) -> np.ndarray:
    """Full ``2**n`` matrix of a gate on ``positions`` (1-based; first position is the low local bit)."""
    m = len(positions)
    low = np.kron(np.eye(1 << (n - m)), matrix)  # acts on bits 0..m-1
    rest = [b for b in range(n) if b not in {p - 1 for p in positions}]
    order = [p - 1 for p in positions] + rest
    perm = permute_bits(n, order)
    return perm @ low @ perm.T


def circuit_unitary(c: Circuit, n: int) -> np.ndarray:
    u = np.eye(1 << n, dtype=complex)
    for op in c.operations():
        u = embed(op.matrix, op.positions, n) @ u
    return u


def kraus_evolve(c: Circuit, rho: np.ndarray, n: int) -> np.ndarray:
    """Apply gates as ``U rho U^dagger`` and channels as ``sum K rho K^dagger``."""
    for op in c.operations():
        ks = op.kraus if hasattr(op, "kraus") else (op.matrix,)
        full = [embed(k, op.positions, n) for k in ks]
        rho = sum(k @ rho @ k.conj().T for k in full)
    return rho


def bit_reverse_matrix(matrix: np.ndarray, m: int) -> np.ndarray:
    rev = permute_bits(m, list(range(m - 1, -1, -1)))
    return rev @ matrix @ rev.T


def random_state(rng, n: int) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_density(rng, n: int, rank: int = 3) -> np.ndarray:
    a = rng.normal(size=(1 << n, rank)) + 1j * rng.normal(size=(1 << n, rank))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


def random_unitary(rng, m: int) -> np.ndarray:
    return unitary_group.rvs(1 << m, random_state=rng)


_ARITY = {"Rx": 1, "Ry": 1, "Rz": 1, "CRx": 2, "CRy": 2, "CRz": 2, "FSIM": 2}


def random_positions(rng, n: int, m: int) -> tuple[int, ...]:
    return tuple(int(p) + 1 for p in rng.choice(n, size=m, replace=False))


def random_gate(rng, n: int, max_arity: int = 3, active: bool = False):
    """Named fixed, named parametric or Generic gate on 1 to ``max_arity`` qubits."""
    pick = rng.random()
    if pick < 0.35:
        kinds = [k for k in STANDARD_KINDS if _fixed_arity(k) <= min(max_arity, n)]
        kind = kinds[rng.integers(len(kinds))]
        return standard_gate(kind, random_positions(rng, n, _fixed_arity(kind)))
    if pick < 0.7:
        kinds = [k for k in PARAMETRIC_KINDS if _ARITY[k] <= min(max_arity, n)]
        kind = kinds[rng.integers(len(kinds))]
        count = 5 if kind == "FSIM" else 1
        params = rng.uniform(-np.pi, np.pi, size=count)
        flags = rng.random(count) < 0.7 if active else False
        return parametric_gate(kind, random_positions(rng, n, _ARITY[kind]), params, flags)
    m = int(rng.integers(1, min(max_arity, n) + 1))
    return make_gate(random_positions(rng, n, m), random_unitary(rng, m))


def _fixed_arity(kind: str) -> int:
    return _FIXED[kind][0]


def random_circuit(rng, n: int, length: int, max_arity: int = 3, active: bool = False) -> Circuit:
    return Circuit(random_gate(rng, n, max_arity, active) for _ in range(length))


def random_channel(rng, n: int):
    pos = int(rng.integers(1, n + 1))
    kind = rng.integers(3)
    x = float(rng.uniform(0, 1))
    return (amplitude_damping, phase_damping, depolarizing)[kind](pos, x)


def random_noisy_circuit(rng, n: int, length: int) -> Circuit:
    c = Circuit()
    for _ in range(length):
        c.append(random_gate(rng, n, 2))
        if rng.random() < 0.5:
            c.append(random_channel(rng, n))
    return c
