import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vqcsim import statespace as ss
from vqcsim.errors import DegenerateStateError, DomainError, ShapeError, SizeError, ValidityError


def test_new_pure_state():
    assert np.array_equal(ss.new_pure_state(1).data, [1, 0])
    assert np.array_equal(ss.new_pure_state(2).data, [1, 0, 0, 0])
    with pytest.raises(SizeError):
        ss.new_pure_state(0)


def test_from_amplitudes():
    s = ss.pure_state_from_amplitudes([0, 1, 0, 0])
    assert s.num_qubits == 2
    assert s.data[ss.basis_index([1, 0])] == 1
    assert np.array_equal(ss.pure_state_from_amplitudes([1, 0]).data, [1, 0])
    with pytest.raises(ShapeError):
        ss.pure_state_from_amplitudes([1, 1, 1])
    with pytest.raises(DegenerateStateError):
        ss.pure_state_from_amplitudes([0, 0])
    with pytest.raises(ValidityError):
        ss.pure_state_from_amplitudes([1, 1])


def test_from_amplitudes_copies_input():
    src = np.array([1, 0], dtype=complex)
    s = ss.pure_state_from_amplitudes(src)
    s.data[0] = 0
    assert src[0] == 1


def test_new_mixed_state():
    assert np.array_equal(ss.new_mixed_state(1).matrix, np.diag([1, 0]))
    m = ss.new_mixed_state(2).matrix
    assert m[0, 0] == 1 and np.count_nonzero(m) == 1
    with pytest.raises(SizeError):
        ss.new_mixed_state(-1)


def test_mixed_from_entries():
    flat = np.zeros(16)
    flat[-1] = 1
    dm = ss.mixed_state_from_entries(flat)
    assert dm.num_qubits == 2
    assert dm.matrix[3, 3] == 1
    half = ss.mixed_state_from_entries(np.diag([0.5, 0.5]))
    assert np.allclose(half.matrix, np.eye(2) / 2)
    with pytest.raises(ValidityError):
        ss.mixed_state_from_entries(np.eye(2))
    with pytest.raises(ValidityError):
        ss.mixed_state_from_entries([[0.5, 1], [0, 0.5]])
    with pytest.raises(ShapeError):
        ss.mixed_state_from_entries(np.ones(8) / 8)


def test_purify_view():
    assert np.array_equal(ss.purify_index_view(ss.new_mixed_state(1)).data, [1, 0, 0, 0])
    half = ss.mixed_state_from_entries(np.diag([0.5, 0.5]))
    assert np.array_equal(ss.purify_index_view(half).data, [0.5, 0, 0, 0.5])
    rho = np.zeros((4, 4))
    rho[3, 3] = 1
    pseudo = ss.purify_index_view(ss.mixed_state_from_entries(rho))
    assert pseudo.num_qubits == 4 and np.flatnonzero(pseudo.data).tolist() == [15]


def test_purify_round_trip(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    dm = ss.mixed_state_from_entries(rho / np.trace(rho))
    back = ss.mixed_from_pseudo_state(ss.purify_index_view(dm))
    assert np.array_equal(back.data, dm.data) and back.num_qubits == 2


def test_basis_index():
    assert ss.basis_index([1, 0]) == 1
    assert ss.basis_index([0, 0, 0]) == 0
    assert ss.basis_index([1, 1]) == 3
    with pytest.raises(DomainError):
        ss.basis_index([0, 2])


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_basis_index_bijection(n):
    seen = {ss.basis_index(bits) for bits in itertools.product((0, 1), repeat=n)}
    assert seen == set(range(1 << n))


def test_norm_and_trace():
    assert ss.norm(ss.new_pure_state(3)) == pytest.approx(1)
    assert ss.trace(ss.mixed_state_from_entries(np.diag([0.5, 0.5]))) == pytest.approx(1)
    assert ss.norm(ss.unchecked_pure_state([2, 0])) == pytest.approx(2)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_trace_matches_diagonal(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(1 << n, 2)) + 1j * rng.normal(size=(1 << n, 2))
    rho = a @ a.conj().T
    dm = ss.mixed_state_from_entries(rho / np.trace(rho))
    tr = ss.trace(dm)
    assert abs(tr.imag) <= 1e-12
    diag = sum(dm.data[ss.basis_index(b) * (1 << n) + ss.basis_index(b)]
               for b in itertools.product((0, 1), repeat=n))
    assert abs(tr - diag) <= 1e-12


def test_single_precision():
    s = ss.new_pure_state(2, np.complex64)
    assert s.dtype == np.complex64
    with pytest.raises(DomainError):
        ss.new_pure_state(2, np.float64)


def test_dump_round_trip(tmp_path, rng):
    v = rng.normal(size=8) + 1j * rng.normal(size=8)
    s = ss.pure_state_from_amplitudes(v / np.linalg.norm(v))
    path = tmp_path / "s.bin"
    ss.write_state(path, s)
    raw = path.read_bytes()
    assert raw[:4] == b"VQCS" and len(raw) == 13 + 8 * 16
    back = ss.read_state(path)
    assert np.array_equal(back.data, s.data)
    dm = ss.mixed_state_from_entries(np.diag([0.25, 0.75]))
    ss.write_state(path, dm)
    back = ss.read_state(path, mixed=True)
    assert back.num_qubits == 1 and np.array_equal(back.data, dm.data)


def test_dump_rejects_garbage(tmp_path):
    path = tmp_path / "bad.bin"
    path.write_bytes(b"XXXX" + bytes(20))
    with pytest.raises(ValidityError):
        ss.read_state(path)
    path.write_bytes(b"VQ")
    with pytest.raises(ShapeError):
        ss.read_state(path)


def test_allocation_tracker():
    with ss.track_allocations() as t:
        a = ss.new_pure_state(3)
        b = a.copy()
        del a, b
    assert t.peak == 2 and t.live == 0 and t.total == 2
