import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vqcsim.autodiff import (_sweep_pure, finite_difference_gradient, gradient_mixed, gradient_pure,
                             loss_mixed, loss_pure)
from vqcsim.bench import generate_noisy_rqc, generate_rqc
from vqcsim.circuit import Circuit, active_parameters, reset_parameters
from vqcsim.errors import NonInvertibleChannelError, QubitIndexError, ShapeError
from vqcsim.gates import (amplitude_damping, depolarizing, make_gate, parametric_gate, phase_damping,
                          standard_gate)
from vqcsim.kernels import ThreadConfig
from vqcsim.observables import PauliOperator, PauliTerm, heisenberg_1d
from vqcsim.statespace import (mixed_state_from_entries, new_mixed_state, new_pure_state,
                               pure_state_from_amplitudes, track_allocations)

from oracles import random_circuit, random_density, random_state, random_unitary

Z1 = PauliOperator([PauliTerm({1: "z"})])


def rx_circuit(theta):
    return Circuit([parametric_gate("Rx", 1, theta, True)])


def test_loss_pure_examples():
    s0 = new_pure_state(1)
    for theta in (0.0, 0.4, np.pi / 2):
        assert loss_pure(Z1, rx_circuit(theta), s0) == pytest.approx(np.cos(theta), abs=1e-14)
    assert loss_pure(Z1, Circuit(), s0) == 1
    assert np.array_equal(s0.data, [1, 0])
    with pytest.raises(TypeError):
        loss_pure(Z1, Circuit([depolarizing(1, 0.1)]), s0)


def test_gradient_pure_examples():
    s0 = new_pure_state(1)
    r = gradient_pure(Z1, rx_circuit(np.pi / 2), s0)
    assert r.loss == pytest.approx(0, abs=1e-14)
    assert r.grads == pytest.approx([-1])
    r = gradient_pure(Z1, Circuit([parametric_gate("Rx", 1, 0.3), standard_gate("H", (1,))]), s0)
    assert r.grads.size == 0
    fd = finite_difference_gradient(lambda c: loss_pure(Z1, c, s0), rx_circuit(np.pi / 2))
    assert fd == pytest.approx([-1], abs=1e-9)
    assert finite_difference_gradient(lambda c: 0.0, Circuit()).size == 0


def test_loss_mixed_examples():
    dm = new_mixed_state(1)
    assert loss_mixed(Z1, Circuit([standard_gate("X", (1,))]), dm) == pytest.approx(-1)
    assert loss_mixed(Z1, Circuit(), dm) == 1
    with pytest.raises(QubitIndexError):
        loss_mixed(Z1, Circuit([standard_gate("X", (2,))]), dm)


def test_gradient_mixed_depolarized_rotation():
    dm = new_mixed_state(1)
    for theta in (0.7, np.pi / 2):
        c = Circuit([parametric_gate("Rx", 1, theta, True), depolarizing(1, 0.3)])
        r = gradient_mixed(Z1, c, dm)
        assert r.grads == pytest.approx([-0.7 * np.sin(theta)], abs=1e-12)
        fd = finite_difference_gradient(lambda cc: loss_mixed(Z1, cc, dm), c)
        assert np.max(np.abs(r.grads - fd)) <= 1e-6


def test_gradient_mixed_singular_channel():
    c = Circuit([parametric_gate("Rx", 1, 0.2, True), amplitude_damping(1, 1.0)])
    with pytest.raises(NonInvertibleChannelError, match="element 1"):
        gradient_mixed(Z1, c, new_mixed_state(1))


def test_finite_difference_restores_parameters():
    c = rx_circuit(0.25)
    finite_difference_gradient(lambda cc: loss_pure(Z1, cc, new_pure_state(1)), c)
    assert active_parameters(c).tolist() == [0.25]
    with pytest.raises(ValueError):
        finite_difference_gradient(lambda cc: 0.0, c, h=0)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(2, 6), depth=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_gradient_pure_layered_circuits(n, depth, seed):
    c = generate_rqc(n, depth, seed)
    op, s0 = heisenberg_1d(n), new_pure_state(n)
    r = gradient_pure(op, c, s0)
    fd = finite_difference_gradient(lambda cc: loss_pure(op, cc, s0), c)
    assert r.loss == pytest.approx(loss_pure(op, c, s0), abs=1e-12)
    assert np.max(np.abs(r.grads - fd)) <= 1e-6


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 5), seed=st.integers(0, 2**32 - 1))
def test_gradient_pure_random_gates(n, seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n, 12, max_arity=3, active=True)
    op = PauliOperator(PauliTerm({q: "xyz"[rng.integers(3)]}, rng.normal()) for q in range(1, n + 1))
    s0 = pure_state_from_amplitudes(random_state(rng, n))
    r = gradient_pure(op, c, s0)
    assert r.grads.size == active_parameters(c).size
    fd = finite_difference_gradient(lambda cc: loss_pure(op, cc, s0), c)
    assert np.max(np.abs(r.grads - fd), initial=0) <= 1e-6


def test_gradient_order_matches_parameters():
    # each gate has its own rotation axis, so swapping two entries changes the answer
    c = Circuit([parametric_gate("Ry", 1, 0.3, True), parametric_gate("FSIM", (1, 2), (0.4, 0.5, 0.1, 0.2, 0.3),
                                                                        (True, False, True, False, True)),
                 parametric_gate("Rz", 2, 0.9, False), parametric_gate("CRx", (2, 1), 1.2, True)])
    op, s0 = heisenberg_1d(2), pure_state_from_amplitudes(random_state(np.random.default_rng(0), 2))
    r = gradient_pure(op, c, s0)
    fd = finite_difference_gradient(lambda cc: loss_pure(op, cc, s0), c)
    assert r.grads.size == 5
    assert np.max(np.abs(r.grads - fd)) <= 1e-8


def test_reversibility():
    n = 6
    c = generate_rqc(n, 5, seed=3)
    s0 = pure_state_from_amplitudes(random_state(np.random.default_rng(1), n))
    _, phi = _sweep_pure(heisenberg_1d(n), c, s0, None)
    assert np.max(np.abs(phi.data - s0.data)) <= 1e-8


def test_two_live_states():
    n = 10
    c = generate_rqc(n, 3)
    s0 = new_pure_state(n)
    op = heisenberg_1d(n)
    with track_allocations() as t:
        gradient_pure(op, c, s0)
    assert t.peak <= 2
    assert t.live == 0


def test_threads_do_not_change_gradient():
    n = 12
    c = generate_rqc(n, 2)
    op, s0 = heisenberg_1d(n), new_pure_state(n)
    base = gradient_pure(op, c, s0, ThreadConfig(1)).grads
    for t in (2, 4, 8):
        g = gradient_pure(op, c, s0, ThreadConfig(t, min_work_per_thread=1)).grads
        assert np.max(np.abs(g - base)) <= 1e-12


@settings(max_examples=15, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_gradient_mixed_random(n, seed):
    rng = np.random.default_rng(seed)
    c = Circuit()
    for _ in range(4):
        c.extend(random_circuit(rng, n, 2, max_arity=2, active=True))
        q = int(rng.integers(1, n + 1))
        kind = rng.integers(3)
        x = float(rng.uniform(0.05, 0.6))
        c.append((amplitude_damping, phase_damping, depolarizing)[kind](q, x))
    op = PauliOperator(PauliTerm({q: "xyz"[rng.integers(3)]}, rng.normal()) for q in range(1, n + 1))
    dm0 = mixed_state_from_entries(random_density(rng, n))
    r = gradient_mixed(op, c, dm0)
    fd = finite_difference_gradient(lambda cc: loss_mixed(op, cc, dm0), c)
    assert r.loss == pytest.approx(loss_mixed(op, c, dm0), abs=1e-12)
    assert np.max(np.abs(r.grads - fd), initial=0) <= 1e-6


def test_gradient_mixed_generic_channel(rng):
    from vqcsim.gates import make_channel
    u = random_unitary(rng, 2)
    kraus = [np.sqrt(0.8) * np.eye(4), np.sqrt(0.2) * u]
    c = Circuit([parametric_gate("Ry", 2, 0.4, True), make_channel((2, 1), kraus),
                 parametric_gate("CRy", (1, 2), 0.7, True)])
    op, dm0 = heisenberg_1d(2), mixed_state_from_entries(random_density(rng, 2))
    fd = finite_difference_gradient(lambda cc: loss_mixed(op, cc, dm0), c)
    assert np.max(np.abs(gradient_mixed(op, c, dm0).grads - fd)) <= 1e-6


def test_noisy_layered_circuit():
    n = 3
    c = generate_noisy_rqc(n, 2, seed=5, p=0.05)
    op, dm0 = heisenberg_1d(n), new_mixed_state(n)
    fd = finite_difference_gradient(lambda cc: loss_mixed(op, cc, dm0), c)
    assert np.max(np.abs(gradient_mixed(op, c, dm0).grads - fd)) <= 1e-6


@settings(max_examples=15, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**32 - 1))
def test_mixed_equals_pure_without_channels(n, seed):
    rng = np.random.default_rng(seed)
    c = random_circuit(rng, n, 8, max_arity=2, active=True)
    op = heisenberg_1d(n)
    v = random_state(rng, n)
    pure = gradient_pure(op, c, pure_state_from_amplitudes(v))
    mixed = gradient_mixed(op, c, mixed_state_from_entries(np.outer(v, v.conj())))
    assert abs(pure.loss - mixed.loss) <= 1e-8
    assert np.max(np.abs(pure.grads - mixed.grads), initial=0) <= 1e-8


def test_reset_between_gradients():
    c = generate_rqc(3, 2)
    op, s0 = heisenberg_1d(3), new_pure_state(3)
    theta = active_parameters(c) + 0.1
    reset_parameters(c, theta)
    fd = finite_difference_gradient(lambda cc: loss_pure(op, cc, s0), c)
    assert np.max(np.abs(gradient_pure(op, c, s0).grads - fd)) <= 1e-6
    with pytest.raises(ShapeError):
        reset_parameters(c, theta[:-1])


def test_inactive_generic_gates_are_skipped(rng):
    c = Circuit([make_gate((1, 2), random_unitary(rng, 2)), parametric_gate("Rx", 2, 0.3, True)])
    r = gradient_pure(heisenberg_1d(2), c, new_pure_state(2))
    assert r.grads.shape == (1,)
