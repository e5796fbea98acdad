"""
Training under depolarizing noise
=================================

The same ansatz with a depolarizing channel on every qubit after each layer.
Gradients come from the vectorized density matrix, so they include the noise.
"""

import numpy as np
import vqcsim as vq
from vqcsim.bench import generate_noisy_rqc

L = 3
H = vq.heisenberg_1d(L)
rho0 = vq.new_mixed_state(L)

for p in (0.0, 0.02, 0.1):
    circuit = generate_noisy_rqc(L, depth=3, seed=4, p=p)
    theta = 0.1 * vq.active_parameters(circuit)
    vq.reset_parameters(circuit, theta)
    for _ in range(150):
        res = vq.gradient_mixed(H, circuit, rho0)
        theta = theta - 0.05 * res.grads
        vq.reset_parameters(circuit, theta)
    print(f"p = {p:4.2f}: trained energy {vq.loss_mixed(H, circuit, rho0): .5f}")

print(f"exact ground energy: {np.linalg.eigvalsh(H.matrix(L))[0]: .5f}")

###############################################################################
# Amplitude damping with gamma = 1 has no inverse, so its gradient is refused.

bad = vq.Circuit([vq.parametric_gate("Rx", 1, 0.3, True), vq.amplitude_damping(1, 1.0)])
try:
    vq.gradient_mixed(H, bad, rho0)
except ValueError as exc:
    print("refused:", exc)
