"""
Variational ground state of a Heisenberg chain
==============================================

Minimize the energy of a four-site chain with plain gradient descent, using
reverse-mode gradients that keep only two state vectors alive.
"""

import numpy as np
import vqcsim as vq
from vqcsim.bench import generate_rqc

L = 4
H = vq.heisenberg_1d(L, hz=1.0, J=1.0)
exact = np.linalg.eigvalsh(H.matrix(L))[0]
print(f"exact ground energy: {exact:.6f}")

###############################################################################
# Ansatz: layers of a CNOT ladder followed by Ry and Rx on every qubit.

circuit = generate_rqc(L, depth=4, seed=1)
theta = 0.1 * vq.active_parameters(circuit)
vq.reset_parameters(circuit, theta)
s0 = vq.new_pure_state(L)

step = 0.05
for it in range(301):
    res = vq.gradient_pure(H, circuit, s0)
    theta = theta - step * res.grads
    vq.reset_parameters(circuit, theta)
    if it % 50 == 0:
        print(f"iteration {it:3d}  energy {res.loss: .6f}")

###############################################################################
# Spot-check the last gradient against central differences.

fd = vq.finite_difference_gradient(lambda c: vq.loss_pure(H, c, s0), circuit)
res = vq.gradient_pure(H, circuit, s0)
print("max |adjoint - finite difference| =", np.max(np.abs(res.grads - fd)))
