"""
Bell pairs and projective measurement
=====================================

Build a small circuit, look at the amplitudes, then sample measurements.
Qubit 1 is the least significant bit of the flat index.
"""

import numpy as np
import vqcsim as vq

###############################################################################
# A Hadamard followed by a CNOT entangles two qubits.

bell = vq.Circuit([vq.standard_gate("H", 1), vq.standard_gate("CNOT", (1, 2))])
state = bell * vq.new_pure_state(2)
print(np.round(state.data, 4))

###############################################################################
# Measuring qubit 1 collapses qubit 2 as well.

rng = np.random.default_rng(0)
counts = {(0, 0): 0, (1, 1): 0, (0, 1): 0, (1, 0): 0}
for _ in range(2000):
    s = bell * vq.new_pure_state(2)
    a = vq.measure(s, 1, rng).outcome
    b = vq.measure(s, 2, rng).outcome
    counts[(a, b)] += 1
print(counts)

###############################################################################
# The same circuit on a density matrix, followed by some dephasing.

rho = bell * vq.new_mixed_state(2)
vq.apply_circuit(vq.Circuit([vq.phase_damping(1, 0.5)]), rho)
print(np.round(rho.matrix.real, 4))
print("outcome probabilities of qubit 2:", vq.outcome_probabilities(rho, 2))
