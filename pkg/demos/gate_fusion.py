"""
Absorbing single-qubit gates into two-qubit gates
=================================================

Every single-qubit gate next to a two-qubit gate on the same wire is folded
into it. Fewer, denser gates mean fewer passes over the state.
"""

import time

import numpy as np
import vqcsim as vq
from vqcsim.bench import generate_rqc

n = 18
circuit = generate_rqc(n, depth=6, seed=2)
fused = vq.fuse_gates(circuit)
print(f"{len(circuit)} gates before fusion, {len(fused)} after")


def timed(c):
    s = vq.new_pure_state(n)
    vq.apply_circuit(c, s)  # warm up the compiled kernels
    s = vq.new_pure_state(n)
    t0 = time.perf_counter()
    vq.apply_circuit(c, s)
    return s, time.perf_counter() - t0


a, ta = timed(circuit)
b, tb = timed(fused)
print(f"original {ta * 1e3:.1f} ms, fused {tb * 1e3:.1f} ms")
print("max amplitude difference:", np.max(np.abs(a.data - b.data)))
