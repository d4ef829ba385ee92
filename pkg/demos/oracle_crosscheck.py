"""
Closed-form propagator against brute force
==========================================

The interaction only couples ``|1; n>`` to the states ``|j+1; n + e_j>``,
so the evolution splits into m x m blocks that have a closed form. Here
we compare the assembled block propagator with a dense eigendecomposition
of the truncated Hamiltonian, then look at one block in detail.
"""

import numpy as np

from mlentangle.dynamics import SystemParams, assemble_unitary, block_unitary, evolve_ensemble, expm_oracle
from mlentangle.entanglement import dense_entanglement_point, entanglement_point
from mlentangle.fock import ModeSpec, product_state

rng = np.random.default_rng(0)

###############################################################################
# Random instances: detuning, couplings, grid and time all drawn at random.
# The deviation is at roundoff level.

for _ in range(5):
    m = int(rng.integers(2, 5))
    params = SystemParams(m, rng.uniform(-2, 2), rng.uniform(0.2, 2.0, m - 1))
    dims = tuple(int(d) for d in rng.integers(2, 4, m - 1))
    t = rng.uniform(0, 10)
    u = assemble_unitary(params, dims, t)
    ref = expm_oracle(params, dims, t)
    print(f"m={m} dims={dims} delta={params.delta:+.2f} t={t:5.2f}: max |U - U_ref| = {np.abs(u - ref).max():.1e}")

###############################################################################
# One block of a three-level atom at resonance. At ``t = pi / (2 sqrt 2)``
# the upper level is fully emptied into the two lower ones.

params = SystemParams(3)
t_rabi = np.pi / (2 * np.sqrt(2))
np.set_printoptions(precision=4, suppress=True)
print("block (0, 0) at the transfer time:\n", block_unitary(params, (0, 0), t_rabi))

###############################################################################
# The same instant seen through the entropies: the atom ends up evenly split
# between two levels, each tied to a different photon, so ``I = 2 ln 2``.

field = product_state([ModeSpec.fock(0)] * 2)
fast = entanglement_point(evolve_ensemble((1, 0, 0), field, params, t_rabi))
dense = dense_entanglement_point((1, 0, 0), field, params, t_rabi)
print(f"I from the block path {fast.i_mutual:.12f}")
print(f"I from the dense path {dense.i_mutual:.12f}")
print(f"2 ln 2                {2 * np.log(2):.12f}")
