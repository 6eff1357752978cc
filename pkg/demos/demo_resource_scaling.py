"""
Operation counts
================

The resource model tallies gates stage by stage.  Hamiltonian simulation
costs grow linearly with the dimension, everything grows polynomially in
``log(1/eps)``, and the conditional rotation is independent of ``d``.
"""

# %%

from qpoisson.solver import parameters, resource_estimate

eps, M = 2.0**-40, 2**20
prev = prev_d = None
for d in (1, 8, 64, 512, 4096, 32768):
    ops = resource_estimate(parameters(eps, M, d))["operations"]
    ratio = "" if prev is None else f"  x{ops / prev:.3f} for x{d // prev_d}"
    print(f"d={d:6d}  operations={ops:.3e}{ratio}")
    prev, prev_d = ops, d

# %%
# Accuracy sweep at fixed grid and dimension.

for k in (10, 20, 40, 80):
    r = resource_estimate(parameters(2.0**-k, 8, 1))
    print(f"eps=2^-{k:<3d} qubits={r['qubits']:6d}  operations={r['operations']:.3e}  "
          + "  ".join(f"{name}={v:.1e}" for name, v in r["breakdown"].items()))
