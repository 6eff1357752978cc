"""
Diagonalizing the Laplacian with a Fourier transform
====================================================

A 2M-point Fourier transform, conjugated by a small mixing unitary ``T``,
acts on the "node" half of an (m+1)-qubit register as ``-i`` times the sine
transform.  The sine transform diagonalizes the one-dimensional second
difference matrix, so the time evolution ``exp(i h^-2 L_h gamma)`` reduces to
phases.
"""

# %%
# The block structure
# -------------------

import numpy as np

from qpoisson.classical_ref import dense_expm
from qpoisson.grid import build_delta_h, build_Lh, sine_matrix
from qpoisson.hamsim import build_TM, operator_matrix, sandwich_matrix
from qpoisson.kernels import derive_params

M = 8
G = sandwich_matrix(M)
print("node block + iS, max entry:", np.abs(G[M + 1:, M + 1:] + 1j * sine_matrix(M)).max())
print("coupling to the other half :", np.abs(G[M + 1:, :M + 1]).max())
print("T is unitary               :", np.allclose(build_TM(M).conj().T @ build_TM(M), np.eye(2 * M)))

S = sine_matrix(M)
print("S L S is diagonal          :", np.round(np.diag(S @ build_Lh(M) @ S), 6))

# %%
# Simulated time evolution
# ------------------------
# The gate-level path runs the two sandwiches, writes each eigenvalue
# estimate into a scratch register, turns it into a phase and uncomputes.
# The oracle path applies the same diagonal directly.  Both are compared
# with the exact exponential.

p = derive_params(1e-2, 4, 2, nu=10)
t = 3
U_circuit = operator_matrix(p, t, "circuit")
U_oracle = operator_matrix(p, t, "oracle")
exact = dense_expm(build_delta_h(4, 2), 2 * np.pi * 2**t / p.E)
print("circuit vs oracle :", np.abs(U_circuit - U_oracle).max())
print("circuit vs exact  :", np.abs(U_circuit - exact).max())
print("unitary           :", np.allclose(U_circuit.conj().T @ U_circuit, np.eye(9)))

# %%
# Doubling ``t`` squares the operator exactly, because the phases are
# reduced modulo one period in integer arithmetic.

print("U_t^2 == U_(t+1):", np.allclose(U_circuit @ U_circuit, operator_matrix(p, t + 1, "circuit")))
