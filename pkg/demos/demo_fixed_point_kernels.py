"""
Fixed-point kernels
===================

The solver never evaluates a floating-point sine or reciprocal.  Every
number it manipulates is a fixed-point binary fraction, and every function
is a short sequence of truncated additions and multiplications.  This script
walks through the three kernels and compares each against a 60-digit
reference.
"""

# %%
# Eigenvalues by repeated squaring
# --------------------------------
# ``exp(i x)`` is approximated by squaring ``W = 1 + i y - y^2`` (with
# ``y = x / r``) ``log2 r`` times.  Every intermediate stays strictly inside the
# unit disk, so no squaring can overflow.

from qpoisson.classical_ref import hp, hp_ctx
from qpoisson.grid import analytic_eigenvalue
from qpoisson.kernels import (default_s, derive_params, eigen_ell, esa_angle, esa_sine,
                              esa_w_power, newton_inverse, bisect_arcsin)
from qpoisson.fixedpoint import FixedPoint, fx_from_int

M, nu = 8, 10
s = default_s(nu, M)
trace = []
esa_w_power(esa_angle(1, M, s), nu, s, trace)
print(f"{len(trace)} iterates, largest |W|^2 = {max(float(w.modulus_squared()) for w in trace):.12f}")

for j in range(1, M):
    sine = esa_sine(esa_angle(j, M, s), nu, s)
    err = abs(hp(sine) - hp_ctx.sin(hp_ctx.pi * j / (2 * M)))
    print(f"j={j}  sin estimate {float(sine):.8f}  error {float(err):.2e}  (allowed {2.0 ** -(nu - 1):.2e})")

# %%
# The grid eigenvalues follow by squaring the sine and shifting by ``4 M^2``.

for j in range(1, M):
    ell = eigen_ell(j, M, 12)
    print(f"j={j}  ell={float(ell):9.4f}  exact={analytic_eigenvalue(j, M):9.4f}")

# %%
# Newton reciprocal
# -----------------
# Starting from the power of two just above ``v``, each step doubles the
# number of correct bits until truncation to ``b`` bits takes over.

p = derive_params(1e-2, M, 1)
for v in (4, 5, 9.75, 200):
    x = newton_inverse(FixedPoint(int(v * 2**p.v_frac_bits), p.v_frac_bits, p.n),
                       b=p.b, steps=p.newton_steps, E=p.E, C_d=p.C_d)
    print(f"1/{v:<6} ~ {float(x):.10f}  error {abs(float(x) - 1 / v):.2e}  bound {p.eps0 ** 2:.2e}")

print("inputs below 4 hit the guard:", newton_inverse(fx_from_int(3, 4), 2.0**-8))

# %%
# Arcsine by bisection
# --------------------
# The rotation angle is found by bisecting ``[0, pi/2]`` and comparing the
# repeated-squaring sine of each midpoint with the target.

for omega in (0.01, 0.1, 0.25):
    w = FixedPoint(int(omega * 2**p.q), p.q, p.q + 1)
    theta = bisect_arcsin(w, p)
    resid = abs(float(hp_ctx.sin(hp(theta))) - omega)
    print(f"omega={omega:<5} theta={float(theta):.8f}  |sin theta - omega|={resid:.2e}"
          f"  (allowed {p.eps1 ** 2:.2e})")
