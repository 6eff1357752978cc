"""Classical ground truth: exact solves, CG, dense exponentials, and
high-precision scalar functions (mpmath, 60 significant digits)."""

from __future__ import annotations

import mpmath
import numpy as np
from scipy.sparse.linalg import cg

from .errors import InvalidParameter
from .fixedpoint import FixedPoint
from .grid import DiscreteLaplacian

__all__ = [
    "HP_DPS",
    "direct_solve",
    "cg_solve",
    "dense_expm",
    "hp",
    "hp_sin",
    "hp_cos",
    "hp_arcsin",
    "hp_inv",
    "hp_pi",
]

HP_DPS = 60
_ctx = mpmath.mp.clone()
_ctx.dps = HP_DPS
hp_ctx = _ctx


def direct_solve(M: int, d: int, rhs) -> np.ndarray:
    """Solve ``-Δ_h v = f`` exactly via the analytic eigen-decomposition."""
    lap = DiscreteLaplacian(M, d)
    f = np.asarray(getattr(rhs, "values", rhs), dtype=float).reshape(-1)
    beta = lap.to_eigenbasis(f)
    return lap.from_eigenbasis(beta / lap.eigenvalues)


def cg_solve(M: int, d: int, rhs, tol: float = 1e-12, maxiter: int | None = None):
    """Conjugate gradients on the matrix-free operator.

    Returns ``(solution, iterations)``.
    """
    if not tol > 0:
        raise InvalidParameter(f"tol must be positive, got {tol}")
    lap = DiscreteLaplacian(M, d)
    f = np.asarray(getattr(rhs, "values", rhs), dtype=float).reshape(-1)
    iterations = 0

    def count(_):
        nonlocal iterations
        iterations += 1

    x, info = cg(lap.operator(), f, rtol=tol, atol=0.0, maxiter=maxiter or 10 * lap.N,
                 callback=count)
    if info != 0:
        raise RuntimeError(f"CG did not converge (info={info})")
    return x, iterations


def dense_expm(H: np.ndarray, gamma: float) -> np.ndarray:
    """``exp(i H gamma)`` for symmetric ``H`` through ``eigh``."""
    w, V = np.linalg.eigh(np.asarray(H))
    return (V * np.exp(1j * gamma * w)) @ V.conj().T


def hp(x):
    """Convert an int, float, Fraction or :class:`FixedPoint` to an exact mpf."""
    if isinstance(x, FixedPoint):
        return _ctx.ldexp(_ctx.mpf(x.mantissa), -x.frac_bits)
    if hasattr(x, "numerator") and hasattr(x, "denominator"):
        return _ctx.mpf(x.numerator) / x.denominator
    return _ctx.mpf(x)


def hp_pi():
    return +_ctx.pi


def hp_sin(x):
    return _ctx.sin(hp(x))


def hp_cos(x):
    return _ctx.cos(hp(x))


def hp_arcsin(x):
    return _ctx.asin(hp(x))


def hp_inv(x):
    return 1 / hp(x)
