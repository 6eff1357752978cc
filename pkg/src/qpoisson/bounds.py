"""Sweeps that measure kernel errors against high-precision references and
compare them with their proven bounds.

Each check returns :class:`BoundRow` records ``(bound, params, measured,
proven, passed)``; ``passed`` means ``measured <= proven`` with no slack.

================  ==========================================  ====================
name              measured quantity                           proven bound
================  ==========================================  ====================
w_power_exp       ``|e^{ix} - W^r|`` (exact arithmetic)       ``2^7 / r``
w_power_sincos    ``max(|sin x - Im W^r|, |cos x - Re W^r|)``  ``2^7 / r``
w_power_rounding  ``|W^r - Ŵ_r|`` (same truncated input)      ``2^(ν+9) / 2^s``
esa_sine_error    ``|sin x - Im Ŵ_r|``                        ``2^-(ν-1)``
esa_eigenvalue    ``|λ_j - ℓ_j|``                             ``17 · 2^-ν M^2``
eigenvalue_sum    ``|λ - λ̂|`` over all multi-indices          ``17 M^2 d / 2^ν``
newton_steps      ``|x̂_s - 1/v|`` for random ``v``             ``2^(-2^s) + s 2^-b``
newton_target     same                                        ``ε0^2``
================  ==========================================  ====================

Angles are ``x = π j / 2M`` for ``j = 1 .. M-1``.
"""

from __future__ import annotations

import itertools
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .classical_ref import hp, hp_ctx
from .errors import InvalidParameter
from .fixedpoint import FixedPoint
from .kernels import (default_s, derive_params, ell_table, esa_angle, esa_w_power,
                      newton_inverse)

__all__ = ["BoundRow", "BOUND_NAMES", "BOUND_ALIASES", "canonical_name", "check", "verify_bounds",
           "exact_w_power"]

BOUND_NAMES = ("w_power_exp", "w_power_sincos", "w_power_rounding", "esa_sine_error", "esa_eigenvalue", "eigenvalue_sum",
               "newton_steps", "newton_target")

# numbered labels accepted as alternative spellings on the command line
BOUND_ALIASES = {
    "lemma1": "w_power_exp",
    "lemma2": "w_power_sincos",
    "prop1": "w_power_rounding",
    "prop2_sine": "esa_sine_error",
    "prop2_eigen": "esa_eigenvalue",
    "theorem2": "eigenvalue_sum",
    "theorem1": "newton_steps",
    "newton_eps0": "newton_target",
}


def canonical_name(name: str) -> str:
    name = BOUND_ALIASES.get(name, name)
    if name not in BOUND_NAMES:
        raise InvalidParameter(f"unknown bound {name!r}; choose from {BOUND_NAMES}")
    return name


@dataclass(frozen=True)
class BoundRow:
    bound: str
    params: str
    measured: float
    proven: float
    passed: bool

    def as_csv_row(self) -> list:
        return [self.bound, self.params, repr(self.measured), repr(self.proven),
                "pass" if self.passed else "fail"]


def _row(name: str, params: dict, measured, proven) -> BoundRow:
    label = ";".join(f"{k}={v}" for k, v in params.items())
    return BoundRow(name, label, float(measured), float(proven), bool(measured <= proven))


def exact_w_power(y, log_r: int):
    """``(1 + i y - y^2)^(2^log_r)`` in 60-digit arithmetic."""
    w = hp_ctx.mpc(1 - y * y, y)
    for _ in range(log_r):
        w = w * w
    return w


def _angles(M: int):
    return [(j, hp_ctx.pi * j / (2 * M)) for j in range(1, M)]


def _w_power(name: str, M: int, nu: int) -> BoundRow:
    log_r = nu + 7
    r = hp_ctx.mpf(2) ** log_r
    worst = hp_ctx.mpf(0)
    for _, x in _angles(M):
        w = exact_w_power(x / r, log_r)
        if name == "w_power_exp":
            err = abs(hp_ctx.expj(x) - w)
        else:
            err = max(abs(hp_ctx.sin(x) - w.imag), abs(hp_ctx.cos(x) - w.real))
        worst = max(worst, err)
    return _row(name, {"M": M, "nu": nu, "r": f"2^{log_r}"}, worst, 2.0**7 / 2.0**log_r)


def _w_rounding(M: int, nu: int) -> BoundRow:
    s = default_s(nu, M)
    log_r = nu + 7
    worst = hp_ctx.mpf(0)
    for j in range(1, M):
        x_hat = esa_angle(j, M, s)
        y_mant = x_hat.mantissa >> (x_hat.frac_bits + log_r - s)
        y = hp(FixedPoint(y_mant, s, s + 1))
        w_hat = esa_w_power(x_hat, nu, s)
        w = exact_w_power(y, log_r)
        worst = max(worst, abs(w - hp_ctx.mpc(hp(w_hat.re), hp(w_hat.im))))
    return _row("w_power_rounding", {"M": M, "nu": nu, "s": s}, worst, 2.0 ** (nu + 9 - s))


def _esa_sine(M: int, nu: int) -> BoundRow:
    s = default_s(nu, M)
    worst = hp_ctx.mpf(0)
    for j, x in _angles(M):
        im = esa_w_power(esa_angle(j, M, s), nu, s).im
        worst = max(worst, abs(hp_ctx.sin(x) - hp(im)))
    return _row("esa_sine_error", {"M": M, "nu": nu, "s": s}, worst, 2.0 ** -(nu - 1))


def _eigen_errors(M: int, nu: int) -> list:
    """``λ_j - ℓ_j`` for ``j = 1..M-1`` in high precision."""
    table = ell_table(M, nu, default_s(nu, M))
    out = []
    for j, x in _angles(M):
        lam = 4 * M * M * hp_ctx.sin(x) ** 2
        out.append(lam - hp_ctx.ldexp(hp_ctx.mpf(table[j]), -nu))
    return out


def _esa_eigen(M: int, nu: int) -> BoundRow:
    worst = max(abs(e) for e in _eigen_errors(M, nu))
    return _row("esa_eigenvalue", {"M": M, "nu": nu}, worst, 17 * 2.0**-nu * M * M)


def _eigen_sum(M: int, nu: int, d: int) -> BoundRow:
    errs = np.array([float(e) for e in _eigen_errors(M, nu)])
    # λ - λ̂ = sum_k (λ_{j_k} - ℓ_{j_k}); enumerate every multi-index
    worst = max(abs(sum(c)) for c in itertools.product(errs, repeat=d))
    return _row("eigenvalue_sum", {"M": M, "nu": nu, "d": d}, worst, 17.0 * M * M * d / 2.0**nu)


def _newton(name: str, eps: float, M: int, d: int, trials: int, seed: int) -> BoundRow:
    p = derive_params(eps, M, d)
    rng = np.random.default_rng(seed)
    f = p.v_frac_bits
    hi = (p.E // p.C_d) << f
    worst = hp_ctx.mpf(0)
    for mant in rng.integers(4 << f, hi, size=trials):
        v = FixedPoint(int(mant), f, p.n)
        x = newton_inverse(v, b=p.b, steps=p.newton_steps, E=p.E, C_d=p.C_d)
        worst = max(worst, abs(hp(x) - 1 / hp(v)))
    if name == "newton_steps":
        proven = 2.0 ** -(2**p.newton_steps) + p.newton_steps * 2.0**-p.b
    else:
        proven = p.eps0**2
    params = {"eps": eps, "M": M, "d": d, "b": p.b, "steps": p.newton_steps,
              "trials": trials, "seed": seed}
    return _row(name, params, worst, proven)


def check(name: str, **kw) -> BoundRow:
    """Evaluate one row; ``kw`` carries ``M``, ``nu`` (and ``d``) or Newton settings."""
    name = canonical_name(name)
    if name in ("w_power_exp", "w_power_sincos"):
        return _w_power(name, kw["M"], kw["nu"])
    if name == "w_power_rounding":
        return _w_rounding(kw["M"], kw["nu"])
    if name == "esa_sine_error":
        return _esa_sine(kw["M"], kw["nu"])
    if name == "esa_eigenvalue":
        return _esa_eigen(kw["M"], kw["nu"])
    if name == "eigenvalue_sum":
        return _eigen_sum(kw["M"], kw["nu"], kw.get("d", 1))
    if name in ("newton_steps", "newton_target"):
        return _newton(name, kw.get("eps", 1e-2), kw.get("M", 8), kw.get("d", 1),
                       kw.get("trials", 1000), kw.get("seed", 0))
    raise AssertionError(name)


def _task(args):
    name, kw = args
    return check(name, **kw)


def verify_bounds(names=None, Ms=(4, 8, 16), nus=range(6, 15), ds=(1, 2, 3),
                  newton_cases=((1e-2, 8, 1), (1e-3, 16, 2), (2.0**-20, 32, 3)),
                  trials: int = 1000, seed: int = 0, jobs: int = 1) -> list[BoundRow]:
    """Full sweep in a fixed row order (independent of ``jobs``)."""
    names = [canonical_name(n) for n in (BOUND_NAMES if names is None else names)]
    tasks = []
    for name in names:
        if name in ("newton_steps", "newton_target"):
            for eps, M, d in newton_cases:
                tasks.append((name, {"eps": eps, "M": M, "d": d, "trials": trials,
                                     "seed": seed}))
        elif name == "eigenvalue_sum":
            tasks += [(name, {"M": M, "nu": nu, "d": d})
                      for M in Ms for nu in nus for d in ds]
        else:
            tasks += [(name, {"M": M, "nu": nu}) for M in Ms for nu in nus]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(_task, tasks))
    return [_task(t) for t in tasks]

