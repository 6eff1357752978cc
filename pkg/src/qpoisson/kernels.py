"""Fixed-point arithmetic kernels that the circuit compiles into reversible
basis maps.

* Newton reciprocal: ``x <- 2x - v x^2`` from ``x_0 = 2**-p``, every step
  truncated to ``b`` fractional bits.
* Eigenvalue simulation (ESA): ``sin x`` as ``Im(W**r)`` with
  ``W = 1 + i y - y**2``, ``y = x / r``, ``r = 2**(nu + 7)``, evaluated by
  ``nu + 7`` repeated squarings in ``s``-bit arithmetic; then
  ``ell_j = trunc_nu(4 M^2 Im(W_r)^2)``.
* Bisection arcsine: ``theta`` with ``|sin theta - omega| <= eps1**2`` using
  ESA sines at the bisection midpoints.

All of them are deterministic functions of :class:`FixedPoint` inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from fractions import Fraction
from functools import lru_cache

from .classical_ref import hp_ctx
from .errors import InvalidParameter
from .fixedpoint import (
    ComplexFixed,
    FixedPoint,
    cfx_square,
    truncate_mantissa,
)
from .grid import check_grid

__all__ = [
    "EsaParams",
    "derive_params",
    "pi_fixed",
    "esa_angle",
    "esa_w_power",
    "esa_sine",
    "eigen_ell",
    "ell_table",
    "eigen_sum_d",
    "newton_init",
    "newton_step",
    "newton_inverse",
    "bisect_arcsin",
    "default_s",
]


def _ceil_log2(x: float | Fraction) -> int:
    """Exact ``ceil(log2(x))`` for positive rationals/floats."""
    x = Fraction(x)
    if x <= 0:
        raise InvalidParameter("log of a nonpositive number")
    k = x.numerator.bit_length() - x.denominator.bit_length()
    # 2**k <= x < 2**(k+2) bracket; walk to the exact ceiling
    while Fraction(2) ** k < x:
        k += 1
    while Fraction(2) ** (k - 1) >= x:
        k -= 1
    return k


def default_s(nu: int, M: int) -> int:
    """Working precision ``max(2 nu + 9, 11 + nu + log2 M)``."""
    return max(2 * nu + 9, 11 + nu + (M.bit_length() - 1))


@dataclass(frozen=True)
class EsaParams:
    """Precision parameters derived from ``(eps, M, d)``.

    ``nu``: fractional bits of eigenvalue estimates; ``s``: ESA working bits;
    ``r = 2**(nu+7)``; ``E = 2**ceil(log2 d) * 4 M^2``; ``n = log2 E + nu``
    (phase register); ``b``: Newton register; ``q``/``nu_rot``: bisection
    working bits and sine accuracy; ``C_d = 2**floor(log2 d)``.
    """

    eps: float
    M: int
    d: int
    nu: int
    s: int
    E: int
    C_d: int
    n: int
    b: int
    q: int
    nu_rot: int
    eps0: float
    eps1: float
    newton_steps: int
    bisect_steps: int

    @property
    def m(self) -> int:
        return self.M.bit_length() - 1

    @property
    def r(self) -> int:
        return 1 << (self.nu + 7)

    @property
    def log2_E(self) -> int:
        return self.E.bit_length() - 1

    @property
    def v_frac_bits(self) -> int:
        """Fractional bits of ``v = lambda_hat / C_d`` read off the phase register."""
        return self.n - (self.log2_E - (self.C_d.bit_length() - 1))

    def as_dict(self) -> dict:
        out = {k: getattr(self, k) for k in self.__dataclass_fields__}
        out["r"] = self.r
        return out


_OVERRIDABLE = {"nu", "s", "n", "b", "q", "nu_rot", "newton_steps", "bisect_steps"}


def derive_params(eps: float, M: int, d: int = 1, **overrides) -> EsaParams:
    """All derived precision parameters; any of them may be overridden.

    Overriding ``nu`` re-derives ``s`` and ``n`` unless those are given too.
    ``n`` must equal ``log2 E + nu`` (the phase register holds
    ``lambda_hat * 2**nu`` exactly).
    """
    m = check_grid(M, d)
    if not 0 < eps < 1:
        raise InvalidParameter(f"eps must lie in (0, 1), got {eps}")
    unknown = set(overrides) - _OVERRIDABLE
    if unknown:
        raise InvalidParameter(f"unknown parameter overrides: {sorted(unknown)}")
    overrides = {k: v for k, v in overrides.items() if v is not None}

    log2_E = _ceil_log2(d) + 2 + 2 * m
    E = 1 << log2_E
    C_d = 1 << (d.bit_length() - 1)
    nu = overrides.get("nu", _ceil_log2(Fraction(17 * E) / Fraction(eps)))
    if nu < 1:
        raise InvalidParameter(f"nu must be >= 1, got {nu}")
    s = overrides.get("s", default_s(nu, M))
    n = overrides.get("n", log2_E + nu)
    if n != log2_E + nu:
        raise InvalidParameter(f"n={n} inconsistent with log2 E + nu = {log2_E + nu}")

    eps0 = min(eps, 1.0 / E)
    eps1 = min(eps, 1.0 / (4 * M * M))
    b = overrides.get("b", 3 * _ceil_log2(1 / Fraction(eps0)))
    log2_inv_eps1_sq = _ceil_log2(1 / Fraction(eps1) ** 2)
    # two extra bits: the bisection needs sine error <= eps1^2 / 2
    nu_rot = overrides.get("nu_rot", log2_inv_eps1_sq + 2)
    q = overrides.get("q", max(2 * nu_rot + 9, 13 + nu_rot + 2 * m))
    newton_steps = overrides.get(
        "newton_steps", _ceil_log2(math.log2(2 / eps0**2))
    )
    bisect_steps = overrides.get("bisect_steps", log2_inv_eps1_sq + 1)
    return EsaParams(
        eps=eps, M=M, d=d, nu=nu, s=s, E=E, C_d=C_d, n=n, b=b, q=q, nu_rot=nu_rot,
        eps0=eps0, eps1=eps1, newton_steps=newton_steps, bisect_steps=bisect_steps,
    )


@lru_cache(maxsize=None)
def _pi_mantissa(frac_bits: int) -> int:
    with hp_ctx.workprec(frac_bits + 64):
        return int(hp_ctx.floor(hp_ctx.ldexp(hp_ctx.pi, frac_bits)))


def pi_fixed(frac_bits: int) -> FixedPoint:
    """pi truncated to ``frac_bits`` fractional bits."""
    return FixedPoint(_pi_mantissa(frac_bits), frac_bits, frac_bits + 2)


def esa_angle(j: int, M: int, s: int) -> FixedPoint:
    """``x_hat = trunc_s(pi j / 2M)`` using a ``2s``-bit pi constant."""
    if not 1 <= j <= M - 1:
        raise InvalidParameter(f"index j={j} out of range 1..{M - 1}")
    # 2s-bit product down to s bits, then divide by 2M = 2**(m+1)
    mant = truncate_mantissa(j * _pi_mantissa(2 * s), s + M.bit_length())
    return FixedPoint(mant, s, s + 1)


def esa_w_power(x: FixedPoint, nu: int, s: int, trace: list | None = None) -> ComplexFixed:
    """Repeated-squaring approximation ``W_r`` of ``exp(i x)``.

    ``y_hat = trunc_s(x / r)`` is a pure shift; ``W_1`` is ``1 - y^2 + i y``
    truncated to ``s`` bits and ``nu + 7`` squarings follow.  When ``trace``
    is a list, every intermediate ``W_{2^k}`` is appended to it.
    """
    log_r = nu + 7
    y = truncate_mantissa(x.mantissa, x.frac_bits + log_r - s)
    if y < 0:
        raise InvalidParameter("ESA angle must be nonnegative")
    re0 = (1 << (2 * s)) - y * y  # 1 - y^2 at 2s fractional bits, exact
    w = ComplexFixed(
        FixedPoint(truncate_mantissa(re0, s), s, s + 1),
        FixedPoint(y, s, s + 1),
    )
    one = 1 << (2 * s)
    if trace is not None:
        trace.append(w)
    for _ in range(log_r):
        w = cfx_square(w, s, s + 1)
        if w.re.mantissa**2 + w.im.mantissa**2 >= one:
            raise AssertionError("ESA iterate left the unit disk")
        if trace is not None:
            trace.append(w)
    return w


def esa_sine(x: FixedPoint, nu: int, s: int) -> FixedPoint:
    """``Im(W_r)``: ``sin x`` to within ``2**-(nu-1)`` for ``s = default_s``."""
    return esa_w_power(x, nu, s).im


def eigen_ell(j: int, M: int, nu: int, s: int | None = None) -> FixedPoint:
    """``ell_j = trunc_nu(4 M^2 Im(W_r)^2)`` with ``log2(4M^2)`` integer bits."""
    s = default_s(nu, M) if s is None else s
    m = M.bit_length() - 1
    im = esa_w_power(esa_angle(j, M, s), nu, s).im.mantissa
    # im^2 has 2s fractional bits; times 4M^2 moves the point by 2 + 2m
    mant = truncate_mantissa(im * im, 2 * s - (2 + 2 * m) - nu)
    return FixedPoint(mant, nu, nu + 2 + 2 * m)


@lru_cache(maxsize=None)
def ell_table(M: int, nu: int, s: int | None = None) -> tuple[int, ...]:
    """Mantissas ``ell_j * 2**nu`` for ``j = 0..M-1`` (entry 0 is 0)."""
    return (0,) + tuple(eigen_ell(j, M, nu, s).mantissa for j in range(1, M))


def eigen_sum_d(js, M: int, nu: int, s: int | None = None) -> FixedPoint:
    """``lambda_hat = sum_k ell_{j_k}``, exact in ``nu`` fractional bits."""
    js = (js,) if isinstance(js, int) else tuple(js)
    table = ell_table(M, nu, s)
    for jk in js:
        if not 1 <= jk <= M - 1:
            raise InvalidParameter(f"index {jk} out of range 1..{M - 1}")
    total = sum(table[jk] for jk in js)
    extra = (len(js) - 1).bit_length() if len(js) > 1 else 0
    return FixedPoint(total, nu, nu + 2 + 2 * (M.bit_length() - 1) + extra)


def newton_init(v: FixedPoint, E: int | None, C_d: int, b: int) -> FixedPoint | None:
    """Initial guess ``2**-p`` with ``2**(p-1) < v <= 2**p``.

    ``v`` carries ``log2(E / C_d)`` integer bits (unchecked when ``E`` is
    None).  Returns ``None`` (the
    circuit leaves the output register at zero) when the leading
    ``log2(E/C_d) - 2`` integer bits are all zero, i.e. ``v < 4``.
    """
    int_part = v.mantissa >> v.frac_bits
    int_bits = (E // C_d).bit_length() - 1 if E is not None else int_part.bit_length()
    if v.mantissa < 0 or int_part >> int_bits:
        raise InvalidParameter(f"v={float(v)} does not fit {int_bits} integer bits")
    if int_part >> 2 == 0:
        return None
    p = (v.mantissa - 1).bit_length() - v.frac_bits
    if not 0 < p < b:
        raise InvalidParameter(f"need 0 < p < b, got p={p}, b={b}")
    return FixedPoint(1 << (b - p), b, b)


def newton_step(x: FixedPoint, v: FixedPoint, b: int) -> FixedPoint:
    """``trunc_b(2 x - v x^2)``, exact in widened precision before truncation."""
    f = v.frac_bits + 2 * x.frac_bits
    vx2 = v.mantissa * x.mantissa * x.mantissa
    two_x = (2 * x.mantissa) << (f - x.frac_bits)
    # v x <= 2 keeps the iterate in [0, 1/v]
    if v.mantissa * x.mantissa > (2 << (v.frac_bits + x.frac_bits)):
        raise AssertionError("Newton iterate outside its convergence region (v x > 2)")
    return FixedPoint(truncate_mantissa(two_x - vx2, f - b), b, b)


def newton_inverse(v: FixedPoint, eps0: float | None = None, *, b: int | None = None,
                   steps: int | None = None, E: int | None = None, C_d: int = 1,
                   guard: bool = True) -> FixedPoint | None:
    """``steps`` Newton steps toward ``1/v`` in ``b``-bit arithmetic.

    Defaults: ``b = 3 ceil(log2 1/eps0)`` and
    ``steps = ceil(log2 log2(2 / eps0^2))``, which bound the error by
    ``eps0^2``.  With ``guard`` (default) inputs below 4 return ``None``.
    """
    if b is None or steps is None:
        if eps0 is None:
            raise InvalidParameter("give eps0 or both b and steps")
        b = 3 * _ceil_log2(1 / Fraction(eps0)) if b is None else b
        steps = _ceil_log2(math.log2(2 / eps0**2)) if steps is None else steps
    if guard:
        x = newton_init(v, E, C_d, b)
        if x is None:
            return None
    else:
        if v.value <= 1:
            raise InvalidParameter("Newton reciprocal needs v > 1")
        p = (v.mantissa - 1).bit_length() - v.frac_bits
        x = FixedPoint(1 << (b - p), b, b)
    for _ in range(steps):
        x = newton_step(x, v, b)
    return x


def bisect_arcsin(omega: FixedPoint, params: EsaParams, **overrides) -> FixedPoint:
    """Angle ``theta`` (``q`` fractional bits) with ``|sin theta - omega| <= eps1^2``.

    Bisection of ``[0, pi/2]`` starting from ``pi/4``; every midpoint sine is
    an ESA evaluation with ``nu_rot`` accuracy in ``q``-bit arithmetic.  Once
    ``|s_theta - omega| <= eps1^2 / 2`` the angle stays frozen.
    ``overrides`` may replace ``q``, ``nu_rot``, ``bisect_steps`` or ``eps1``.
    """
    p = replace(params, **overrides) if overrides else params
    w = omega.value
    if not 0 < w < 1:
        raise InvalidParameter(f"omega must lie in (0, 1), got {float(omega)}")
    q = p.q
    tol = Fraction(p.eps1) ** 2 / 2
    scale = 1 << q
    lo, hi = (w - tol) * scale, (w + tol) * scale  # compare on the q-bit grid
    pi_big = _pi_mantissa(q + 64)
    theta = pi_big >> 66  # pi / 4
    for i in range(p.bisect_steps):
        s_theta = esa_sine(FixedPoint(theta, q, q + 1), p.nu_rot, q).mantissa
        step = pi_big >> (64 + i + 3)
        if s_theta < lo:
            theta += step
        elif s_theta > hi:
            theta -= step
        else:
            break
    return FixedPoint(theta, q, q + 1)
