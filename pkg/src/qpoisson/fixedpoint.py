"""Bit-exact binary fixed-point arithmetic with truncation.

A :class:`FixedPoint` holds an integer mantissa ``m`` and a binary point
position ``frac_bits``; its value is ``m * 2**-frac_bits``.  ``width`` is the
magnitude bit count (sign carried separately), so ``|m| < 2**width`` and the
integer part has ``width - frac_bits`` bits.

Every operation computes its exact result in widened integer precision and
then truncates toward zero to the requested number of fractional bits.  For
nonnegative values this is plain truncation of the low bits; for negative
values it never increases the magnitude, which the complex squaring kernels
rely on to stay inside the unit disk.

>>> half = fx_from_rational(1, 2, 8)
>>> half.mantissa, float(half)
(128, 0.5)
>>> float(fx_mul(half, half, 8))
0.25
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import FixedPointOverflowError, InvalidParameter

__all__ = [
    "FixedPoint",
    "ComplexFixed",
    "fx_from_rational",
    "fx_from_int",
    "fx_truncate",
    "fx_add",
    "fx_sub",
    "fx_mul",
    "fx_shift",
    "cfx_mul",
    "cfx_square",
    "truncate_mantissa",
]


def truncate_mantissa(mantissa: int, drop_bits: int) -> int:
    """Drop ``drop_bits`` low bits of ``mantissa``, rounding toward zero.

    A negative ``drop_bits`` widens (shifts left) exactly.
    """
    if drop_bits <= 0:
        return mantissa << -drop_bits
    if mantissa >= 0:
        return mantissa >> drop_bits
    return -((-mantissa) >> drop_bits)


@dataclass(frozen=True)
class FixedPoint:
    mantissa: int
    frac_bits: int
    width: int

    def __post_init__(self):
        if self.frac_bits < 0 or self.width < 0:
            raise InvalidParameter(
                f"frac_bits and width must be nonnegative, got {self.frac_bits}, {self.width}"
            )
        if abs(self.mantissa) >= 1 << self.width:
            raise FixedPointOverflowError(
                f"mantissa {self.mantissa} does not fit in {self.width} bits"
            )

    @property
    def int_bits(self) -> int:
        return max(self.width - self.frac_bits, 0)

    @property
    def value(self) -> Fraction:
        return Fraction(self.mantissa, 1 << self.frac_bits)

    def __float__(self) -> float:
        return self.mantissa / (1 << self.frac_bits) if self.frac_bits < 1000 else float(self.value)

    def __repr__(self) -> str:
        return f"FixedPoint({float(self)!r}, frac_bits={self.frac_bits}, width={self.width})"

    def __lt__(self, other: "FixedPoint") -> bool:
        return self.value < other.value

    def __le__(self, other: "FixedPoint") -> bool:
        return self.value <= other.value

    def bits(self) -> str:
        """Magnitude bits, most significant first, with the binary point."""
        raw = format(abs(self.mantissa), f"0{self.width}b") if self.width else ""
        sign = "-" if self.mantissa < 0 else ""
        cut = len(raw) - self.frac_bits
        return f"{sign}{raw[:cut]}.{raw[cut:]}"


@dataclass(frozen=True)
class ComplexFixed:
    re: FixedPoint
    im: FixedPoint

    def __post_init__(self):
        if self.re.frac_bits != self.im.frac_bits:
            raise InvalidParameter("real and imaginary parts must share frac_bits")

    @property
    def frac_bits(self) -> int:
        return self.re.frac_bits

    def modulus_squared(self) -> Fraction:
        """Exact ``re**2 + im**2``."""
        f = self.frac_bits
        return Fraction(self.re.mantissa**2 + self.im.mantissa**2, 1 << (2 * f))

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))


def _fit(mantissa: int, frac_bits: int, width: int | None, int_bits: int) -> FixedPoint:
    if width is None:
        width = frac_bits + int_bits
    return FixedPoint(mantissa, frac_bits, width)


def fx_from_rational(numerator: int, denominator: int, frac_bits: int,
                     width: int | None = None) -> FixedPoint:
    """Represent ``numerator / denominator`` with ``frac_bits`` fractional bits.

    ``denominator`` must be a power of two.  The value is exact when
    ``log2(denominator) <= frac_bits`` and truncated toward zero otherwise.
    With ``width=None`` the integer part gets exactly as many bits as needed.
    """
    if denominator <= 0 or denominator & (denominator - 1):
        raise InvalidParameter(f"denominator must be a positive power of two, got {denominator}")
    k = denominator.bit_length() - 1
    mantissa = truncate_mantissa(numerator, k - frac_bits)
    if width is None:
        int_part = abs(mantissa) >> frac_bits
        width = frac_bits + max(int_part.bit_length(), 1)
    return FixedPoint(mantissa, frac_bits, width)


def fx_from_int(value: int, frac_bits: int = 0, width: int | None = None) -> FixedPoint:
    return fx_from_rational(value, 1, frac_bits, width)


def fx_truncate(a: FixedPoint, frac_bits: int, width: int | None = None) -> FixedPoint:
    """Change ``a`` to ``frac_bits`` fractional bits (truncating or widening)."""
    m = truncate_mantissa(a.mantissa, a.frac_bits - frac_bits)
    return _fit(m, frac_bits, width, a.int_bits)


def fx_shift(a: FixedPoint, k: int) -> FixedPoint:
    """Exact multiplication by ``2**k`` by moving the binary point."""
    f = a.frac_bits - k
    m = a.mantissa
    if f < 0:
        m, f = m << -f, 0
    return FixedPoint(m, f, max(f + max(a.int_bits + k, 0), abs(m).bit_length()))


def _aligned(a: FixedPoint, b: FixedPoint) -> tuple[int, int, int]:
    f = max(a.frac_bits, b.frac_bits)
    return a.mantissa << (f - a.frac_bits), b.mantissa << (f - b.frac_bits), f


def fx_add(a: FixedPoint, b: FixedPoint, out_frac_bits: int | None = None,
           width: int | None = None) -> FixedPoint:
    """Exact sum, truncated to ``out_frac_bits`` (default: the finer operand)."""
    ma, mb, f = _aligned(a, b)
    out_f = f if out_frac_bits is None else out_frac_bits
    m = truncate_mantissa(ma + mb, f - out_f)
    return _fit(m, out_f, width, max(a.int_bits, b.int_bits) + 1)


def fx_sub(a: FixedPoint, b: FixedPoint, out_frac_bits: int | None = None,
           width: int | None = None) -> FixedPoint:
    return fx_add(a, FixedPoint(-b.mantissa, b.frac_bits, b.width), out_frac_bits, width)


def fx_mul(a: FixedPoint, b: FixedPoint, out_frac_bits: int,
           width: int | None = None) -> FixedPoint:
    """Exact product in double width, truncated to ``out_frac_bits``.

    Unless ``width`` is given, the result keeps the larger operand's integer
    bit count; a product that outgrows it raises
    :class:`~qpoisson.errors.FixedPointOverflowError`.
    """
    m = truncate_mantissa(a.mantissa * b.mantissa, a.frac_bits + b.frac_bits - out_frac_bits)
    return _fit(m, out_frac_bits, width, max(a.int_bits, b.int_bits))


def cfx_mul(a: ComplexFixed, b: ComplexFixed, out_frac_bits: int,
            width: int | None = None) -> ComplexFixed:
    """Complex product; both parts exact before componentwise truncation."""
    drop = a.frac_bits + b.frac_bits - out_frac_bits
    re = a.re.mantissa * b.re.mantissa - a.im.mantissa * b.im.mantissa
    im = a.re.mantissa * b.im.mantissa + a.im.mantissa * b.re.mantissa
    int_bits = max(a.re.int_bits, a.im.int_bits, b.re.int_bits, b.im.int_bits)
    return ComplexFixed(
        _fit(truncate_mantissa(re, drop), out_frac_bits, width, int_bits),
        _fit(truncate_mantissa(im, drop), out_frac_bits, width, int_bits),
    )


def cfx_square(z: ComplexFixed, out_frac_bits: int | None = None,
               width: int | None = None) -> ComplexFixed:
    f = z.frac_bits if out_frac_bits is None else out_frac_bits
    return cfx_mul(z, z, f, width)
