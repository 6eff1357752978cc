from fractions import Fraction

import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qpoisson.errors import FixedPointOverflowError, InvalidParameter
from qpoisson.fixedpoint import (ComplexFixed, FixedPoint, cfx_mul, cfx_square, fx_add,
                                 fx_from_int, fx_from_rational, fx_mul, fx_shift, fx_sub,
                                 fx_truncate, truncate_mantissa)


def fx(value: Fraction, frac_bits: int, width=None) -> FixedPoint:
    return fx_from_rational(value.numerator * (1 << frac_bits) // value.denominator,
                            1 << frac_bits, frac_bits, width)


class TestFromRational:
    def test_half(self):
        a = fx_from_rational(1, 2, 8)
        assert a.mantissa == 128 and a.value == Fraction(1, 2)

    def test_one(self):
        assert fx_from_rational(1, 1, 4).value == 1

    def test_pi_approximation_against_high_precision_pi(self):
        a = fx_from_rational(1647099, 2**19, 19)
        mpmath.mp.dps = 40
        err = abs(mpmath.mpf(a.mantissa) / 2**19 - mpmath.pi)
        assert err < mpmath.mpf(2) ** -19
        assert float(a) == pytest.approx(3.14159202, abs=1e-8)

    def test_truncates_extra_bits(self):
        assert fx_from_rational(3, 8, 2).value == Fraction(1, 4)

    def test_non_power_of_two_denominator_rejected(self):
        with pytest.raises(InvalidParameter):
            fx_from_rational(1, 3, 8)

    def test_width_overflow_is_an_error(self):
        with pytest.raises(FixedPointOverflowError):
            fx_from_rational(5, 1, 0, width=2)


class TestMul:
    def test_quarter(self):
        h = fx_from_rational(1, 2, 8)
        assert fx_mul(h, h, 8).value == Fraction(1, 4)

    def test_exact_small_product(self):
        a = fx_from_rational(5, 16, 8)  # 0.3125
        assert fx_mul(a, a, 8).value == Fraction(25, 256)

    def test_three_times(self):
        three = fx_from_int(3, 8)
        x = fx_from_rational(85, 256, 8)  # 0.33203125
        assert float(fx_mul(three, x, 8)) == 0.99609375

    def test_integer_overflow_raises(self):
        a = fx_from_int(3, 0, 2)
        with pytest.raises(FixedPointOverflowError):
            fx_mul(a, a, 0)

    def test_explicit_width_allows_growth(self):
        a = fx_from_int(3, 0, 2)
        assert fx_mul(a, a, 0, width=4).value == 9


class TestComplex:
    def test_identity(self):
        one = ComplexFixed(fx_from_int(1, 8, 9), fx_from_int(0, 8, 9))
        z = ComplexFixed(fx_from_rational(3, 8, 8, 9), fx_from_rational(-5, 16, 8, 9))
        out = cfx_mul(one, z, 8, 9)
        assert (out.re.value, out.im.value) == (z.re.value, z.im.value)

    def test_i_squared(self):
        i = ComplexFixed(fx_from_int(0, 8, 9), fx_from_int(1, 8, 9))
        out = cfx_square(i, 8, 9)
        assert (out.re.value, out.im.value) == (-1, 0)

    def test_squaring_step_against_widened_oracle(self):
        f = 32
        y = Fraction(1, 2**7)
        w = ComplexFixed(fx(1 - y * y, f, f + 1), fx(y, f, f + 1))
        out = cfx_square(w, f, f + 1)
        re_exact = w.re.value**2 - w.im.value**2
        im_exact = 2 * w.re.value * w.im.value
        # truncation toward zero on each component
        assert out.re.value <= re_exact and re_exact - out.re.value < Fraction(1, 2**f)
        assert out.im.value <= im_exact and im_exact - out.im.value < Fraction(1, 2**f)
        assert out.modulus_squared() <= 1

    def test_mismatched_frac_bits_rejected(self):
        with pytest.raises(InvalidParameter):
            ComplexFixed(fx_from_int(1, 8), fx_from_int(1, 9))


def test_truncate_mantissa_rounds_toward_zero():
    assert truncate_mantissa(7, 1) == 3
    assert truncate_mantissa(-7, 1) == -3
    assert truncate_mantissa(3, -2) == 12


def test_shift_is_exact():
    a = fx_from_rational(3, 4, 4)
    assert fx_shift(a, 3).value == 6
    assert fx_shift(a, -3).value == Fraction(3, 32)


def test_add_sub():
    a, b = fx_from_rational(3, 4, 4), fx_from_rational(5, 8, 6)
    assert fx_add(a, b).value == Fraction(11, 8)
    assert fx_sub(a, b).value == Fraction(1, 8)


def test_bits_rendering():
    assert fx_from_rational(5, 4, 3, 4).bits() == "1.010"


nonneg = st.builds(lambda m, f: FixedPoint(m, f, max(m.bit_length(), f)),
                   st.integers(0, 2**40), st.integers(0, 40))


@given(nonneg, st.integers(0, 40))
def test_truncation_never_increases_nonnegative_values(a, b):
    t = fx_truncate(a, b)
    assert t.value <= a.value
    assert a.value - t.value < Fraction(1, 2**b)


@given(nonneg, st.integers(0, 20))
def test_widen_then_truncate_round_trips(a, extra):
    wide = fx_truncate(a, a.frac_bits + extra)
    assert fx_truncate(wide, a.frac_bits) == a


@given(st.integers(0, 2**20), st.integers(0, 2**20), st.integers(0, 24))
def test_product_error_below_one_ulp(ma, mb, f):
    a, b = FixedPoint(ma, 10, 21), FixedPoint(mb, 10, 21)
    out = fx_mul(a, b, f, width=f + 22)
    assert 0 <= a.value * b.value - out.value < Fraction(1, 2**f)


unit = st.tuples(st.integers(-(2**12), 2**12), st.integers(-(2**12), 2**12)).filter(
    lambda p: p[0] ** 2 + p[1] ** 2 < 2**24)


@given(unit, unit)
def test_complex_product_stays_in_unit_disk(p, q):
    f = 12
    a = ComplexFixed(FixedPoint(p[0], f, f + 1), FixedPoint(p[1], f, f + 1))
    b = ComplexFixed(FixedPoint(q[0], f, f + 1), FixedPoint(q[1], f, f + 1))
    assert cfx_mul(a, b, f, f + 1).modulus_squared() < 1
