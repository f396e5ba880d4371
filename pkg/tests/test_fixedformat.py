import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from r2f2 import oracle
from r2f2.fixedformat import (E5M10, FixedFormat, max_value, multiply_array, multiply_fixed,
                              quantize, quantize_array)


def test_e5m10_constants():
    assert E5M10.width == 16 and E5M10.bias == 15 and str(E5M10) == "E5M10"
    assert max_value(E5M10) == 65504.0
    assert FixedFormat.parse("e5m9") == FixedFormat(5, 9)
    with pytest.raises(ValueError):
        FixedFormat.parse("5,10")
    with pytest.raises(ValueError):
        FixedFormat(1, 10)


def test_matches_float16_on_normal_range():
    # binary16 differs only below the smallest normal (it has subnormals)
    rng = np.random.default_rng(0)
    x = np.exp(rng.uniform(np.log(2.0 ** -14), np.log(65000.0), 200_000))
    got, flags = quantize_array(x, E5M10)
    assert np.array_equal(got, x.astype(np.float16).astype(np.float64))


def test_overflow_product():
    v, fl = multiply_fixed(300.0, 300.0, E5M10)
    assert v == np.inf and fl.overflowed
    v, fl = multiply_fixed(1e-3, 1e-3, E5M10)
    assert v == 0.0 and fl.underflowed


def test_multiply_array_flags():
    out, fl = multiply_array(np.array([2.0, 1e5, 300.0]), np.array([3.0, 1.0, 300.0]), E5M10)
    assert out[0] == 6.0 and fl[0] == 0
    assert np.isinf(out[1]) and fl[1] & 1        # operand out of range
    assert np.isinf(out[2]) and fl[2] & 1        # product out of range


@given(st.integers(2, 6), st.integers(1, 8), st.floats(-1e6, 1e6), st.floats(-1e6, 1e6))
def test_product_is_correctly_rounded(e, m, a, b):
    f = FixedFormat(e, m)
    qa, fa = quantize(a, f)
    qb, fb = quantize(b, f)
    if fa.overflowed or fb.overflowed:
        return
    got, fl = multiply_fixed(qa, qb, f)
    enum = oracle.EnumeratedFormat(e, m)
    ref, status = enum.quantize(np.array([qa * qb]))
    assert got == ref[0]
    assert fl.overflowed == (status[0] == 1) and fl.underflowed == (status[0] == 2)
