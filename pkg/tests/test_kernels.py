"""The compiled loops and the numpy fallback implement the same bits."""
import numpy as np
import pytest

from r2f2 import arrays
from r2f2 import kernels as K
from r2f2.backends import Binary32, Binary64, Fixed, R2F2Adaptive, R2F2Static, parse_backend
from r2f2.fixedformat import E5M10
from r2f2.flexformat import FormatDescriptor

WIDTHS = [(3, 12), (4, 11), (5, 10), (6, 9), (2, 3), (8, 23)]


def _values(seed, n=50_000):
    rng = np.random.default_rng(seed)
    x = np.exp(rng.uniform(np.log(1e-30), np.log(1e30), n)) * rng.choice([-1, 1], n)
    x[:8] = [0.0, -0.0, np.inf, -np.inf, np.nan, 1.0, 65504.0, 65520.0]
    return x


@pytest.mark.parametrize("ebits,mbits", WIDTHS)
def test_quantize_paths_agree(ebits, mbits):
    x = _values(ebits * 100 + mbits)
    a, fa = arrays.quantize_array_nb(x, ebits, mbits)
    b, fb = arrays.quantize_array_np(x, ebits, mbits)
    assert np.array_equal(a, b) and np.array_equal(fa, fb)


@pytest.mark.parametrize("ebits,mbits,nflex",
                         [(e, m, f) for e, m in WIDTHS for f in (0, 1, 3) if f < m])
def test_multiply_paths_agree(ebits, mbits, nflex):
    x, y = _values(1), _values(2)
    for approx in (False, True):
        a, fa = arrays.mul_array_nb(x, y, ebits, mbits, nflex, approx)
        b, fb = arrays.mul_array_np(x, y, ebits, mbits, nflex, approx)
        assert np.array_equal(a, b, equal_nan=True) and np.array_equal(fa, fb)


def test_field_multiply_paths_agree():
    rng = np.random.default_rng(3)
    n = 20_000
    f = lambda: (rng.integers(0, 2, n), rng.integers(0, 15, n), rng.integers(0, 2 ** 11, n))
    a, b = f(), f()
    z = np.zeros(n, dtype=np.int64)
    ref = arrays.mul_fields_np((*a, z), (*b, z), 4, 11, 2, True)
    out = [np.empty(n, dtype=np.int64) for _ in range(4)]
    K.mul_fields_loop(*[np.asarray(v, dtype=np.int64) for v in (*a, *b)], 4, 11, 2, True, *out)
    assert all(np.array_equal(p, q) for p, q in zip(ref, out))


def test_width_validation():
    with pytest.raises(ValueError):
        arrays.quantize_array(np.ones(3), 1, 4)
    with pytest.raises(ValueError):
        arrays.mul_array(np.ones(3), np.ones(3), 4, 31)
    with pytest.raises(ValueError):
        arrays.mul_array(np.ones(3), np.ones(3), 4, 3, nflex=3)


def test_shapes_are_preserved():
    x = np.arange(12.0).reshape(3, 4)
    out, flags = arrays.mul_array(x, 2.0, 5, 10)
    assert out.shape == (3, 4) and np.array_equal(out, 2 * x)


def test_adaptive_event_buffer_overflow():
    # far more events than one buffer chunk holds
    n = 20_000
    x = np.tile([8.0, 0.75], n // 2)
    st = K.new_state(0)
    out, ev = arrays.adaptive_mul_array(x, x, st, 3, 9, 3)
    assert len(ev) > 4096
    assert np.array_equal(out, x * x)
    assert st[K.ST_MULTS] == n


def test_backends():
    a, b = np.array([3.0, 300.0]), np.array([5.0, 300.0])
    assert np.array_equal(Binary64().mul(a, b), a * b)
    assert Binary32().mul(np.array([0.1]), np.array([0.1]))[0] == float(np.float32(0.1) * np.float32(0.1))
    fx = Fixed(E5M10)
    out = fx.mul(a, b)
    assert out[0] == 15.0 and np.isinf(out[1]) and fx.range_events == 1 and fx.mult_count == 2
    st = R2F2Static(FormatDescriptor(3, 9, 3, 3))
    assert st.mul(np.array([256.0]), np.array([300.0]))[0] == 76800.0
    ad = R2F2Adaptive(FormatDescriptor(3, 9, 3))
    assert np.array_equal(ad.mul(a, np.array([5.0, 256.0])), [15.0, 76800.0])
    assert ad.summary()["event_count"] == 3 and ad.fresh().state.k == 0


@pytest.mark.parametrize("text,cls", [("binary64", Binary64), ("float32", Binary32),
                                      ("E5M10", Fixed), ("<3,9,3>@2", R2F2Static)])
def test_parse_backend(text, cls):
    assert isinstance(parse_backend(text), cls)


def test_parse_backend_rejects():
    with pytest.raises(ValueError):
        parse_backend("quad")
    assert isinstance(parse_backend("<3,9,3>", adaptive=True), R2F2Adaptive)
