"""Array entry points over the field kernels.

With numba enabled the loops in :mod:`r2f2.kernels` run compiled.  Without
it, the static kernels below are vectorized numpy implementations of the
same bit semantics; the adaptive stream is inherently sequential and falls
back to the interpreted loop.
"""
import numpy as np

from . import kernels as K
from ._jit import USE_NUMBA

_EVENT_CHUNK = 4096


def _check_widths(ebits, mbits, nflex=0):
    if ebits < 2 or mbits < 1:
        raise ValueError(f"bad widths ebits={ebits} mbits={mbits}")
    if not 0 <= nflex < mbits:
        raise ValueError(f"nflex={nflex} must lie in [0, mbits={mbits})")
    if mbits > K.MAX_MBITS:
        raise ValueError(f"mbits={mbits} exceeds the int64 datapath limit {K.MAX_MBITS}")


# -- vectorized numpy versions ---------------------------------------------

def quantize_fields_np(x, ebits, mbits):
    """Vectorized :func:`r2f2.kernels.quantize_fields`."""
    x = np.asarray(x, dtype=np.float64)
    sign = np.signbit(x).astype(np.int64)
    ax = np.abs(x)
    top = (1 << ebits) - 1
    with np.errstate(invalid="ignore"):
        frac, exp2 = np.frexp(ax)
        scaled = np.ldexp(frac, mbits + 1)
        q = np.rint(scaled)
    flags = np.where(q != scaled, K.INEXACT, 0).astype(np.int64)
    unbiased = exp2.astype(np.int64) - 1
    wrap = q == float(1 << (mbits + 1))
    q = np.where(wrap, q / 2, q)
    unbiased = unbiased + wrap
    efield = unbiased + K.bias_of(ebits)
    zero = ax == 0.0
    inf = ~np.isfinite(ax)
    ovf = ((efield >= top) & ~zero) | inf
    unf = (efield <= 0) & ~zero & ~inf
    q = np.where(inf, float(1 << mbits), q)
    mfield = np.where(zero | ovf | unf, 0, q.astype(np.int64) - (1 << mbits))
    efield = np.where(zero | unf, 0, np.where(ovf, top, efield))
    flags = np.where(zero | inf, 0, flags)
    flags = flags | np.where(ovf, K.OVERFLOW, 0) | np.where(unf, K.UNDERFLOW, 0)
    return sign, efield, mfield, flags


def decode_fields_np(sign, efield, mfield, ebits, mbits):
    top = (1 << ebits) - 1
    sig = ((1 << mbits) + mfield).astype(np.float64)
    val = np.ldexp(sig, (efield - K.bias_of(ebits) - mbits).astype(np.int64))
    val = np.where(efield == 0, 0.0, np.where(efield == top, np.inf, val))
    return np.where(sign == 1, -val, val)


def mantissa_mul_approx_np(sig_a, sig_b, nflex):
    if nflex == 0:
        return sig_a * sig_b
    mask = (1 << nflex) - 1
    hi_a, hi_b = sig_a >> nflex, sig_b >> nflex
    lo_a, lo_b = sig_a & mask, sig_b & mask
    res = (hi_a * hi_b) << nflex
    for j in range(1, nflex + 1):
        shift = nflex - j
        p = (lo_a >> shift) & 1
        q = (lo_b >> shift) & 1
        res = res + ((q * hi_a + p * hi_b) << shift)
    if nflex >= 2:
        p1 = (lo_a >> (nflex - 1)) & 1
        q1 = (lo_b >> (nflex - 1)) & 1
        res = res + ((p1 & q1) << (nflex - 2))
    return res


def mul_fields_np(a, b, ebits, mbits, nflex, approx):
    """Vectorized :func:`r2f2.kernels.mul_fields` on field tuples."""
    sa, ea, ma, _ = a
    sb, eb, mb, _ = b
    sign = sa ^ sb
    zero = (ea == 0) | (eb == 0)
    sig_a = (1 << mbits) | ma
    sig_b = (1 << mbits) | mb
    flags = np.zeros(sign.shape, dtype=np.int64)
    if approx:
        raw = mantissa_mul_approx_np(sig_a, sig_b, nflex)
        frac_bits = 2 * mbits - nflex
        flags |= K.APPROX
    else:
        raw = sig_a * sig_b
        frac_bits = 2 * mbits
    carry = (raw >> (frac_bits + 1)) & 1
    shift = frac_bits - mbits + carry
    q = raw >> shift
    rem = raw & ((np.int64(1) << shift) - 1)
    half = np.int64(1) << (shift - 1)
    up = (rem > half) | ((rem == half) & ((q & 1) == 1))
    q = q + up
    round_up = q == (1 << (mbits + 1))
    q = np.where(round_up, q >> 1, q)
    carry = carry | round_up
    mfield = q - (1 << mbits)
    e_res = ea + eb + carry - (1 << (ebits - 1)) + 1
    top = (1 << ebits) - 1
    ovf = (e_res >= top) & ~zero
    unf = (e_res <= 0) & ~zero
    flags |= np.where(carry == 1, K.CARRY, 0) | np.where(round_up, K.ROUND_UP, 0)
    flags |= np.where(ovf, K.OVERFLOW, 0) | np.where(unf, K.UNDERFLOW, 0)
    flags = np.where(zero, 0, flags)
    efield = np.where(zero | unf, 0, np.where(ovf, top, e_res))
    mfield = np.where(zero | unf | ovf, 0, mfield)
    return sign, efield, mfield, flags


def quantize_array_np(x, ebits, mbits):
    f = quantize_fields_np(x, ebits, mbits)
    return decode_fields_np(f[0], f[1], f[2], ebits, mbits), f[3]


def mul_array_np(x, y, ebits, mbits, nflex=0, approx=False):
    a = quantize_fields_np(x, ebits, mbits)
    b = quantize_fields_np(y, ebits, mbits)
    s, e, m, f = mul_fields_np(a, b, ebits, mbits, nflex, approx)
    out = decode_fields_np(s, e, m, ebits, mbits)
    rng = (a[3] | b[3]) & K.RANGE
    bad = rng != 0
    sign = a[0] ^ b[0]
    sat = np.where(rng & K.OVERFLOW, np.inf, 0.0)
    sat = np.where(sign == 1, -sat, sat)
    out = np.where(bad, sat, out)
    f = np.where(bad, rng, f)
    return out, f


# -- compiled loops ---------------------------------------------------------

def quantize_array_nb(x, ebits, mbits):
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.empty_like(x)
    flags = np.empty(x.shape, dtype=np.int64)
    K.quantize_loop(x, ebits, mbits, out, flags)
    return out, flags


def mul_array_nb(x, y, ebits, mbits, nflex=0, approx=False):
    x = np.ascontiguousarray(x, dtype=np.float64).ravel()
    y = np.ascontiguousarray(y, dtype=np.float64).ravel()
    out = np.empty_like(x)
    flags = np.empty(x.shape, dtype=np.int64)
    K.mul_loop(x, y, ebits, mbits, nflex, approx, out, flags)
    return out, flags


# -- public dispatch ----------------------------------------------------------

def quantize_array(x, ebits, mbits):
    """Round every element to (ebits, mbits); returns (values, flags)."""
    _check_widths(ebits, mbits)
    x = np.asarray(x, dtype=np.float64)
    shape = x.shape
    fn = quantize_array_nb if USE_NUMBA else quantize_array_np
    out, flags = fn(x.ravel(), ebits, mbits)
    return out.reshape(shape), flags.reshape(shape)


def mul_array(x, y, ebits, mbits, nflex=0, approx=False):
    """Encode, multiply and decode elementwise under one static format."""
    _check_widths(ebits, mbits, nflex)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                               np.asarray(y, dtype=np.float64))
    shape = x.shape
    fn = mul_array_nb if USE_NUMBA else mul_array_np
    out, flags = fn(x.ravel(), y.ravel(), ebits, mbits, nflex, bool(approx))
    return out.reshape(shape), flags.reshape(shape)


def mul_fields_array(a, b, ebits, mbits, nflex=0, approx=False):
    """Multiply encoded operands given as ``(sign, efield, mfield)`` arrays.

    Returns ``(sign, efield, mfield, flags)``.
    """
    _check_widths(ebits, mbits, nflex)
    a = [np.ascontiguousarray(v, dtype=np.int64).ravel() for v in a[:3]]
    b = [np.ascontiguousarray(v, dtype=np.int64).ravel() for v in b[:3]]
    if not USE_NUMBA:
        z = np.zeros_like(a[0])
        return mul_fields_np((*a, z), (*b, z), ebits, mbits, nflex, bool(approx))
    out = [np.empty_like(a[0]) for _ in range(4)]
    K.mul_fields_loop(*a, *b, ebits, mbits, nflex, bool(approx), *out)
    return tuple(out)


def adaptive_mul_array(x, y, state, eb, mb, fx, approx=True, step=0):
    """Products through the self-adjusting unit, in index order.

    ``state`` is mutated.  Returns ``(values, events)`` with events as an
    ``(n, 4)`` int64 array of (step, kind, old_k, new_k).
    """
    _check_widths(eb, mb + fx)
    x, y = np.broadcast_arrays(np.asarray(x, dtype=np.float64),
                               np.asarray(y, dtype=np.float64))
    shape = x.shape
    xf = np.ascontiguousarray(x).ravel()
    yf = np.ascontiguousarray(y).ravel()
    out = np.empty_like(xf)
    buf = np.empty((_EVENT_CHUNK, 4), dtype=np.int64)
    chunks = []
    i = 0
    n = xf.shape[0]
    while True:
        i, nev = K.adaptive_mul_loop(xf, yf, out, i, state, eb, mb, fx,
                                     bool(approx), step, buf, 0)
        if nev:
            chunks.append(buf[:nev].copy())
        if i >= n:
            break
    events = np.concatenate(chunks) if chunks else np.empty((0, 4), dtype=np.int64)
    return out.reshape(shape), events
