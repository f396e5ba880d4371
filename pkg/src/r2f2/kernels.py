"""Bit-level kernels shared by every arithmetic path.

All values are handled as integer fields ``(sign, efield, mfield)`` for a
format with ``ebits`` exponent bits and ``mbits`` fraction bits.  Field
conventions: efield 0 is zero, efield all-ones is the overflow sentinel, no
subnormals.

The scalar functions are numba-compiled when ``R2F2_NUMBA`` allows it and are
plain Python otherwise.  Array entry points live in :mod:`r2f2.arrays`.
"""
import math

import numpy as np

from ._jit import jit

# flag bits
OVERFLOW = 1
UNDERFLOW = 2
INEXACT = 4
CARRY = 8
ROUND_UP = 16
APPROX = 32
SATURATED = 64
RANGE = OVERFLOW | UNDERFLOW

# adjustment event kinds
EV_OVERFLOW_WIDEN = 0
EV_UNDERFLOW_WIDEN = 1
EV_REDUNDANCY_NARROW = 2

# AdjustState counters, stored in one int64 vector so kernels can mutate it
ST_K = 0
ST_OVERFLOW = 1
ST_UNDERFLOW = 2
ST_REDUNDANCY = 3
ST_RETRY = 4
ST_MULTS = 5
ST_SATURATED = 6
ST_SIZE = 7

MAX_MBITS = 30


@jit
def bias_of(ebits):
    return (1 << (ebits - 1)) - 1


@jit
def quantize_fields(x, ebits, mbits):
    """Round ``x`` to nearest-even under (ebits, mbits).

    Returns ``(sign, efield, mfield, flags)``.  Overflow yields the sentinel,
    underflow (after rounding) flushes to zero.
    """
    sign = 1 if (x < 0.0 or (x == 0.0 and math.copysign(1.0, x) < 0.0)) else 0
    ax = abs(x)
    if ax == 0.0:
        return sign, 0, 0, 0
    top = (1 << ebits) - 1
    if math.isinf(ax) or math.isnan(ax):
        return sign, top, 0, OVERFLOW
    frac, exp2 = math.frexp(ax)
    scaled = math.ldexp(frac, mbits + 1)
    q = int(round(scaled))
    flags = 0
    if q != scaled:
        flags |= INEXACT
    unbiased = exp2 - 1
    if q == (1 << (mbits + 1)):
        q >>= 1
        unbiased += 1
    efield = unbiased + bias_of(ebits)
    if efield >= top:
        return sign, top, 0, flags | OVERFLOW
    if efield <= 0:
        return sign, 0, 0, flags | UNDERFLOW
    return sign, efield, q - (1 << mbits), flags


@jit
def decode_fields(sign, efield, mfield, ebits, mbits):
    """Exact value of the fields; the sentinel decodes to +-inf."""
    if efield == 0:
        val = 0.0
    elif efield == (1 << ebits) - 1:
        val = math.inf
    else:
        val = math.ldexp(float((1 << mbits) + mfield),
                         efield - bias_of(ebits) - mbits)
    return -val if sign else val


@jit
def mantissa_mul_approx(sig_a, sig_b, nflex):
    """Truncated significand product.

    Each significand is split as ``A * 2**nflex + P``.  The result keeps
    ``A*B`` shifted by ``nflex`` plus the per-cycle partial products of the
    flexible bits against the fixed parts, and only the leading cross term
    ``p1*q1`` (at shift ``nflex - 2``).  The value approximates
    ``sig_a * sig_b / 2**nflex`` from below.
    """
    if nflex == 0:
        return sig_a * sig_b
    mask = (1 << nflex) - 1
    hi_a = sig_a >> nflex
    hi_b = sig_b >> nflex
    lo_a = sig_a & mask
    lo_b = sig_b & mask
    res = (hi_a * hi_b) << nflex
    acc = 0
    for j in range(1, nflex + 1):
        shift = nflex - j
        p = (lo_a >> shift) & 1
        q = (lo_b >> shift) & 1
        acc += (q * hi_a + p * hi_b) << shift
    if nflex >= 2:
        p1 = (lo_a >> (nflex - 1)) & 1
        q1 = (lo_b >> (nflex - 1)) & 1
        acc += (p1 & q1) << (nflex - 2)
    return res + acc


@jit
def normalize_round(raw, frac_bits, mbits):
    """Normalize a significand product in [1, 4) and round it to ``mbits``.

    ``raw`` carries ``frac_bits`` fraction bits.  Returns
    ``(mfield, carry, round_up)`` where ``carry`` is the bit fed into the
    exponent sum (set for products in [2, 4) or when rounding overflows the
    significand) and ``round_up`` marks the latter case.
    """
    carry = (raw >> (frac_bits + 1)) & 1
    shift = frac_bits - mbits + carry
    q = raw >> shift
    rem = raw & ((1 << shift) - 1)
    half = 1 << (shift - 1)
    if rem > half or (rem == half and (q & 1) == 1):
        q += 1
    round_up = 0
    if q == (1 << (mbits + 1)):
        q >>= 1
        round_up = 1
        carry = 1
    return q - (1 << mbits), carry, round_up


@jit
def exponent_add(e1, e2, ebits, carry):
    """Biased exponent sum with the single-bit bias subtraction.

    ``e1 + e2 - bias`` is computed as ``e1 + e2 - 2**(ebits-1) + 1`` (plus the
    mantissa carry).  Returns ``(e_res, overflow, underflow)``.
    """
    lead = 1 << (ebits - 1)
    partial = e1 + e2 + carry - lead
    e_res = partial + 1
    overflow = e_res >= (1 << ebits) - 1
    underflow = e_res <= 0
    return e_res, overflow, underflow


@jit
def mul_fields(sa, ea, ma, sb, eb, mb, ebits, mbits, nflex, approx):
    """Multiply two encoded operands of one format.

    ``nflex`` is the number of flexible mantissa bits (only used when
    ``approx`` is set).  Returns ``(sign, efield, mfield, flags)``.
    """
    sign = sa ^ sb
    if ea == 0 or eb == 0:
        return sign, 0, 0, 0
    sig_a = (1 << mbits) | ma
    sig_b = (1 << mbits) | mb
    flags = 0
    if approx:
        flags |= APPROX
        raw = mantissa_mul_approx(sig_a, sig_b, nflex)
        frac_bits = 2 * mbits - nflex
    else:
        raw = sig_a * sig_b
        frac_bits = 2 * mbits
    mfield, carry, round_up = normalize_round(raw, frac_bits, mbits)
    if carry:
        flags |= CARRY
    if round_up:
        flags |= ROUND_UP
    e_res, ovf, unf = exponent_add(ea, eb, ebits, carry)
    if ovf:
        return sign, (1 << ebits) - 1, 0, flags | OVERFLOW
    if unf:
        return sign, 0, 0, flags | UNDERFLOW
    return sign, e_res, mfield, flags


@jit
def is_redundant(efield, ebits):
    """Two bits under the exponent MSB both equal its complement."""
    if ebits < 3 or efield == 0 or efield == (1 << ebits) - 1:
        return False
    msb = (efield >> (ebits - 1)) & 1
    b1 = (efield >> (ebits - 2)) & 1
    b2 = (efield >> (ebits - 3)) & 1
    return b1 != msb and b2 != msb


@jit
def adaptive_mul_one(x, y, state, eb, mb, fx, approx, step, events, nev):
    """One logical multiplication through the self-adjusting unit.

    ``state`` is the counter vector (see ``ST_*``) and is updated in place;
    events are appended to ``events[nev:]`` (rows: step, kind, old_k, new_k).
    The caller guarantees ``fx + 1`` free rows.  Returns ``(value, nev)``.
    """
    state[ST_MULTS] += 1
    while True:
        k = int(state[ST_K])
        ebits = eb + k
        mbits = mb + fx - k
        sa, ea, ma, fa = quantize_fields(x, ebits, mbits)
        sb, e_b, m_b, fb = quantize_fields(y, ebits, mbits)
        rng = (fa | fb) & RANGE
        s = sa ^ sb
        e = 0
        m = 0
        if rng == 0:
            s, e, m, fr = mul_fields(sa, ea, ma, sb, e_b, m_b, ebits, mbits,
                                     fx - k, approx)
            rng = fr & RANGE
        if rng != 0:
            if k < fx:
                if rng & OVERFLOW:
                    kind = EV_OVERFLOW_WIDEN
                    state[ST_OVERFLOW] += 1
                else:
                    kind = EV_UNDERFLOW_WIDEN
                    state[ST_UNDERFLOW] += 1
                events[nev, 0] = step
                events[nev, 1] = kind
                events[nev, 2] = k
                events[nev, 3] = k + 1
                nev += 1
                state[ST_K] = k + 1
                state[ST_RETRY] += 1
                continue
            state[ST_SATURATED] += 1
            if rng & OVERFLOW:
                return (-math.inf if s else math.inf), nev
            return (-0.0 if s else 0.0), nev
        if (k > 0 and is_redundant(ea, ebits) and is_redundant(e_b, ebits)
                and is_redundant(e, ebits)):
            events[nev, 0] = step
            events[nev, 1] = EV_REDUNDANCY_NARROW
            events[nev, 2] = k
            events[nev, 3] = k - 1
            nev += 1
            state[ST_K] = k - 1
            state[ST_REDUNDANCY] += 1
        return decode_fields(s, e, m, ebits, mbits), nev


@jit
def adaptive_mul_loop(x, y, out, start, state, eb, mb, fx, approx, step,
                      events, nev):
    """Sequential adaptive products ``out[i] = x[i] * y[i]`` from ``start``.

    Stops early when the event buffer cannot take another worst-case
    multiplication.  Returns ``(next_index, nev)``.
    """
    n = x.shape[0]
    cap = events.shape[0]
    i = start
    while i < n:
        if nev + fx + 1 > cap:
            return i, nev
        v, nev = adaptive_mul_one(x[i], y[i], state, eb, mb, fx, approx,
                                  step, events, nev)
        out[i] = v
        i += 1
    return i, nev


@jit
def quantize_loop(x, ebits, mbits, out, flags):
    for i in range(x.shape[0]):
        s, e, m, f = quantize_fields(x[i], ebits, mbits)
        out[i] = decode_fields(s, e, m, ebits, mbits)
        flags[i] = f


@jit
def mul_loop(x, y, ebits, mbits, nflex, approx, out, flags):
    """Static-format product of two value arrays (operands encoded first)."""
    for i in range(x.shape[0]):
        sa, ea, ma, fa = quantize_fields(x[i], ebits, mbits)
        sb, eb, mb, fb = quantize_fields(y[i], ebits, mbits)
        rng = (fa | fb) & RANGE
        if rng != 0:
            flags[i] = rng
            if rng & OVERFLOW:
                out[i] = -math.inf if (sa ^ sb) else math.inf
            else:
                out[i] = -0.0 if (sa ^ sb) else 0.0
            continue
        s, e, m, f = mul_fields(sa, ea, ma, sb, eb, mb, ebits, mbits, nflex,
                                approx)
        out[i] = decode_fields(s, e, m, ebits, mbits)
        flags[i] = f


@jit
def mul_fields_loop(sa, ea, ma, sb, eb, mb, ebits, mbits, nflex, approx,
                    so, eo, mo, fo):
    """Field-level product over encoded operand arrays."""
    for i in range(sa.shape[0]):
        s, e, m, f = mul_fields(sa[i], ea[i], ma[i], sb[i], eb[i], mb[i],
                                ebits, mbits, nflex, approx)
        so[i] = s
        eo[i] = e
        mo[i] = m
        fo[i] = f


def new_state(k=0):
    st = np.zeros(ST_SIZE, dtype=np.int64)
    st[ST_K] = k
    return st
