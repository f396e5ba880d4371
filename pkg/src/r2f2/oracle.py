"""Reference arithmetic written independently of the kernels.

Two routes: exact rational rounding with :class:`fractions.Fraction`, and a
brute-force nearest-value search over an enumerated format.  Both follow the
documented conventions (RNE with unbounded exponent, then overflow to the
sentinel / flush to zero) and are meant for checking, not speed.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

ZERO, NORMAL, OVF, UNF = "zero", "normal", "overflow", "underflow"


def _floor_log2(a: Fraction) -> int:
    e = a.numerator.bit_length() - a.denominator.bit_length()
    if Fraction(2) ** e > a:
        e -= 1
    elif Fraction(2) ** (e + 1) <= a:
        e += 1
    return e


def round_rational(q: Fraction, ebits: int, mbits: int):
    """RNE-round an exact rational to (ebits, mbits).

    Returns ``(sign, efield, mfield, status)`` with status one of ``ZERO``,
    ``NORMAL``, ``OVF``, ``UNF``.
    """
    q = Fraction(q)
    sign = 1 if q < 0 else 0
    a = abs(q)
    top = 2 ** ebits - 1
    if a == 0:
        return sign, 0, 0, ZERO
    e = _floor_log2(a)
    scaled = a / Fraction(2) ** e * 2 ** mbits
    n = scaled.numerator // scaled.denominator
    rem = scaled - n
    if rem > Fraction(1, 2) or (rem == Fraction(1, 2) and n % 2 == 1):
        n += 1
    if n == 2 ** (mbits + 1):
        n //= 2
        e += 1
    efield = e + 2 ** (ebits - 1) - 1
    if efield >= top:
        return sign, top, 0, OVF
    if efield <= 0:
        return sign, 0, 0, UNF
    return sign, efield, n - 2 ** mbits, NORMAL


def value_of(sign: int, efield: int, mfield: int, ebits: int, mbits: int) -> Fraction:
    """Exact value of a well-formed normal or zero encoding."""
    if efield == 0:
        return Fraction(0)
    bias = 2 ** (ebits - 1) - 1
    v = Fraction(2 ** mbits + mfield, 2 ** mbits) * Fraction(2) ** (efield - bias)
    return -v if sign else v


def multiply_rational(a, b, ebits: int, mbits: int):
    """Correctly rounded product of two field tuples ``(s, e, m)``."""
    return round_rational(value_of(*a, ebits, mbits) * value_of(*b, ebits, mbits), ebits, mbits)


def approx_raw_rational(sig_a: int, sig_b: int, nflex: int) -> int:
    """Truncated product from the closed form: exact product minus the
    dropped low cross terms, scaled down by ``2**nflex``."""
    lo_a = sig_a % 2 ** nflex
    lo_b = sig_b % 2 ** nflex
    kept = 0
    if nflex >= 2:
        kept = (lo_a >> (nflex - 1)) * (lo_b >> (nflex - 1)) * 2 ** (2 * nflex - 2)
    num = sig_a * sig_b - lo_a * lo_b + kept
    assert num % 2 ** nflex == 0
    return num // 2 ** nflex


def multiply_approx_rational(a, b, ebits: int, mbits: int, nflex: int):
    """Approx-mode product: round the truncated significand product as if it
    were exact."""
    sa, ea, ma = a
    sb, eb, mb = b
    if ea == 0 or eb == 0:
        return sa ^ sb, 0, 0, ZERO
    raw = approx_raw_rational(2 ** mbits + ma, 2 ** mbits + mb, nflex)
    sig = Fraction(raw, 2 ** (2 * mbits - nflex))
    bias = 2 ** (ebits - 1) - 1
    q = sig * Fraction(2) ** (ea + eb - 2 * bias)
    s, e, m, st = round_rational(q, ebits, mbits)
    return sa ^ sb, e, m, st


def well_formed_encodings(ebits: int, mbits: int):
    """Every (sign, efield, mfield) that is zero or normal."""
    out = [(s, 0, 0) for s in (0, 1)]
    for s in (0, 1):
        for e in range(1, 2 ** ebits - 1):
            for m in range(2 ** mbits):
                out.append((s, e, m))
    return out


class EnumeratedFormat:
    """All positive normals of a small format, for nearest-value search."""

    def __init__(self, ebits: int, mbits: int):
        if ebits + mbits > 24:
            raise ValueError("format too large to enumerate")
        self.ebits, self.mbits = ebits, mbits
        bias = 2 ** (ebits - 1) - 1
        emin, emax = 1 - bias, 2 ** ebits - 2 - bias
        vals, efs, mfs = [], [], []
        for e in range(1, 2 ** ebits - 1):
            for m in range(2 ** mbits):
                vals.append(float(np.ldexp(2 ** mbits + m, e - bias - mbits)))
                efs.append(e)
                mfs.append(m)
        # virtual neighbours: last step below the smallest normal (odd),
        # first step above the largest (even)
        low = float(np.ldexp(2 ** (mbits + 1) - 1, emin - 1 - mbits))
        high = float(np.ldexp(1.0, emax + 1))
        self.values = np.array([low] + vals + [high])
        self.efield = np.array([0] + efs + [2 ** ebits - 1])
        self.mfield = np.array([2 ** mbits - 1] + mfs + [0])
        self.max = vals[-1]
        self.min = vals[0]

    def quantize(self, x):
        """Nearest-even quantization by search.  Returns (values, status codes)
        with status 0 normal/zero, 1 overflow, 2 underflow."""
        x = np.asarray(x, dtype=np.float64)
        ax = np.abs(x)
        v = self.values
        idx = np.clip(np.searchsorted(v, ax), 1, len(v) - 1)
        lo, hi = v[idx - 1], v[idx]
        dlo, dhi = ax - lo, hi - ax
        pick_hi = (dhi < dlo) | ((dhi == dlo) & (self.mfield[idx] % 2 == 0))
        j = np.where(pick_hi, idx, idx - 1)
        j = np.where(ax >= v[-1], len(v) - 1, j)
        j = np.where(ax < v[0], 0, j)
        out = v[j].copy()
        status = np.zeros(x.shape, dtype=np.int64)
        status[j == len(v) - 1] = 1
        status[j == 0] = 2
        out[j == len(v) - 1] = np.inf
        out[j == 0] = 0.0
        out[ax == 0] = 0.0
        status[ax == 0] = 0
        return np.copysign(out, x), status
