"""Fixed ExMy formats used as baselines.

Same conventions as the flexible format: bias ``2**(e-1) - 1``, all-ones
exponent reserved, no subnormals.  E5M10 therefore matches IEEE binary16
everywhere except below 2**-14, where it flushes to zero.
"""
from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from . import arrays
from . import kernels as K
from .flexformat import EncodeFlags

# float64 holds the exact product of two significands up to this width
_EXACT_PRODUCT_MBITS = 26


@dataclass(frozen=True)
class FixedFormat:
    e: int
    m: int

    def __post_init__(self):
        if self.e < 2 or self.m < 1:
            raise ValueError(f"E{self.e}M{self.m}: need e >= 2 and m >= 1")
        if self.m > _EXACT_PRODUCT_MBITS:
            raise ValueError(f"E{self.e}M{self.m}: mantissa wider than {_EXACT_PRODUCT_MBITS} bits")

    @property
    def bias(self) -> int:
        return (1 << (self.e - 1)) - 1

    @property
    def width(self) -> int:
        return 1 + self.e + self.m

    def __str__(self) -> str:
        return f"E{self.e}M{self.m}"

    @classmethod
    def parse(cls, text: str) -> "FixedFormat":
        m = re.fullmatch(r"\s*[Ee](\d+)[Mm](\d+)\s*", text)
        if m is None:
            raise ValueError(f"cannot parse fixed format {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))


E5M10 = FixedFormat(5, 10)


def max_value(f: FixedFormat) -> float:
    return float(K.decode_fields(0, (1 << f.e) - 2, (1 << f.m) - 1, f.e, f.m))


def quantize(x: float, f: FixedFormat) -> tuple[float, EncodeFlags]:
    s, e, m, bits = K.quantize_fields(float(x), f.e, f.m)
    return float(K.decode_fields(s, e, m, f.e, f.m)), EncodeFlags.from_bits(int(bits))


def multiply_fixed(a: float, b: float, f: FixedFormat) -> tuple[float, EncodeFlags]:
    """Correctly rounded product of two values already representable in ``f``.

    The product of two significands of at most 27 bits is exact in binary64,
    so a single rounding to ``f`` gives the RNE result.
    """
    return quantize(float(a) * float(b), f)


def quantize_array(x, f: FixedFormat):
    """Vectorized :func:`quantize`; returns (values, flag bits)."""
    return arrays.quantize_array(x, f.e, f.m)


def multiply_array(a, b, f: FixedFormat):
    """Quantize both operands to ``f``, multiply, round the product to ``f``.

    Range violations of an operand mark the result like a product violation.
    Returns (values, flag bits).
    """
    qa, fa = quantize_array(a, f)
    qb, fb = quantize_array(b, f)
    with np.errstate(invalid="ignore", over="ignore"):
        prod = qa * qb
    out, fp = quantize_array(prod, f)
    return out, (fa | fb | fp) & K.RANGE | (fp & K.INEXACT)
