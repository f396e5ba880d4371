"""Flexible floating-point representation.

A descriptor ``<EB,MB,FX>@k`` lays out ``1 + EB + MB + FX`` bits: sign, a
fixed exponent region, a fixed mantissa region and ``FX`` flexible bits of
which ``k`` currently extend the exponent (at its least-significant end) and
``FX - k`` extend the mantissa (also at its least-significant end).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, replace
from typing import NamedTuple

from . import kernels as K


class DescriptorError(ValueError):
    """Invalid descriptor, or descriptor mismatch between operands."""


class SaturationError(DescriptorError):
    """No flexible bit left to move in the requested direction."""


@dataclass(frozen=True)
class FormatDescriptor:
    eb: int
    mb: int
    fx: int
    k: int = 0

    def __post_init__(self):
        if self.eb < 2:
            raise DescriptorError(f"eb={self.eb}: need at least 2 fixed exponent bits")
        if self.mb < 1:
            raise DescriptorError(f"mb={self.mb}: need at least 1 fixed mantissa bit")
        if self.fx < 0 or not 0 <= self.k <= self.fx:
            raise DescriptorError(f"k={self.k} outside [0, fx={self.fx}]")
        if self.mb + self.fx > K.MAX_MBITS:
            raise DescriptorError(f"mantissa wider than {K.MAX_MBITS} bits is not supported")

    @property
    def width(self) -> int:
        return 1 + self.eb + self.mb + self.fx

    @property
    def ebits(self) -> int:
        """Effective exponent width |e|."""
        return self.eb + self.k

    @property
    def mbits(self) -> int:
        """Effective fraction width |m|."""
        return self.mb + self.fx - self.k

    @property
    def nflex(self) -> int:
        """Flexible bits currently owned by the mantissa."""
        return self.fx - self.k

    @property
    def bias(self) -> int:
        return (1 << (self.ebits - 1)) - 1

    @property
    def mask(self) -> tuple[int, ...]:
        """Per-flexible-bit mask, MSB first; 1 marks an exponent bit."""
        return (1,) * self.k + (0,) * (self.fx - self.k)

    def with_k(self, k: int) -> "FormatDescriptor":
        return replace(self, k=k)

    def __str__(self) -> str:
        return f"<{self.eb},{self.mb},{self.fx}>@{self.k}"

    @classmethod
    def parse(cls, text: str) -> "FormatDescriptor":
        """Parse ``"<EB,MB,FX>"`` or ``"<EB,MB,FX>@k"``."""
        m = re.fullmatch(r"\s*<\s*(\d+)\s*,\s*(\d+)\s*,\s*(\d+)\s*>\s*(?:@\s*(\d+))?\s*", text)
        if m is None:
            raise DescriptorError(f"cannot parse descriptor {text!r}")
        eb, mb, fx = (int(g) for g in m.groups()[:3])
        k = int(m.group(4)) if m.group(4) is not None else 0
        return cls(eb, mb, fx, k)


def make_descriptor(eb: int, mb: int, fx: int, k: int = 0) -> FormatDescriptor:
    return FormatDescriptor(eb, mb, fx, k)


class EncodeFlags(NamedTuple):
    overflowed: bool = False
    underflowed: bool = False
    inexact: bool = False

    @classmethod
    def from_bits(cls, bits: int) -> "EncodeFlags":
        return cls(bool(bits & K.OVERFLOW), bool(bits & K.UNDERFLOW), bool(bits & K.INEXACT))


@dataclass(frozen=True)
class FlexValue:
    sign: int
    efield: int
    mfield: int
    descriptor: FormatDescriptor

    @property
    def is_zero(self) -> bool:
        return self.efield == 0

    @property
    def is_sentinel(self) -> bool:
        return self.efield == (1 << self.descriptor.ebits) - 1

    @property
    def significand(self) -> int:
        """Significand with the implicit one, as an |m|+1 bit integer."""
        return (1 << self.descriptor.mbits) | self.mfield

    def dump(self) -> str:
        """``"s eeee mmmm"`` with each field MSB first."""
        d = self.descriptor
        return f"{self.sign} {self.efield:0{d.ebits}b} {self.mfield:0{d.mbits}b}"

    def __float__(self) -> float:
        return decode(self)


def encode(x: float, d: FormatDescriptor) -> tuple[FlexValue, EncodeFlags]:
    """Round ``x`` to nearest-even under ``d``.

    Magnitudes past the largest normal give the sentinel with ``overflowed``;
    magnitudes that round below the smallest normal flush to zero with
    ``underflowed``.
    """
    s, e, m, f = K.quantize_fields(float(x), d.ebits, d.mbits)
    return FlexValue(int(s), int(e), int(m), d), EncodeFlags.from_bits(int(f))


def decode(v: FlexValue) -> float:
    """Exact value; the sentinel decodes to +-inf."""
    d = v.descriptor
    return float(K.decode_fields(v.sign, v.efield, v.mfield, d.ebits, d.mbits))


def max_value(d: FormatDescriptor) -> float:
    emax = (1 << d.ebits) - 2
    return float(K.decode_fields(0, emax, (1 << d.mbits) - 1, d.ebits, d.mbits))


def min_normal(d: FormatDescriptor) -> float:
    return float(K.decode_fields(0, 1, 0, d.ebits, d.mbits))


def widen_exponent(d: FormatDescriptor) -> FormatDescriptor:
    if d.k >= d.fx:
        raise SaturationError(f"{d}: no flexible bit left for the exponent")
    return d.with_k(d.k + 1)


def narrow_exponent(d: FormatDescriptor) -> FormatDescriptor:
    if d.k <= 0:
        raise SaturationError(f"{d}: exponent already at its fixed width")
    return d.with_k(d.k - 1)


def reencode(v: FlexValue, d_new: FormatDescriptor) -> tuple[FlexValue, EncodeFlags]:
    """Re-express ``v`` under another split of the same bit budget."""
    if d_new.width != v.descriptor.width:
        raise DescriptorError(
            f"width mismatch: {v.descriptor} is {v.descriptor.width} bits, {d_new} is {d_new.width}")
    if v.is_sentinel:
        top = (1 << d_new.ebits) - 1
        return FlexValue(v.sign, top, 0, d_new), EncodeFlags(overflowed=True)
    x = decode(v)
    if v.is_zero:
        return FlexValue(v.sign, 0, 0, d_new), EncodeFlags()
    return encode(x, d_new)
