"""Runtime-reconfigurable floating-point multiplication.

A flexible format ``<EB,MB,FX>@k`` spends ``k`` of its ``FX`` flexible bits
on the exponent and the rest on the mantissa.  The package models the
bit-level multiplier, the unit that moves ``k`` at runtime, and the
profiling and PDE harnesses used to evaluate it.

Hot loops are compiled with numba when available; set ``R2F2_NUMBA=0`` to
use the pure numpy path instead.
"""
from ._jit import USE_NUMBA
from .adjuster import AdjustState, AdjustmentEvent, multiply_adaptive
from .fixedformat import E5M10, FixedFormat
from .flexformat import (DescriptorError, FlexValue, FormatDescriptor,
                         SaturationError, decode, encode, make_descriptor,
                         max_value)
from .r2f2mul import MulResult, multiply

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA", "AdjustState", "AdjustmentEvent", "multiply_adaptive",
    "E5M10", "FixedFormat", "DescriptorError", "FlexValue", "FormatDescriptor",
    "SaturationError", "decode", "encode", "make_descriptor", "max_value",
    "MulResult", "multiply",
]
