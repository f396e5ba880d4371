"""The flexible multiplier datapath.

Sign XOR, truncated significand product, exponent addition with the
single-bit bias subtraction, then normalization and rounding.  Two modes:
``"approx"`` models the truncated flexible-bit schedule, ``"exact"`` forms
the full double-width significand product.
"""
from __future__ import annotations

from dataclasses import dataclass

from . import arrays
from . import kernels as K
from .flexformat import DescriptorError, FlexValue, FormatDescriptor

MODES = ("approx", "exact")


@dataclass(frozen=True)
class MulResult:
    value: FlexValue
    overflow: bool
    underflow: bool
    mantissa_carry: bool
    approx_mode: bool
    round_up: bool = False


def _check_mode(mode):
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}, got {mode!r}")
    return mode == "approx"


def mantissa_mul_approx(sig_a: int, sig_b: int, nflex: int) -> int:
    """Truncated product of two significands with ``nflex`` flexible bits.

    The result has ``2*(w - nflex) + nflex`` bits for ``w``-bit significands
    and approximates ``sig_a * sig_b / 2**nflex`` from below.
    """
    if nflex < 0:
        raise ValueError("nflex must be >= 0")
    return int(K.mantissa_mul_approx(int(sig_a), int(sig_b), int(nflex)))


def mantissa_schedule(sig_a: int, sig_b: int, nflex: int) -> list[tuple[int, int, int]]:
    """Per-cycle contributions to the flexible accumulator.

    Returns ``(cycle, term, shift)`` triples whose shifted sum, added to
    ``(A*B) << nflex``, equals :func:`mantissa_mul_approx`.  Cycle ``j`` adds
    ``q_j*A + p_j*B`` at shift ``nflex - j``; the first cycle additionally
    carries ``p_1*q_1`` at shift ``nflex - 2`` when ``nflex >= 2``.
    """
    mask = (1 << nflex) - 1
    hi_a, hi_b = sig_a >> nflex, sig_b >> nflex
    lo_a, lo_b = sig_a & mask, sig_b & mask
    out = []
    for j in range(1, nflex + 1):
        shift = nflex - j
        p = (lo_a >> shift) & 1
        q = (lo_b >> shift) & 1
        out.append((j, q * hi_a + p * hi_b, shift))
        if j == 1 and nflex >= 2:
            out.append((1, p & q, nflex - 2))
    return out


def format_trace(schedule, width: int) -> list[str]:
    return [f"cycle {j}: + ({term:0{width}b}) << {shift}" for j, term, shift in schedule]


def exponent_add(e1: int, e2: int, d: FormatDescriptor, carry: int = 0) -> tuple[int, bool, bool]:
    """``e1 + e2 + carry - bias`` as subtract-leading-one-then-add-one.

    Returns ``(e_res, overflow, underflow)``; overflow when the sum reaches the
    all-ones code, underflow when it drops to zero or below.
    """
    e, ovf, unf = K.exponent_add(int(e1), int(e2), d.ebits, int(carry))
    return int(e), bool(ovf), bool(unf)


def normalize_round(raw: int, d: FormatDescriptor, mode: str = "approx") -> tuple[int, int, bool]:
    """Round a raw significand product from :func:`mantissa_mul_approx`
    (approx) or the plain integer product (exact) to ``d.mbits`` bits.

    Returns ``(mfield, carry, round_up_propagated)``.
    """
    approx = _check_mode(mode)
    frac_bits = 2 * d.mbits - d.nflex if approx else 2 * d.mbits
    m, c, r = K.normalize_round(int(raw), frac_bits, d.mbits)
    return int(m), int(c), bool(r)


def multiply(a: FlexValue, b: FlexValue, mode: str = "approx") -> MulResult:
    approx = _check_mode(mode)
    d = a.descriptor
    if b.descriptor != d:
        raise DescriptorError(f"operands use different precisions: {d} vs {b.descriptor}")
    s, e, m, f = K.mul_fields(a.sign, a.efield, a.mfield, b.sign, b.efield, b.mfield,
                              d.ebits, d.mbits, d.nflex, approx)
    f = int(f)
    return MulResult(
        value=FlexValue(int(s), int(e), int(m), d),
        overflow=bool(f & K.OVERFLOW),
        underflow=bool(f & K.UNDERFLOW),
        mantissa_carry=bool(f & K.CARRY),
        approx_mode=approx,
        round_up=bool(f & K.ROUND_UP),
    )


def multiply_traced(a: FlexValue, b: FlexValue) -> tuple[MulResult, list[str]]:
    """Approx-mode product plus the per-cycle accumulator trace."""
    d = a.descriptor
    sched = mantissa_schedule(a.significand, b.significand, d.nflex)
    width = d.mb + 2
    return multiply(a, b, "approx"), format_trace(sched, width)


def multiply_array(x, y, d: FormatDescriptor, mode: str = "approx"):
    """Encode both value arrays under ``d`` and multiply elementwise.

    Returns ``(values, flag bits)``; the sentinel decodes to +-inf.
    """
    approx = _check_mode(mode)
    return arrays.mul_array(x, y, d.ebits, d.mbits, d.nflex, approx)
