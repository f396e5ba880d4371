"""Multiplication providers for the profiler and the PDE solvers.

Every backend maps two float arrays to their product as float64, counting
multiplications and range violations (overflow or flush-to-zero underflow of
an operand or the product) along the way.
"""
from __future__ import annotations

import numpy as np

from . import kernels as K
from .adjuster import AdjustState
from .fixedformat import FixedFormat, multiply_array as fixed_multiply_array
from .flexformat import FormatDescriptor
from .r2f2mul import multiply_array as r2f2_multiply_array


class Backend:
    name = "backend"
    stateful = False

    def __init__(self):
        self.mult_count = 0
        self.range_events = 0

    def mul(self, a, b, step: int = 0) -> np.ndarray:
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        out, flags = self._mul(a, b, step)
        self.mult_count += out.size
        if flags is not None:
            self.range_events += int(np.count_nonzero(flags & K.RANGE))
        return out

    def _mul(self, a, b, step):
        raise NotImplementedError

    def fresh(self) -> "Backend":
        """Same arithmetic, zeroed counters and state."""
        raise NotImplementedError

    def summary(self) -> dict:
        return {"backend": self.name, "mult_count": self.mult_count,
                "range_events": self.range_events}

    def __repr__(self):
        return f"{type(self).__name__}({self.name})"


class Binary64(Backend):
    name = "binary64"

    def _mul(self, a, b, step):
        return a * b, None

    def fresh(self):
        return Binary64()


class Binary32(Backend):
    name = "binary32"

    def _mul(self, a, b, step):
        with np.errstate(over="ignore"):
            p = a.astype(np.float32) * b.astype(np.float32)
        return p.astype(np.float64), None

    def fresh(self):
        return Binary32()


class Fixed(Backend):
    def __init__(self, fmt: FixedFormat):
        super().__init__()
        self.fmt = fmt
        self.name = str(fmt)

    def _mul(self, a, b, step):
        return fixed_multiply_array(a, b, self.fmt)

    def fresh(self):
        return Fixed(self.fmt)


class R2F2Static(Backend):
    """Flexible format with a frozen split ``k``."""

    def __init__(self, descriptor: FormatDescriptor, mode: str = "approx"):
        super().__init__()
        self.descriptor = descriptor
        self.mode = mode
        self.name = f"{descriptor}" + ("" if mode == "approx" else f"[{mode}]")

    def _mul(self, a, b, step):
        return r2f2_multiply_array(a, b, self.descriptor, self.mode)

    def fresh(self):
        return R2F2Static(self.descriptor, self.mode)


class R2F2Adaptive(Backend):
    """Flexible format driven by an :class:`AdjustState`.

    Products are streamed in C order of the operand arrays, which fixes the
    event log for a given input sequence.
    """
    stateful = True

    def __init__(self, descriptor: FormatDescriptor, mode: str = "approx"):
        super().__init__()
        self.initial = descriptor
        self.mode = mode
        self.state = AdjustState(descriptor)
        self.name = f"{descriptor} adaptive"

    def _mul(self, a, b, step):
        a, b = np.broadcast_arrays(a, b)
        sat0 = self.state.saturation_count
        out = self.state.multiply_array(a, b, step, self.mode)
        self.range_events += self.state.saturation_count - sat0
        return out.reshape(a.shape), None

    def fresh(self):
        return R2F2Adaptive(self.initial, self.mode)

    def summary(self):
        d = super().summary()
        d.update(self.state.summary())
        d["event_count"] = self.state.event_count
        return d


def parse_backend(text: str, adaptive: bool = False, mode: str = "approx") -> Backend:
    """``binary64``, ``binary32``, ``E5M10``-style, or ``<EB,MB,FX>[@k]``."""
    t = text.strip()
    low = t.lower()
    if low in ("binary64", "float64", "double"):
        return Binary64()
    if low in ("binary32", "float32", "single"):
        return Binary32()
    if t.startswith("<"):
        d = FormatDescriptor.parse(t)
        return R2F2Adaptive(d, mode) if adaptive else R2F2Static(d, mode)
    if low.startswith("e"):
        return Fixed(FixedFormat.parse(t))
    raise ValueError(f"unknown backend {text!r}")
