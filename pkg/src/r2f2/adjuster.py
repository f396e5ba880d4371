"""Runtime precision adjustment.

One :class:`AdjustState` per arithmetic stream.  After every product the
unit either widens the exponent by one flexible bit and retries (the product
or an operand left the representable range), narrows it by one bit (operands
and result all show a redundant exponent), or keeps the current split.

Range violations while converting an operand into the current format are
treated like a range violation of the product: the unit widens and retries.
At ``k == fx`` nothing can widen further; the product saturates to the
sentinel (overflow) or zero (underflow) and ``saturation_count`` records it.

Narrowing only changes the descriptor used for later products; values
already produced are not re-quantized.
"""
from __future__ import annotations

import csv
import enum
from typing import NamedTuple

import numpy as np

from . import arrays
from . import kernels as K
from .flexformat import (FlexValue, FormatDescriptor, decode, encode,
                         narrow_exponent, widen_exponent)
from .r2f2mul import MulResult, multiply

EVENT_KINDS = ("overflow-widen", "underflow-widen", "redundancy-narrow")


class Decision(enum.Enum):
    RETRY_WIDER = "retry-wider"
    NARROW = "narrow"
    KEEP = "keep"


class AdjustmentEvent(NamedTuple):
    step_index: int
    kind: str
    old_k: int
    new_k: int


class AdjustState:
    """Mutable precision state of one stream (single owner)."""

    def __init__(self, descriptor: FormatDescriptor):
        self._eb, self._mb, self._fx = descriptor.eb, descriptor.mb, descriptor.fx
        self.counters = K.new_state(descriptor.k)
        self._chunks: list[np.ndarray] = []

    @property
    def descriptor(self) -> FormatDescriptor:
        return FormatDescriptor(self._eb, self._mb, self._fx, int(self.counters[K.ST_K]))

    @property
    def k(self) -> int:
        return int(self.counters[K.ST_K])

    overflow_events = property(lambda self: int(self.counters[K.ST_OVERFLOW]))
    underflow_events = property(lambda self: int(self.counters[K.ST_UNDERFLOW]))
    redundancy_events = property(lambda self: int(self.counters[K.ST_REDUNDANCY]))
    retry_count = property(lambda self: int(self.counters[K.ST_RETRY]))
    mult_count = property(lambda self: int(self.counters[K.ST_MULTS]))
    saturation_count = property(lambda self: int(self.counters[K.ST_SATURATED]))

    @property
    def saturated(self) -> bool:
        return self.saturation_count > 0

    @property
    def event_count(self) -> int:
        return sum(len(c) for c in self._chunks)

    def event_array(self) -> np.ndarray:
        """All events as an (n, 4) array of step, kind code, old_k, new_k."""
        if not self._chunks:
            return np.empty((0, 4), dtype=np.int64)
        if len(self._chunks) > 1:
            self._chunks = [np.concatenate(self._chunks)]
        return self._chunks[0]

    @property
    def events(self) -> list[AdjustmentEvent]:
        return self.events_since(0)

    def events_since(self, start: int) -> list[AdjustmentEvent]:
        return [AdjustmentEvent(int(s), EVENT_KINDS[int(c)], int(o), int(n))
                for s, c, o, n in self.event_array()[start:]]

    def _log(self, step, code, old_k, new_k):
        self._chunks.append(np.array([[step, code, old_k, new_k]], dtype=np.int64))

    def _widen(self, step, overflow):
        old = self.k
        self.counters[K.ST_K] = widen_exponent(self.descriptor).k
        self.counters[K.ST_OVERFLOW if overflow else K.ST_UNDERFLOW] += 1
        self.counters[K.ST_RETRY] += 1
        code = K.EV_OVERFLOW_WIDEN if overflow else K.EV_UNDERFLOW_WIDEN
        self._log(step, code, old, old + 1)
        return AdjustmentEvent(step, EVENT_KINDS[code], old, old + 1)

    def _narrow(self, step):
        old = self.k
        self.counters[K.ST_K] = narrow_exponent(self.descriptor).k
        self.counters[K.ST_REDUNDANCY] += 1
        self._log(step, K.EV_REDUNDANCY_NARROW, old, old - 1)
        return AdjustmentEvent(step, EVENT_KINDS[K.EV_REDUNDANCY_NARROW], old, old - 1)

    def multiply_array(self, x, y, step: int = 0, mode: str = "approx") -> np.ndarray:
        """Stream products through the compiled adaptive kernel, in C order."""
        out, ev = arrays.adaptive_mul_array(x, y, self.counters, self._eb, self._mb,
                                            self._fx, mode == "approx", step)
        if len(ev):
            self._chunks.append(ev)
        return out

    def summary(self) -> dict:
        return {
            "descriptor": str(self.descriptor),
            "mult_count": self.mult_count,
            "overflow_events": self.overflow_events,
            "underflow_events": self.underflow_events,
            "redundancy_events": self.redundancy_events,
            "retry_count": self.retry_count,
            "saturation_count": self.saturation_count,
        }


def detect_redundancy(v: FlexValue) -> bool:
    """True when the two exponent bits below the MSB both differ from it.

    Zero, the sentinel and exponents narrower than 3 bits never qualify.
    """
    return bool(K.is_redundant(v.efield, v.descriptor.ebits))


def adjust_after_multiply(a: FlexValue, b: FlexValue, r: MulResult, s: AdjustState,
                          step: int = 0) -> Decision:
    """Update ``s`` after one product and say what the unit does next."""
    if r.overflow or r.underflow:
        if s.k < s.descriptor.fx:
            s._widen(step, r.overflow)
            return Decision.RETRY_WIDER
        s.counters[K.ST_SATURATED] += 1
        return Decision.KEEP
    if s.k > 0 and detect_redundancy(a) and detect_redundancy(b) and detect_redundancy(r.value):
        s._narrow(step)
        return Decision.NARROW
    return Decision.KEEP


def multiply_adaptive(x: float, y: float, s: AdjustState, step: int = 0,
                      mode: str = "approx") -> tuple[float, list[AdjustmentEvent]]:
    """Encode, multiply, adjust and retry until the product fits or ``k == fx``."""
    s.counters[K.ST_MULTS] += 1
    before = s.event_count
    while True:
        d = s.descriptor
        a, fa = encode(x, d)
        b, fb = encode(y, d)
        ovf = fa.overflowed or fb.overflowed
        if ovf or fa.underflowed or fb.underflowed:
            if s.k < d.fx:
                s._widen(step, ovf)
                continue
            s.counters[K.ST_SATURATED] += 1
            neg = a.sign ^ b.sign
            val = float("inf") if ovf else 0.0
            return (-val if neg else val), s.events_since(before)
        r = multiply(a, b, mode)
        if adjust_after_multiply(a, b, r, s, step) is Decision.RETRY_WIDER:
            continue
        return decode(r.value), s.events_since(before)


def write_events_csv(events, path) -> None:
    """CSV with columns step_index, kind, old_k, new_k."""
    if isinstance(events, AdjustState):
        events = events.events
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step_index", "kind", "old_k", "new_k"])
        for ev in events:
            w.writerow([ev.step_index, ev.kind, ev.old_k, ev.new_k])
