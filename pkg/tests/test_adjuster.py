import csv
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from r2f2.adjuster import (AdjustState, AdjustmentEvent, Decision, adjust_after_multiply,
                           detect_redundancy, multiply_adaptive, write_events_csv)
from r2f2.flexformat import FlexValue, FormatDescriptor, encode
from r2f2.r2f2mul import multiply

D = FormatDescriptor(3, 9, 3, 0)       # k=0: normals in [0.25, 16)


def test_overflow_widens_and_retries():
    s = AdjustState(D)
    v, ev = multiply_adaptive(8.0, 8.0, s, step=5)
    assert v == 64.0
    assert ev == [AdjustmentEvent(5, "overflow-widen", 0, 1)]
    assert (s.k, s.overflow_events, s.retry_count, s.mult_count) == (1, 1, 1, 1)


def test_underflow_widens():
    s = AdjustState(D)
    v, ev = multiply_adaptive(0.3, 0.3, s)
    assert [e.kind for e in ev] == ["underflow-widen"]
    assert math.isclose(v, 0.09, rel_tol=1e-3)


def test_operand_out_of_range_widens_before_multiplying():
    s = AdjustState(D)
    v, ev = multiply_adaptive(100.0, 0.5, s)
    assert v == 50.0
    assert [e.kind for e in ev] == ["overflow-widen"]


def test_multiple_widenings_in_one_product():
    s = AdjustState(D)
    v, ev = multiply_adaptive(1e4, 1e4, s)
    assert s.k == 3 and [e.new_k for e in ev] == [1, 2, 3]
    assert v == pytest.approx(1e8, rel=1e-3)


def test_saturation_at_full_exponent():
    s = AdjustState(D.with_k(3))             # largest normal about 4.3e9
    v, ev = multiply_adaptive(1e5, 1e5, s)
    assert v == math.inf and ev == [] and s.saturation_count == 1 and s.saturated
    v, ev = multiply_adaptive(-1e-5, 1e-5, s)
    assert v == 0.0 and math.copysign(1, v) == -1 and s.saturation_count == 2


def test_redundancy_detection():
    d = D.with_k(1)                          # |e| = 4
    assert detect_redundancy(FlexValue(0, 0b0110, 0, d))
    assert detect_redundancy(FlexValue(0, 0b1001, 0, d))
    assert detect_redundancy(FlexValue(0, 0b0111, 0, d))
    assert not detect_redundancy(FlexValue(0, 0b0101, 0, d))
    assert not detect_redundancy(FlexValue(0, 0b0100, 0, d))
    assert not detect_redundancy(FlexValue(0, 0b01, 0, FormatDescriptor(2, 4, 1, 0)))


def test_redundancy_narrows():
    s = AdjustState(D.with_k(1))
    v, ev = multiply_adaptive(0.75, 0.75, s, step=2)
    assert v == 0.5625
    assert ev == [AdjustmentEvent(2, "redundancy-narrow", 1, 0)]
    assert s.k == 0 and s.redundancy_events == 1


def test_no_narrowing_at_fixed_width():
    s = AdjustState(D)
    multiply_adaptive(0.75, 0.75, s)
    assert s.k == 0 and s.event_count == 0


def test_adjust_after_multiply_decisions():
    d = D.with_k(1)
    s = AdjustState(d)
    a, b = encode(0.75, d)[0], encode(0.75, d)[0]
    assert adjust_after_multiply(a, b, multiply(a, b), s) is Decision.NARROW
    s = AdjustState(D)
    a = encode(8.0, D)[0]
    assert adjust_after_multiply(a, a, multiply(a, a), s) is Decision.RETRY_WIDER
    s = AdjustState(d)
    a = encode(0.3, d)[0]                    # exponent field 0101 is not redundant
    assert adjust_after_multiply(a, a, multiply(a, a), s) is Decision.KEEP


def test_events_csv(tmp_path):
    s = AdjustState(D)
    s.multiply_array(np.array([8.0, 1e4, 0.75]), np.array([8.0, 1e4, 0.75]), step=1)
    p = tmp_path / "events.csv"
    write_events_csv(s, p)
    rows = list(csv.reader(open(p)))
    assert rows[0] == ["step_index", "kind", "old_k", "new_k"]
    assert len(rows) - 1 == s.event_count
    assert rows[1] == ["1", "overflow-widen", "0", "1"]


def test_summary_counts():
    s = AdjustState(D)
    s.multiply_array(np.full(10, 8.0), np.full(10, 8.0))
    sm = s.summary()
    assert sm["mult_count"] == 10 and sm["overflow_events"] == 1 and sm["descriptor"] == "<3,9,3>@1"


magnitudes = st.floats(1e-7, 1e7)
streams = st.lists(st.tuples(magnitudes, magnitudes, st.booleans()), min_size=1, max_size=60)


@given(streams, st.sampled_from(["approx", "exact"]), st.integers(0, 3))
def test_kernel_path_matches_object_path(pairs, mode, k0):
    x = np.array([a * (-1 if neg else 1) for a, _, neg in pairs])
    y = np.array([b for _, b, _ in pairs])
    s1, s2 = AdjustState(D.with_k(k0)), AdjustState(D.with_k(k0))
    vals = [multiply_adaptive(float(a), float(b), s1, step=i, mode=mode)[0]
            for i, (a, b) in enumerate(zip(x, y))]
    out = np.concatenate([s2.multiply_array(x[i:i + 1], y[i:i + 1], step=i, mode=mode)
                          for i in range(len(x))])
    assert np.array_equal(np.array(vals), out)
    assert np.array_equal(s1.event_array(), s2.event_array())
    assert np.array_equal(s1.counters, s2.counters)


@given(streams)
def test_k_stays_in_bounds_and_events_chain(pairs):
    x = np.array([a for a, _, _ in pairs])
    y = np.array([b for _, b, _ in pairs])
    s = AdjustState(D)
    s.multiply_array(x, y)
    ev = s.event_array()
    assert 0 <= s.k <= D.fx
    if len(ev):
        assert ev[:, 2:].min() >= 0 and ev[:, 2:].max() <= D.fx
        assert np.array_equal(ev[1:, 2], ev[:-1, 3]) and ev[-1, 3] == s.k
