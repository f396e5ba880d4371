from fractions import Fraction

import numpy as np

from r2f2 import oracle


def test_round_rational_ties_and_ranges():
    # (ebits 2, mbits 2): bias 1, normals 1.00..1.11 x 2^0 and 2^1
    assert oracle.round_rational(Fraction(9, 8), 2, 2) == (0, 1, 0, oracle.NORMAL)
    assert oracle.round_rational(Fraction(11, 8), 2, 2) == (0, 1, 2, oracle.NORMAL)
    assert oracle.round_rational(Fraction(-15, 8), 2, 2) == (1, 2, 0, oracle.NORMAL)
    assert oracle.round_rational(Fraction(4), 2, 2)[3] == oracle.OVF
    assert oracle.round_rational(Fraction(1, 2), 2, 2)[3] == oracle.UNF
    assert oracle.round_rational(Fraction(0), 2, 2)[3] == oracle.ZERO


def test_enumerated_format_agrees_with_rational_rounding():
    enum = oracle.EnumeratedFormat(3, 3)
    rng = np.random.default_rng(0)
    x = np.concatenate([rng.uniform(-20, 20, 3000), enum.values, (enum.values[:-1] + enum.values[1:]) / 2])
    vals, status = enum.quantize(x)
    for v, q, s in zip(x, vals, status):
        _, e, m, st = oracle.round_rational(Fraction(float(v)), 3, 3)
        if st == oracle.NORMAL:
            assert s == 0 and Fraction(float(abs(q))) == oracle.value_of(0, e, m, 3, 3)
        elif st == oracle.OVF:
            assert s == 1 and np.isinf(q)
        elif st == oracle.UNF:
            assert s == 2 and q == 0


def test_approx_closed_form():
    assert oracle.approx_raw_rational(13, 11, 0) == 143
    # A=10 P=11, B=11 Q=01: (A*B)<<2, cycle 1 adds (q1*A + p1*B)<<1 = 6,
    # cycle 2 adds (q2*A + p2*B) = 5, and p1*q1 = 0
    assert oracle.approx_raw_rational(0b1011, 0b1101, 2) == 24 + 6 + 5


def test_well_formed_encoding_count():
    assert len(oracle.well_formed_encodings(2, 2)) == 2 + 2 * 2 * 4
