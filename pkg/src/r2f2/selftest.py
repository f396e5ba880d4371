"""Self-verification suites behind ``r2f2 selftest``.

Each check returns a :class:`Check`; :func:`run_all` runs them in order.
The exhaustive suite compares the datapath against the rational oracle in
:mod:`r2f2.oracle` over every encoded operand pair of every small format.
"""
from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np

from . import arrays
from . import kernels as K
from . import oracle
from .adjuster import AdjustState, multiply_adaptive
from .backends import Binary64
from .fixedformat import FixedFormat, max_value as fixed_max_value
from .flexformat import FormatDescriptor, decode, encode
from .pde.heat import HeatConfig, heat1d_init, heat1d_step
from .pde.swe import SweConfig, swe2d_init, swe2d_step


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def small_descriptors(max_width: int = 9):
    """Every descriptor (and split) whose total width is at most ``max_width``."""
    for eb in range(2, max_width):
        for mb in range(1, max_width):
            for fx in range(0, max_width):
                if 1 + eb + mb + fx > max_width:
                    continue
                for k in range(fx + 1):
                    yield FormatDescriptor(eb, mb, fx, k)


def encoding_arrays(ebits: int, mbits: int):
    enc = np.array(oracle.well_formed_encodings(ebits, mbits), dtype=np.int64)
    return enc[:, 0], enc[:, 1], enc[:, 2]


@lru_cache(maxsize=None)
def _sig_table(mbits: int, nflex: int | None):
    """Rational rounding of every significand product to ``mbits``.

    ``nflex=None`` is the exact product.  Returns ``(mfield, carry)`` tables
    indexed by the two stored mantissa fields.  Significand products lie in
    [1, 4), so a wide exponent keeps range checks out of the way here.
    """
    n = 1 << mbits
    mf = np.empty((n, n), dtype=np.int64)
    cy = np.empty((n, n), dtype=np.int64)
    for i in range(n):
        for j in range(n):
            if nflex is None:
                q = Fraction((n + i) * (n + j), n * n)
            else:
                q = Fraction(oracle.approx_raw_rational(n + i, n + j, nflex),
                             2 ** (2 * mbits - nflex))
            _, e, m, _ = oracle.round_rational(q, 8, mbits)
            mf[i, j] = m
            cy[i, j] = e - 127
    return mf, cy


def oracle_products(a, b, ebits, mbits, nflex=None):
    """Oracle fields and status codes (0 ok, 1 overflow, 2 underflow)."""
    sa, ea, ma = a
    sb, eb, mb = b
    mf, cy = _sig_table(mbits, nflex)
    bias = 2 ** (ebits - 1) - 1
    top = 2 ** ebits - 1
    m = mf[ma, mb]
    e = (ea - bias) + (eb - bias) + cy[ma, mb] + bias
    zero = (ea == 0) | (eb == 0)
    ovf = (e >= top) & ~zero
    unf = (e <= 0) & ~zero
    status = np.where(ovf, 1, np.where(unf, 2, 0))
    e = np.where(zero | unf, 0, np.where(ovf, top, e))
    m = np.where(zero | unf | ovf, 0, m)
    return sa ^ sb, e, m, status


def _compare_exhaustive(d: FormatDescriptor, approx: bool) -> int:
    s, e, m = encoding_arrays(d.ebits, d.mbits)
    n = s.size
    ia, ib = np.divmod(np.arange(n * n), n)
    a = (s[ia], e[ia], m[ia])
    b = (s[ib], e[ib], m[ib])
    got = arrays.mul_fields_array(a, b, d.ebits, d.mbits, d.nflex, approx)
    ref = oracle_products(a, b, d.ebits, d.mbits, d.nflex if approx else None)
    gstat = np.where(got[3] & K.OVERFLOW, 1, np.where(got[3] & K.UNDERFLOW, 2, 0))
    bad = (got[0] != ref[0]) | (got[1] != ref[1]) | (got[2] != ref[2]) | (gstat != ref[3])
    return int(np.count_nonzero(bad))


def check_exhaustive(max_width: int = 9, approx: bool = False) -> Check:
    """Bit-for-bit agreement with the oracle over all operand pairs."""
    t = time.perf_counter()
    mism, descs, pairs = 0, 0, 0
    worst = ""
    for d in small_descriptors(max_width):
        nb = _compare_exhaustive(d, approx)
        n = 2 + 2 * (2 ** d.ebits - 2) * 2 ** d.mbits
        descs += 1
        pairs += n * n
        if nb and not worst:
            worst = f" first mismatch in {d}"
        mism += nb
    mode = "approx" if approx else "exact"
    return Check(f"exhaustive-{mode}-width<={max_width}", mism == 0,
                 f"{descs} descriptors, {pairs} pairs, {mism} mismatches{worst}",
                 time.perf_counter() - t)


def _random_fields(rng, d: FormatDescriptor, n: int):
    s = rng.integers(0, 2, n)
    e = rng.integers(1, 2 ** d.ebits - 1, n)
    m = rng.integers(0, 2 ** d.mbits, n)
    z = rng.random(n) < 0.05
    return s, np.where(z, 0, e), np.where(z, 0, m)


PROPERTY_FORMATS = (FormatDescriptor(3, 9, 3, 0), FormatDescriptor(3, 9, 3, 2),
                    FormatDescriptor(3, 7, 3, 1), FormatDescriptor(2, 4, 2, 1),
                    FormatDescriptor(5, 10, 0, 0))


def check_sign_and_commutativity(n: int = 20000, seed: int = 1) -> Check:
    t = time.perf_counter()
    rng = np.random.default_rng(seed)
    bad = 0
    for d in PROPERTY_FORMATS:
        a = _random_fields(rng, d, n)
        b = _random_fields(rng, d, n)
        for approx in (False, True):
            ab = arrays.mul_fields_array(a, b, d.ebits, d.mbits, d.nflex, approx)
            ba = arrays.mul_fields_array(b, a, d.ebits, d.mbits, d.nflex, approx)
            bad += int(np.count_nonzero(ab[0] != (a[0] ^ b[0])))
            bad += sum(int(np.count_nonzero(x != y)) for x, y in zip(ab, ba))
    return Check("sign-xor-commutativity", bad == 0, f"{bad} violations",
                 time.perf_counter() - t)


def check_approx_le_exact(n: int = 50000, seed: int = 2) -> Check:
    """Truncation never increases the magnitude of a product."""
    t = time.perf_counter()
    rng = np.random.default_rng(seed)
    bad = 0
    for d in PROPERTY_FORMATS:
        a = _random_fields(rng, d, n)
        b = _random_fields(rng, d, n)
        ex = arrays.mul_fields_array(a, b, d.ebits, d.mbits, d.nflex, False)
        ap = arrays.mul_fields_array(a, b, d.ebits, d.mbits, d.nflex, True)
        vx = np.abs(arrays.decode_fields_np(*ex[:3], d.ebits, d.mbits))
        va = np.abs(arrays.decode_fields_np(*ap[:3], d.ebits, d.mbits))
        bad += int(np.count_nonzero(va > vx))
    return Check("approx-le-exact", bad == 0, f"{bad} violations", time.perf_counter() - t)


def check_quantization(n: int = 100000, seed: int = 3) -> Check:
    """Encoder against nearest-value search, plus encode/decode roundtrip."""
    t = time.perf_counter()
    rng = np.random.default_rng(seed)
    x = rng.choice([-1.0, 1.0], n) * np.exp(rng.uniform(np.log(1e-12), np.log(1e12), n))
    bad = 0
    widths = {(d.ebits, d.mbits) for d in PROPERTY_FORMATS} | {(5, 10), (6, 9)}
    for ebits, mbits in sorted(widths):
        ref, status = oracle.EnumeratedFormat(ebits, mbits).quantize(x)
        got, flags = arrays.quantize_array(x, ebits, mbits)
        gstat = np.where(flags & K.OVERFLOW, 1, np.where(flags & K.UNDERFLOW, 2, 0))
        bad += int(np.count_nonzero((got != ref) | (gstat != status)))
        again, f2 = arrays.quantize_array(got[np.isfinite(got)], ebits, mbits)
        bad += int(np.count_nonzero((again != got[np.isfinite(got)]) | (f2 & K.INEXACT != 0)))
    d = FormatDescriptor(3, 9, 3, 2)
    for v in x[:2000]:
        fv, fl = encode(float(v), d)
        if not (fl.overflowed or fl.underflowed):
            bad += int(encode(decode(fv), d)[0] != fv)
    return Check("roundtrip-quantization", bad == 0, f"{bad} violations",
                 time.perf_counter() - t)


def _adaptive_stream(seed: int, n: int):
    rng = np.random.default_rng(seed)
    mag = np.exp(rng.uniform(np.log(1e-7), np.log(1e7), (2, n)))
    sign = rng.choice([-1.0, 1.0], (2, n))
    return mag[0] * sign[0], mag[1] * sign[1]


def check_adjuster(n: int = 20000, seed: int = 4) -> Check:
    """k stays in [0, fx], events chain by +-1, reruns and both code paths agree."""
    t = time.perf_counter()
    x, y = _adaptive_stream(seed, n)
    problems = []
    d = FormatDescriptor(3, 9, 3, 0)
    s1, s2 = AdjustState(d), AdjustState(d)
    o1 = s1.multiply_array(x, y)
    o2 = s2.multiply_array(x, y)
    ev = s1.event_array()
    if not (np.array_equal(o1, o2) and np.array_equal(ev, s2.event_array())):
        problems.append("rerun differs")
    if len(ev):
        if ev[:, 2:].min() < 0 or ev[:, 2:].max() > d.fx:
            problems.append("k out of range")
        if not np.all(np.abs(ev[:, 3] - ev[:, 2]) == 1):
            problems.append("non-unit step")
        if not np.array_equal(ev[1:, 2], ev[:-1, 3]) or ev[0, 2] != d.k:
            problems.append("events do not chain")
        if ev[-1, 3] != s1.k:
            problems.append("final k disagrees with log")
    s3 = AdjustState(d)
    m = min(n, 3000)
    o3 = np.array([multiply_adaptive(float(a), float(b), s3)[0] for a, b in zip(x[:m], y[:m])])
    s4 = AdjustState(d)
    o4 = s4.multiply_array(x[:m], y[:m])
    if not (np.array_equal(o3, o4) and np.array_equal(s3.event_array(), s4.event_array())
            and np.array_equal(s3.counters, s4.counters)):
        problems.append("object path differs from kernel path")
    return Check("adjuster-bounds-determinism", not problems,
                 "; ".join(problems) or f"{len(ev)} events over {n} products, k in [0,{d.fx}]",
                 time.perf_counter() - t)


def check_heat_maximum_principle(n: int = 128, steps: int = 400) -> Check:
    t = time.perf_counter()
    bad = 0
    be = Binary64()
    for init in ("sin", "exp"):
        cfg = HeatConfig(n=n, steps=steps, init=init, r=0.5)
        u = heat1d_init(init, n, cfg.amplitude, cfg.width)
        prev = np.abs(u).max()
        for s in range(steps):
            u = heat1d_step(u, cfg.r, be, s)
            cur = np.abs(u).max()
            bad += int(cur > prev)
            prev = cur
    return Check("heat-maximum-principle", bad == 0, f"{bad} increases of max|u|",
                 time.perf_counter() - t)


def check_swe_invariants(steps: int = 100) -> Check:
    t = time.perf_counter()
    problems = []
    be = Binary64()
    flat = SweConfig(nx=32, ny=32, amplitude=0.0)
    st0 = swe2d_init(flat)
    st = st0
    for s in range(steps):
        st = swe2d_step(st, flat, be, s)
    if not all(np.array_equal(a, b) for a, b in zip(st, st0)):
        problems.append("lake at rest moved")
    cfg = SweConfig(nx=32, ny=32)
    st = swe2d_init(cfg)
    m0 = st[0].sum()
    for s in range(steps):
        st = swe2d_step(st, cfg, be, s)
    drift = abs(st[0].sum() - m0) / m0
    if not drift <= 1e-10:
        problems.append(f"mass drift {drift:.2e}")
    return Check("swe-lake-at-rest-mass", not problems,
                 "; ".join(problems) or f"mass drift {drift:.1e} over {steps} steps",
                 time.perf_counter() - t)


def check_fixed_max() -> Check:
    ok = fixed_max_value(FixedFormat(5, 10)) == 65504.0
    return Check("fixed-max-value", ok, "E5M10 max 65504" if ok else "wrong E5M10 max")


def run_all(quick: bool = False) -> list[Check]:
    width = 7 if quick else 9
    checks = [
        lambda: check_exhaustive(width, approx=False),
        lambda: check_exhaustive(min(width, 8), approx=True),
        check_sign_and_commutativity,
        check_approx_le_exact,
        check_quantization,
        check_adjuster,
        check_heat_maximum_principle,
        check_swe_invariants,
        check_fixed_max,
    ]
    out = []
    for c in checks:
        t = time.perf_counter()
        try:
            out.append(c())
        except Exception as exc:  # report, keep going
            out.append(Check(getattr(c, "__name__", "check"), False, f"error: {exc!r}",
                             time.perf_counter() - t))
    return out
