"""Error sweeps, format grid search, the empirical exponent rule and value
histograms.

All errors are relative to the binary32 product of the same (binary32)
operands, in percent.  A product that leaves the backend's range counts as
100%.
"""
from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .backends import Backend, Fixed, R2F2Adaptive, parse_backend
from .fixedformat import FixedFormat

SPACINGS = ("log", "linear")


def thread_count() -> int:
    """Worker count from ``R2F2_THREADS`` (0 or unset means all cores)."""
    raw = os.environ.get("R2F2_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"R2F2_THREADS must be an integer, got {raw!r}") from None
    if n < 0:
        raise ValueError("R2F2_THREADS must be >= 0")
    return n or (os.cpu_count() or 1)


@dataclass(frozen=True)
class SweepSpec:
    lo: float = 1e-4
    hi: float = 1e4
    intervals: int = 1000
    samples_per_interval: int = 100
    rng_seed: int = 0
    spacing: str = "log"

    def __post_init__(self):
        if not (0 < self.lo < self.hi):
            raise ValueError(f"need 0 < lo < hi, got lo={self.lo} hi={self.hi}")
        if self.intervals < 1 or self.samples_per_interval < 1:
            raise ValueError("intervals and samples_per_interval must be >= 1")
        if self.spacing not in SPACINGS:
            raise ValueError(f"spacing must be one of {SPACINGS}")

    def edges(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.intervals + 1)
        return np.linspace(self.lo, self.hi, self.intervals + 1)

    def operands(self, i: int) -> tuple[np.ndarray, np.ndarray]:
        """Operand pairs of interval ``i``, both drawn uniformly inside it and
        rounded to binary32.  Depends only on the seed and ``i``."""
        e = self.edges()
        rng = np.random.default_rng([self.rng_seed, i])
        n = self.samples_per_interval
        a = rng.uniform(e[i], e[i + 1], n).astype(np.float32)
        b = rng.uniform(e[i], e[i + 1], n).astype(np.float32)
        return a.astype(np.float64), b.astype(np.float64)


@dataclass
class ErrorReport:
    spec: SweepSpec
    backend: str
    interval_lo: np.ndarray
    interval_hi: np.ndarray
    mean_err_pct: np.ndarray
    max_err_pct: np.ndarray
    overflow_count: np.ndarray
    extra: dict = field(default_factory=dict)

    @property
    def mean(self) -> float:
        return float(self.mean_err_pct.mean())

    @property
    def max(self) -> float:
        return float(self.max_err_pct.max())

    @property
    def overflow_intervals(self) -> int:
        return int(np.count_nonzero(self.overflow_count))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["interval_lo", "interval_hi", "mean_err_pct", "max_err_pct",
                        "overflow_count"])
            for row in zip(self.interval_lo, self.interval_hi, self.mean_err_pct,
                           self.max_err_pct, self.overflow_count):
                w.writerow([repr(float(row[0])), repr(float(row[1])), repr(float(row[2])),
                            repr(float(row[3])), int(row[4])])

    def summary(self) -> dict:
        return {"backend": self.backend, "spec": asdict(self.spec), "mean_err_pct": self.mean,
                "max_err_pct": self.max, "overflow_intervals": self.overflow_intervals,
                **self.extra}


def interval_errors(backend: Backend, a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, int]:
    """Percent errors of one batch and the number of products that left the
    backend's range.

    "Overflow" covers both directions: a product beyond the largest value
    (scored 100%) and a nonzero product flushed to zero (100% by
    construction).
    """
    ref = (a.astype(np.float32) * b.astype(np.float32)).astype(np.float64)
    with np.errstate(invalid="ignore", over="ignore"):
        got = backend.mul(a, b)
        err = np.abs(got - ref) / np.abs(ref) * 100.0
    ovf = ~np.isfinite(got) | ((got == 0) & (ref != 0))
    err[ovf] = 100.0
    return err, int(np.count_nonzero(ovf))


def _one_interval(spec: SweepSpec, backend: Backend, i: int):
    a, b = spec.operands(i)
    # adaptive units restart from their initial split in every interval
    be = backend.fresh() if backend.stateful else backend
    err, bad = interval_errors(be, a, b)
    return float(err.mean()), float(err.max()), bad, be


def sweep_error(spec: SweepSpec, backend: Backend | str, threads: int | None = None) -> ErrorReport:
    """Per-interval error of ``backend`` against binary32 products."""
    if isinstance(backend, str):
        backend = parse_backend(backend)
    e = spec.edges()
    idx = range(spec.intervals)
    n_threads = thread_count() if threads is None else max(1, threads)
    if backend.stateful or n_threads == 1:
        rows = [_one_interval(spec, backend, i) for i in idx]
    else:
        with ThreadPoolExecutor(n_threads) as ex:
            rows = list(ex.map(lambda i: _one_interval(spec, backend.fresh(), i), idx))
    extra = {}
    if backend.stateful:
        extra["adjust_events"] = int(sum(r[3].state.event_count for r in rows))
        extra["saturations"] = int(sum(r[3].state.saturation_count for r in rows))
    return ErrorReport(
        spec=spec,
        backend=backend.name,
        interval_lo=e[:-1].copy(),
        interval_hi=e[1:].copy(),
        mean_err_pct=np.array([r[0] for r in rows]),
        max_err_pct=np.array([r[1] for r in rows]),
        overflow_count=np.array([r[2] for r in rows], dtype=np.int64),
        extra=extra,
    )


@dataclass(frozen=True)
class Reduction:
    mean_pct: float
    max_pct: float
    used_intervals: int
    excluded_intervals: int


def error_reduction(r2f2: ErrorReport, fixed: ErrorReport) -> Reduction:
    """Per-interval ``(fixed - r2f2) / fixed`` in percent, aggregated.

    Intervals where the fixed format is already exact are excluded and
    counted.
    """
    if r2f2.spec != fixed.spec:
        raise ValueError("reports come from different sweep specs")
    ok = fixed.mean_err_pct > 0
    red = (fixed.mean_err_pct[ok] - r2f2.mean_err_pct[ok]) / fixed.mean_err_pct[ok] * 100.0
    if red.size == 0:
        return Reduction(float("nan"), float("nan"), 0, int(ok.size))
    return Reduction(float(red.mean()), float(red.max()), int(ok.sum()), int((~ok).sum()))


def empirical_exponent_bits(v_max: float) -> int:
    """Exponent width suggested by squaring the range bound (base-10 log)."""
    if not v_max > 0:
        raise ValueError("v_max must be positive")
    v = v_max if v_max >= 1 else 1.0 / v_max
    return math.ceil(math.log10(v * v)) + 1


@dataclass(frozen=True)
class GridRow:
    e: int
    m: int
    mean_err_pct: float


def config_grid_search(lo: float, hi: float, total_bits: int = 16, samples: int = 10_000,
                       rng_seed: int = 0) -> list[GridRow]:
    """Mean error of every ExMy with ``e + m + 1 == total_bits`` on (lo, hi),
    best first.  Ties keep the narrower exponent first."""
    if total_bits < 6:
        raise ValueError("total_bits must be >= 6")
    spec = SweepSpec(lo, hi, 1, samples, rng_seed, "linear")
    rows = []
    for e in range(2, total_bits - 1):
        m = total_bits - 1 - e
        if m > 26:
            continue
        rep = sweep_error(spec, Fixed(FixedFormat(e, m)), threads=1)
        rows.append(GridRow(e, m, rep.mean))
    return sorted(rows, key=lambda r: (r.mean_err_pct, r.e))


def write_grid_csv(rows: list[GridRow], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["e", "m", "mean_err_pct"])
        for r in rows:
            w.writerow([r.e, r.m, repr(r.mean_err_pct)])


@dataclass
class Histogram:
    stage: str
    edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def occupied(self) -> int:
        return int(np.count_nonzero(self.counts))


def _hist(label, values, bins, rng):
    counts, edges = np.histogram(values, bins=bins, range=rng)
    return Histogram(label, edges, counts)


def distribution_histogram(steps, values, stages: int = 4, bins: int = 50,
                           threshold: float = 1.0) -> list[Histogram]:
    """Histograms of a recorded value trace.

    ``steps`` and ``values`` are parallel arrays (one entry per recorded
    value).  Returns one histogram per equal step-index stage
    (``stage1``..), then ``all``, ``small`` (``|v| < threshold``) and
    ``large``.  Stage histograms share the whole-run bin range.
    """
    steps = np.asarray(steps, dtype=np.int64).ravel()
    values = np.asarray(values, dtype=np.float64).ravel()
    if values.size == 0 or steps.size != values.size:
        raise ValueError("trace must be non-empty with one step per value")
    if stages < 1:
        raise ValueError("stages must be >= 1")
    lo, hi = float(values.min()), float(values.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    s0, s1 = int(steps.min()), int(steps.max()) + 1
    cuts = np.linspace(s0, s1, stages + 1)
    out = []
    for j in range(stages):
        sel = (steps >= cuts[j]) & (steps < cuts[j + 1])
        out.append(_hist(f"stage{j + 1}", values[sel], bins, (lo, hi)))
    out.append(_hist("all", values, bins, (lo, hi)))
    small = values[np.abs(values) < threshold]
    large = values[np.abs(values) >= threshold]
    out.append(_hist("small", small, bins, (-threshold, threshold)))
    lrng = (float(large.min()), float(large.max())) if large.size else (lo, hi)
    if lrng[0] == lrng[1]:
        lrng = (lrng[0] - 0.5, lrng[1] + 0.5)
    out.append(_hist("large", large, bins, lrng))
    return out


def write_histograms_csv(hists: list[Histogram], path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["stage", "bin_lo", "bin_hi", "count"])
        for h in hists:
            for lo, hi, c in zip(h.edges[:-1], h.edges[1:], h.counts):
                w.writerow([h.stage, repr(float(lo)), repr(float(hi)), int(c)])


def adaptive_backend(descriptor: str, mode: str = "approx") -> R2F2Adaptive:
    return parse_backend(descriptor, adaptive=True, mode=mode)


@dataclass(frozen=True)
class Divergence:
    samples: int
    over_threshold: int
    max_rel_pct: float

    @property
    def fraction(self) -> float:
        return self.over_threshold / self.samples


def approx_divergence(descriptor: str = "<3,9,3>", n: int = 1_000_000, lo: float = 1e-4,
                      hi: float = 1e4, rng_seed: int = 0,
                      threshold_pct: float = 0.1) -> Divergence:
    """How often the truncated product differs from the exact one by more
    than ``threshold_pct`` percent.

    Operands are log-uniform in (lo, hi) and rounded to binary32; each mode
    runs its own adaptive unit over the same stream.
    """
    rng = np.random.default_rng(rng_seed)
    a, b = np.exp(rng.uniform(np.log(lo), np.log(hi), (2, n))).astype(np.float32)
    ap = adaptive_backend(descriptor, "approx").mul(a, b)
    ex = adaptive_backend(descriptor, "exact").mul(a, b)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.abs(ap - ex) / np.abs(ex) * 100.0
    rel = np.where(ap == ex, 0.0, rel)
    return Divergence(n, int(np.count_nonzero(rel > threshold_pct)), float(rel.max()))
