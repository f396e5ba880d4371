import csv

import numpy as np
import pytest

from r2f2 import profiler as P
from r2f2.backends import Binary32, Fixed, parse_backend
from r2f2.fixedformat import FixedFormat, max_value
from r2f2.pde import HeatConfig, heat1d_run

SMALL = P.SweepSpec(1e-4, 1e4, 40, 50, rng_seed=7)


def test_spec_validation():
    for bad in [dict(lo=0), dict(lo=5, hi=1), dict(intervals=0), dict(samples_per_interval=0),
                dict(spacing="cubic")]:
        with pytest.raises(ValueError):
            P.SweepSpec(**{**dict(lo=1e-4, hi=1e4), **bad})


def test_operands_stay_in_interval_and_are_binary32():
    e = SMALL.edges()
    for i in (0, 17, 39):
        a, b = SMALL.operands(i)
        lo, hi = np.float32(e[i]), np.float32(e[i + 1])
        assert np.all((a >= lo) & (a <= hi)) and np.all((b >= lo) & (b <= hi))
        assert np.array_equal(a, a.astype(np.float32).astype(np.float64))


def test_binary32_self_comparison_is_zero():
    rep = P.sweep_error(SMALL, Binary32())
    assert rep.mean == 0 and rep.max == 0 and rep.overflow_intervals == 0


def test_reproducible_bit_for_bit():
    a = P.sweep_error(SMALL, "E5M10")
    b = P.sweep_error(SMALL, "E5M10", threads=3)
    assert np.array_equal(a.mean_err_pct, b.mean_err_pct)
    assert np.array_equal(a.max_err_pct, b.max_err_pct)


def test_overflowing_intervals_score_100():
    spec = P.SweepSpec(300, 400, 2, 50)            # every product exceeds 65504
    rep = P.sweep_error(spec, "E5M10")
    assert np.all(rep.mean_err_pct == 100) and np.all(rep.overflow_count == 50)


def test_adaptive_r2f2_never_overflows():
    rep = P.sweep_error(SMALL, P.adaptive_backend("<3,9,3>"))
    fixed = P.sweep_error(SMALL, "E5M10")
    assert rep.overflow_intervals == 0 and fixed.overflow_intervals > 0
    assert rep.extra["saturations"] == 0


def test_error_reduction_properties():
    fixed = P.sweep_error(SMALL, "E5M10")
    assert P.error_reduction(fixed, fixed).mean_pct == 0
    with pytest.raises(ValueError):
        P.error_reduction(fixed, P.sweep_error(P.SweepSpec(1, 2, 3, 4), "E5M10"))
    r = P.sweep_error(SMALL, P.adaptive_backend("<3,9,3>"))
    red = P.error_reduction(r, fixed)
    assert red.used_intervals + red.excluded_intervals == SMALL.intervals
    assert 0 < red.mean_pct <= 100


def test_error_reduction_sign_flips_on_swap():
    for i in range(5):
        spec = P.SweepSpec(10.0 ** (i - 2), 10.0 ** (i - 1), 1, 200, rng_seed=i)
        a = P.sweep_error(spec, "E5M10")
        b = P.sweep_error(spec, "E6M9")
        ab, ba = P.error_reduction(a, b).mean_pct, P.error_reduction(b, a).mean_pct
        assert np.sign(ab) == -np.sign(ba)


def test_excluded_intervals_counted():
    spec = P.SweepSpec(1.0, 1.0001, 2, 5)
    exact = P.sweep_error(spec, Binary32())
    assert P.error_reduction(exact, exact).excluded_intervals == 2


@pytest.mark.parametrize("v,bits", [(0.07, 4), (110, 6), (1100, 8), (1, 1), (0.5, 2), (10, 3)])
def test_empirical_exponent_bits(v, bits):
    assert P.empirical_exponent_bits(v) == bits


def test_empirical_exponent_bits_rejects_nonpositive():
    with pytest.raises(ValueError):
        P.empirical_exponent_bits(0)


@pytest.mark.parametrize("lo,hi,best", [(0.05, 0.07, 5), (100, 110, 5), (1000, 1100, 6)])
def test_grid_search_best_exponent(lo, hi, best):
    rows = P.config_grid_search(lo, hi, 16, 10_000)
    assert rows[0].e == best
    assert all(r.e + r.m + 1 == 16 for r in rows)
    assert [r.mean_err_pct for r in rows] == sorted(r.mean_err_pct for r in rows)


@pytest.mark.parametrize("lo,hi", [(0.05, 0.07), (100, 110), (1000, 1100)])
def test_grid_search_stable_under_more_samples(lo, hi):
    assert P.config_grid_search(lo, hi, 16, 10_000)[0] .e == \
        P.config_grid_search(lo, hi, 16, 100_000, rng_seed=1)[0].e


def test_grid_search_range_4_5():
    # products reach 25, beyond E3M12's largest value (just under 16)
    assert max_value(FixedFormat(3, 12)) < 16
    rows = P.config_grid_search(4, 5, 16, 10_000)
    assert rows[0].e == 4
    assert {r.e: r.mean_err_pct for r in rows}[3] > 50


def test_grid_search_rejects_tiny_budget():
    with pytest.raises(ValueError):
        P.config_grid_search(1, 2, 5)


def test_histogram_constant_trace():
    steps = np.repeat(np.arange(8), 10)
    hs = P.distribution_histogram(steps, np.full(80, 3.0), stages=4, bins=10)
    assert [h.stage for h in hs] == ["stage1", "stage2", "stage3", "stage4", "all", "small",
                                     "large"]
    assert all(h.occupied() == 1 for h in hs[:5])
    assert sum(h.total for h in hs[:4]) == 80 == hs[4].total


def test_histogram_single_stage_equals_whole_run():
    rng = np.random.default_rng(0)
    v = rng.normal(size=500)
    hs = P.distribution_histogram(np.arange(500), v, stages=1)
    assert np.array_equal(hs[0].counts, hs[1].counts)
    assert hs[2].total + hs[3].total == 500


def test_histogram_rejects_empty():
    with pytest.raises(ValueError):
        P.distribution_histogram([], [])


def test_heat_trace_stage_ranges_shrink():
    run = heat1d_run(HeatConfig(n=64, steps=800, init="sin", trace_every=5, r=0.5))
    steps, vals = run.trace
    hs = P.distribution_histogram(steps, vals, stages=4)
    cuts = np.linspace(steps.min(), steps.max() + 1, 5)
    peaks = [np.abs(vals[(steps >= cuts[j]) & (steps < cuts[j + 1])]).max() for j in range(4)]
    assert all(b < a for a, b in zip(peaks, peaks[1:]))
    assert sum(h.total for h in hs[:4]) == vals.size


def test_csv_schemas(tmp_path):
    rep = P.sweep_error(P.SweepSpec(1, 2, 3, 4), "E5M10")
    rep.write_csv(tmp_path / "r.csv")
    rows = list(csv.reader(open(tmp_path / "r.csv")))
    assert rows[0] == ["interval_lo", "interval_hi", "mean_err_pct", "max_err_pct",
                       "overflow_count"] and len(rows) == 4
    P.write_grid_csv(P.config_grid_search(1, 2, 8, 100), tmp_path / "g.csv")
    assert next(csv.reader(open(tmp_path / "g.csv"))) == ["e", "m", "mean_err_pct"]
    P.write_histograms_csv(P.distribution_histogram([0, 1], [1.0, 2.0]), tmp_path / "h.csv")
    assert next(csv.reader(open(tmp_path / "h.csv"))) == ["stage", "bin_lo", "bin_hi", "count"]


def test_thread_count(monkeypatch):
    monkeypatch.setenv("R2F2_THREADS", "3")
    assert P.thread_count() == 3
    monkeypatch.setenv("R2F2_THREADS", "0")
    assert P.thread_count() >= 1
    monkeypatch.setenv("R2F2_THREADS", "many")
    with pytest.raises(ValueError):
        P.thread_count()


def test_approx_divergence_small():
    d = P.approx_divergence(n=20_000, rng_seed=3)
    assert d.samples == 20_000 and 0 <= d.fraction < 0.0004
