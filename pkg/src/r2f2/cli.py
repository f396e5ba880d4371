"""Command-line entry point: ``r2f2 <command> [flags]``.

Exit status is 0 on success, 1 on invalid input (bad flags, malformed
config, unwritable output, failed self-checks) and 2 on internal errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import profiler, selftest
from .backends import parse_backend
from .pde import (BackendSpec, HeatConfig, SweConfig, compare_runs, heat1d_run,
                  load_config, read_snapshots_csv, swe2d_run, write_comparison_csv,
                  write_events_csv, write_snapshots_csv)
from .pde.common import SimRun


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p):
    p.add_argument("--seed", type=int, default=0, help="rng seed (default 0)")
    p.add_argument("--out", default="r2f2_out", help="output directory")


def _backend_flags(p, default="binary32"):
    p.add_argument("--backend", "--format", dest="backend", default=default,
                   help='binary64, binary32, ExMy (e.g. E5M10) or "<EB,MB,FX>[@k]"')
    p.add_argument("--adaptive", action="store_true", help="self-adjusting R2F2 unit")
    p.add_argument("--mode", choices=("approx", "exact"), default="approx")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="r2f2", description="Runtime-reconfigurable float multiplier tools")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("profile-sweep", help="operand-range error sweep")
    _backend_flags(p, default="<3,9,3>")
    p.add_argument("--lo", type=float, default=1e-4)
    p.add_argument("--hi", type=float, default=1e4)
    p.add_argument("--intervals", type=int, default=1000)
    p.add_argument("--pairs", type=int, default=100, help="samples per interval")
    p.add_argument("--spacing", choices=profiler.SPACINGS, default="log")
    p.add_argument("--baseline", help="second backend to compute error reduction against")
    p.add_argument("--full-scale", action="store_true", help="10000 intervals x 1000 pairs")
    _common(p)

    p = sub.add_parser("grid-search", help="rank ExMy formats on one range")
    p.add_argument("--lo", type=float, required=True)
    p.add_argument("--hi", type=float, required=True)
    p.add_argument("--bits", type=int, default=16)
    p.add_argument("--samples", type=int, default=10_000)
    _common(p)

    p = sub.add_parser("eq1", help="empirical exponent width for a range bound")
    p.add_argument("--vmax", type=float, required=True)
    _common(p)

    p = sub.add_parser("distribution", help="value histograms of a heat run")
    _backend_flags(p)
    p.add_argument("--init", choices=("sin", "exp"), default="sin")
    p.add_argument("--n", type=int, default=512)
    p.add_argument("--steps", type=int, default=2000)
    p.add_argument("--every", type=int, default=10, help="record the field every N steps")
    p.add_argument("--stages", type=int, default=4)
    p.add_argument("--bins", type=int, default=50)
    p.add_argument("--threshold", type=float, default=1.0)
    _common(p)

    for name, cls in (("sim-heat", HeatConfig), ("sim-swe", SweConfig)):
        p = sub.add_parser(name, help=f"{'heat' if cls is HeatConfig else 'shallow water'} run")
        p.add_argument("--config", help="JSON config (flags below override it)")
        _backend_flags(p, default=None)
        p.add_argument("--steps", type=int)
        p.add_argument("--snapshots", type=int, nargs="*")
        if cls is HeatConfig:
            p.add_argument("--n", type=int)
            p.add_argument("--r", type=float)
            p.add_argument("--init", choices=("sin", "exp"))
        else:
            for f in ("nx", "ny"):
                p.add_argument(f"--{f}", type=int)
            for f in ("dt", "dx", "dy", "g", "depth", "amplitude", "sigma"):
                p.add_argument(f"--{f}", type=float)
        _common(p)

    p = sub.add_parser("compare", help="metrics between two snapshot CSVs")
    p.add_argument("run", help="snapshot CSV under test")
    p.add_argument("reference", help="reference snapshot CSV")
    p.add_argument("--field", help="field column (default: first)")
    _common(p)

    p = sub.add_parser("selftest", help="exhaustive oracle and property suites")
    p.add_argument("--quick", action="store_true", help="smaller exhaustive widths")
    _common(p)
    return ap


def _outdir(args) -> Path:
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise UsageError(f"cannot create output directory {out}: {exc}") from None
    return out


def _dump(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=str)
        fh.write("\n")


def cmd_profile_sweep(args) -> str:
    intervals, pairs = (10_000, 1000) if args.full_scale else (args.intervals, args.pairs)
    spec = profiler.SweepSpec(args.lo, args.hi, intervals, pairs, args.seed, args.spacing)
    be = parse_backend(args.backend, args.adaptive, args.mode)
    out = _outdir(args)
    rep = profiler.sweep_error(spec, be)
    rep.write_csv(out / "sweep.csv")
    summary = {"command": "profile-sweep", "seed": args.seed, "report": rep.summary()}
    line = (f"profile-sweep {rep.backend}: mean {rep.mean:.4f}% max {rep.max:.2f}% "
            f"overflow intervals {rep.overflow_intervals}")
    if args.baseline:
        base = profiler.sweep_error(spec, parse_backend(args.baseline))
        base.write_csv(out / "baseline.csv")
        red = profiler.error_reduction(rep, base)
        summary["baseline"] = base.summary()
        summary["reduction"] = asdict(red)
        line += (f"; vs {base.backend} (overflow intervals {base.overflow_intervals}): "
                 f"reduction mean {red.mean_pct:.1f}% max {red.max_pct:.1f}%")
    _dump(out / "summary.json", summary)
    return line


def cmd_grid_search(args) -> str:
    rows = profiler.config_grid_search(args.lo, args.hi, args.bits, args.samples, args.seed)
    out = _outdir(args)
    profiler.write_grid_csv(rows, out / "grid.csv")
    best = rows[0]
    return (f"grid-search ({args.lo}, {args.hi}) {args.bits} bits: best E{best.e}M{best.m} "
            f"mean {best.mean_err_pct:.4f}%; eq1 suggests "
            f"{profiler.empirical_exponent_bits(args.hi)}")


def cmd_eq1(args) -> str:
    return str(profiler.empirical_exponent_bits(args.vmax))


def cmd_distribution(args) -> str:
    cfg = HeatConfig(n=args.n, steps=args.steps, init=args.init, trace_every=args.every,
                     backend=BackendSpec(args.backend, args.adaptive, args.mode))
    run = heat1d_run(cfg)
    if run.trace is None:
        raise UsageError("no values recorded; need steps > 0 and --every > 0")
    hists = profiler.distribution_histogram(*run.trace, stages=args.stages, bins=args.bins,
                                            threshold=args.threshold)
    out = _outdir(args)
    profiler.write_histograms_csv(hists, out / "histogram.csv")
    spans = []
    for h in hists[:args.stages]:
        occ = np.nonzero(h.counts)[0]
        spans.append(f"{h.stage} [{h.edges[occ[0]]:.3g}, {h.edges[occ[-1] + 1]:.3g}]"
                     if occ.size else f"{h.stage} empty")
    return "distribution: " + ", ".join(spans)


def _sim_config(args, cls):
    if args.config:
        try:
            cfg = load_config(args.config)
        except OSError as exc:
            raise UsageError(f"cannot read config: {exc}") from None
        if not isinstance(cfg, cls):
            raise UsageError(f"config is not a {cls.__name__}")
    else:
        cfg = cls()
    skip = {"config", "backend", "adaptive", "mode", "seed", "out", "command", "snapshots"}
    for k, v in vars(args).items():
        if k not in skip and v is not None:
            setattr(cfg, k, v)
    if args.snapshots is not None:
        cfg.snapshots = tuple(args.snapshots)
    if args.backend is not None:
        cfg.backend = BackendSpec(args.backend, args.adaptive, args.mode)
    elif args.adaptive or args.mode != "approx":
        cfg.backend = BackendSpec(cfg.backend.name, args.adaptive or cfg.backend.adaptive,
                                  args.mode)
    cfg.seed = args.seed
    cfg.__post_init__()
    return cfg


def _sim_outputs(run: SimRun, args, name) -> str:
    out = _outdir(args)
    write_snapshots_csv(run, out / "snapshots.csv")
    write_events_csv(run, out / "events.csv")
    cfg = run.config
    _dump(out / "summary.json", {"command": name, "seed": args.seed,
                                 "config": {**vars(cfg), "backend": vars(cfg.backend)},
                                 "summary": run.summary()})
    ev = run.event_counts()
    return (f"{name} {cfg.backend}: {run.mult_count} multiplications, "
            f"{len(run.events)} adjustments (overflow-widen {ev['overflow-widen']}, "
            f"underflow-widen {ev['underflow-widen']}, "
            f"redundancy-narrow {ev['redundancy-narrow']})")


def cmd_sim_heat(args) -> str:
    return _sim_outputs(heat1d_run(_sim_config(args, HeatConfig)), args, "sim-heat")


def cmd_sim_swe(args) -> str:
    return _sim_outputs(swe2d_run(_sim_config(args, SweConfig)), args, "sim-swe")


def cmd_compare(args) -> str:
    try:
        a = SimRun(None, read_snapshots_csv(args.run), np.empty((0, 4), np.int64), 0)
        b = SimRun(None, read_snapshots_csv(args.reference), np.empty((0, 4), np.int64), 0)
    except (OSError, IndexError, KeyError) as exc:
        raise UsageError(f"cannot read snapshots: {exc}") from None
    cmp = compare_runs(a, b, args.field)
    out = _outdir(args)
    write_comparison_csv(cmp, out / "comparison.csv")
    f = cmp.final
    return f"compare {cmp.field} step {f.step}: rmse {f.rmse:.6g} linf_rel {f.linf_rel:.6g}"


def cmd_selftest(args) -> tuple[str, int]:
    checks = selftest.run_all(quick=args.quick)
    for c in checks:
        print(c.line())
    failed = [c.name for c in checks if not c.passed]
    status = f"{len(checks) - len(failed)}/{len(checks)} checks passed"
    return ("selftest: " + status + (f"; failed: {', '.join(failed)}" if failed else ""),
            1 if failed else 0)


COMMANDS = {
    "profile-sweep": cmd_profile_sweep,
    "grid-search": cmd_grid_search,
    "eq1": cmd_eq1,
    "distribution": cmd_distribution,
    "sim-heat": cmd_sim_heat,
    "sim-swe": cmd_sim_swe,
    "compare": cmd_compare,
    "selftest": cmd_selftest,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        res = COMMANDS[args.command](args)
    except (UsageError, ValueError) as exc:
        print(f"r2f2: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"r2f2: internal error: {exc!r}", file=sys.stderr)
        return 2
    code = 0
    if isinstance(res, tuple):
        res, code = res
    print(res)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
