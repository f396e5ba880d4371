"""Run records, comparison metrics and file I/O shared by the solvers."""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field, fields

import numpy as np

from ..adjuster import EVENT_KINDS, AdjustmentEvent
from ..backends import Backend, parse_backend


@dataclass
class BackendSpec:
    """Which multiplication a run uses; a fresh :class:`Backend` per run."""
    name: str = "binary32"
    adaptive: bool = False
    mode: str = "approx"

    def build(self) -> Backend:
        return parse_backend(self.name, adaptive=self.adaptive, mode=self.mode)

    def __str__(self):
        return self.name + (" adaptive" if self.adaptive else "")


@dataclass
class SimRun:
    config: object
    snapshots: dict[int, dict[str, np.ndarray]]
    events: np.ndarray
    mult_count: int
    backend: dict = field(default_factory=dict)
    trace: tuple[np.ndarray, np.ndarray] | None = None

    @property
    def final_step(self) -> int:
        return max(self.snapshots)

    def final(self, name: str) -> np.ndarray:
        return self.snapshots[self.final_step][name]

    def event_counts(self) -> dict[str, int]:
        codes = np.bincount(self.events[:, 1], minlength=len(EVENT_KINDS)) if len(self.events) \
            else np.zeros(len(EVENT_KINDS), dtype=np.int64)
        return {k: int(c) for k, c in zip(EVENT_KINDS, codes)}

    def event_list(self) -> list[AdjustmentEvent]:
        return [AdjustmentEvent(int(s), EVENT_KINDS[int(c)], int(o), int(n))
                for s, c, o, n in self.events]

    def summary(self) -> dict:
        return {"mult_count": self.mult_count, "events": int(len(self.events)),
                **self.event_counts(), **self.backend}


@dataclass(frozen=True)
class SnapshotMetrics:
    step: int
    rmse: float
    linf_rel: float


@dataclass(frozen=True)
class Comparison:
    field: str
    per_snapshot: list[SnapshotMetrics]

    @property
    def final(self) -> SnapshotMetrics:
        return self.per_snapshot[-1]


def field_metrics(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """RMSE and ``max|a - b| / max|b|`` (``b`` is the reference)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch {a.shape} vs {b.shape}")
    with np.errstate(invalid="ignore", over="ignore"):
        d = np.abs(a - b)
        rmse = float(np.sqrt(np.mean(d * d)))
        scale = float(np.max(np.abs(b)))
        linf = float(np.max(d)) / scale if scale > 0 else float(np.max(d))
    if not np.isfinite(rmse):
        rmse = float("inf")
    if not np.isfinite(linf):
        linf = float("inf")
    return rmse, linf


def compare_runs(a: SimRun, b: SimRun, name: str | None = None) -> Comparison:
    """Metrics of ``a`` against reference ``b`` over their shared snapshots."""
    steps = sorted(set(a.snapshots) & set(b.snapshots))
    if not steps:
        raise ValueError("runs share no snapshot steps")
    if name is None:
        name = next(iter(b.snapshots[steps[0]]))
    rows = []
    for s in steps:
        rmse, linf = field_metrics(a.snapshots[s][name], b.snapshots[s][name])
        rows.append(SnapshotMetrics(s, rmse, linf))
    return Comparison(name, rows)


def write_comparison_csv(cmp: Comparison, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step", "field", "rmse", "linf_rel"])
        for r in cmp.per_snapshot:
            w.writerow([r.step, cmp.field, repr(r.rmse), repr(r.linf_rel)])


def write_snapshots_csv(run: SimRun, path) -> None:
    """``step,index,<fields>`` for 1D runs, ``step,i,j,<fields>`` for 2D."""
    first = run.snapshots[min(run.snapshots)]
    names = list(first)
    ndim = first[names[0]].ndim
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["step"] + (["index"] if ndim == 1 else ["i", "j"]) + names)
        for s in sorted(run.snapshots):
            arrs = [np.asarray(run.snapshots[s][n], dtype=np.float64) for n in names]
            for idx in np.ndindex(arrs[0].shape):
                w.writerow([s, *idx, *(repr(float(a[idx])) for a in arrs)])


def read_snapshots_csv(path) -> dict[int, dict[str, np.ndarray]]:
    """Inverse of :func:`write_snapshots_csv`."""
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    head, body = rows[0], rows[1:]
    nidx = 1 if head[1] == "index" else 2
    names = head[1 + nidx:]
    by_step: dict[int, list] = {}
    for r in body:
        by_step.setdefault(int(r[0]), []).append(r)
    out = {}
    for s, rs in by_step.items():
        idx = np.array([[int(v) for v in r[1:1 + nidx]] for r in rs])
        shape = tuple(idx.max(axis=0) + 1)
        out[s] = {}
        for k, n in enumerate(names):
            a = np.empty(shape)
            a[tuple(idx.T)] = [float(r[1 + nidx + k]) for r in rs]
            out[s][n] = a
    return out


def write_events_csv(run: SimRun, path) -> None:
    from ..adjuster import write_events_csv as _w
    _w(run.event_list(), path)


def config_from_dict(cls, d: dict):
    """Build a config dataclass from a dict, rejecting unknown keys.

    ``backend`` is either a name (with optional top-level ``adaptive`` and
    ``mode``) or an object with ``name``, ``adaptive`` and ``mode``.
    """
    d = dict(d)
    be = d.pop("backend", "binary32")
    if isinstance(be, dict):
        if "adaptive" in d or "mode" in d:
            raise ValueError("give adaptive/mode inside the backend object")
        extra = set(be) - {"name", "adaptive", "mode"}
        if extra:
            raise ValueError(f"unknown backend keys: {sorted(extra)}")
        be = dict(be)
        d["adaptive"] = be.get("adaptive", False)
        d["mode"] = be.get("mode", "approx")
        be = be.get("name", "binary32")
    if not isinstance(be, str):
        raise ValueError("backend must be a name or an object")
    backend = BackendSpec(be, bool(d.pop("adaptive", False)), d.pop("mode", "approx"))
    known = {f.name for f in fields(cls)} - {"backend"}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    if "snapshots" in d:
        d["snapshots"] = tuple(int(s) for s in d["snapshots"])
    return cls(backend=backend, **d)


def load_config(path):
    """Read a JSON run config; ``equation`` selects heat or swe."""
    from .heat import HeatConfig
    from .swe import SweConfig
    with open(path) as fh:
        try:
            d = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"malformed config {path}: {exc}") from None
    if not isinstance(d, dict):
        raise ValueError("config must be a JSON object")
    eq = d.pop("equation", None)
    if eq == "heat":
        return config_from_dict(HeatConfig, d)
    if eq == "swe":
        return config_from_dict(SweConfig, d)
    raise ValueError(f"config equation must be 'heat' or 'swe', got {eq!r}")
