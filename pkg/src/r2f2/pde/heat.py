"""Explicit finite-difference solver for the 1D heat equation.

Only the product ``r * laplacian`` goes through the backend.  The field and
all additions are binary32, except that a binary64 backend keeps the whole
run in binary64 so it reproduces a plain double-precision solver.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..backends import Backend, Binary64
from .common import BackendSpec, SimRun

INITS = ("sin", "exp")
# exp init: 500 at the centre decaying to 1e-4 at both ends
DEFAULT_AMPLITUDE = 500.0
DEFAULT_WIDTH = 4.0 * math.log(DEFAULT_AMPLITUDE / 1e-4)


@dataclass
class HeatConfig:
    n: int = 512
    steps: int = 2000
    r: float = 0.25
    init: str = "sin"
    amplitude: float = DEFAULT_AMPLITUDE
    width: float = DEFAULT_WIDTH
    snapshots: tuple[int, ...] = ()
    trace_every: int = 0
    seed: int = 0
    backend: BackendSpec = field(default_factory=BackendSpec)

    def __post_init__(self):
        if self.n < 3:
            raise ValueError("n must be >= 3")
        if self.steps < 0:
            raise ValueError("steps must be >= 0")
        if not (0 < self.r <= 0.5):
            raise ValueError(f"r={self.r} outside the stable range (0, 0.5]")
        if self.init not in INITS:
            raise ValueError(f"init must be one of {INITS}")
        if any(s < 0 or s > self.steps for s in self.snapshots):
            raise ValueError("snapshot steps must lie in [0, steps]")
        if self.trace_every < 0:
            raise ValueError("trace_every must be >= 0")
        if isinstance(self.backend, str):
            self.backend = BackendSpec(self.backend)

    def snapshot_steps(self) -> list[int]:
        return sorted(set(self.snapshots) | {0, self.steps})


def heat1d_init(kind: str, n: int, amplitude: float = DEFAULT_AMPLITUDE,
                width: float = DEFAULT_WIDTH) -> np.ndarray:
    """Initial field in binary64 with zero Dirichlet ends.

    ``sin``: ``A sin(2 pi x)``; ``exp``: ``A exp(-c (x - 1/2)^2)``, with
    ``x = i / (n - 1)``.
    """
    if n < 3:
        raise ValueError("n must be >= 3")
    x = np.arange(n) / (n - 1)
    if kind == "sin":
        u = amplitude * np.sin(2 * np.pi * x)
    elif kind == "exp":
        u = amplitude * np.exp(-width * (x - 0.5) ** 2)
    else:
        raise ValueError(f"init must be one of {INITS}")
    u[0] = u[-1] = 0.0
    return u


def heat1d_step(u: np.ndarray, r: float, backend: Backend, step: int = 0) -> np.ndarray:
    """One explicit update; the field dtype sets the add/subtract precision."""
    dt = u.dtype.type
    lap = u[:-2] - dt(2) * u[1:-1] + u[2:]
    prod = backend.mul(np.full(lap.shape, float(dt(r))), lap, step)
    out = u.copy()
    out[1:-1] = u[1:-1] + prod.astype(u.dtype)
    out[0] = out[-1] = 0
    return out


def heat1d_run(cfg: HeatConfig, backend: Backend | None = None) -> SimRun:
    be = backend if backend is not None else cfg.backend.build()
    dtype = np.float64 if isinstance(be, Binary64) else np.float32
    u = heat1d_init(cfg.init, cfg.n, cfg.amplitude, cfg.width).astype(dtype)
    want = set(cfg.snapshot_steps())
    snaps = {0: {"u": u.astype(np.float64)}}
    t_steps, t_vals = [], []
    for s in range(cfg.steps):
        if cfg.trace_every and s % cfg.trace_every == 0:
            t_steps.append(np.full(u.size, s))
            t_vals.append(u.astype(np.float64))
        u = heat1d_step(u, cfg.r, be, s)
        if s + 1 in want:
            snaps[s + 1] = {"u": u.astype(np.float64)}
    state = getattr(be, "state", None)
    events = state.event_array().copy() if state is not None else np.empty((0, 4), np.int64)
    trace = (np.concatenate(t_steps), np.concatenate(t_vals)) if t_steps else None
    return SimRun(cfg, snaps, events, be.mult_count, be.summary(), trace)
