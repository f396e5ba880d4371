"""Heat and shallow-water case studies with a pluggable multiplier."""
from .common import (BackendSpec, Comparison, SimRun, compare_runs, field_metrics,
                     load_config, read_snapshots_csv, write_comparison_csv,
                     write_events_csv, write_snapshots_csv)
from .heat import HeatConfig, heat1d_init, heat1d_run, heat1d_step
from .swe import SweConfig, swe2d_init, swe2d_run, swe2d_step

__all__ = [
    "BackendSpec", "Comparison", "SimRun", "compare_runs", "field_metrics", "load_config",
    "read_snapshots_csv", "write_comparison_csv", "write_events_csv", "write_snapshots_csv",
    "HeatConfig", "heat1d_init", "heat1d_run", "heat1d_step",
    "SweConfig", "swe2d_init", "swe2d_run", "swe2d_step",
]
