"""Time integration, stop monitors and Lagrangian tracers."""
from .integrate import (
    STOP_REASONS, RunControls, RunResult, Snapshot, SolverState, StopReport, Tracer, TracerTrack,
    advance_tracers, cfl_dt, run, step,
)
from .model import ModelParams, NaNDetected, SpectralModel, StageInfo, rhs

__all__ = [
    "STOP_REASONS", "ModelParams", "NaNDetected", "RunControls", "RunResult", "Snapshot",
    "SolverState", "SpectralModel", "StageInfo", "StopReport", "Tracer", "TracerTrack",
    "advance_tracers", "cfl_dt", "rhs", "run", "step",
]
