"""SSP-RK3 time stepping with an exact integrating factor, stop monitors, tracers."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from ..diagnostics.records import DiagnosticsRecord, RecordMaker
from ..spectral.grid import Grid, PhysicalField, SpectralField, forward_transform, irfft
from ..spectral.interp import evaluate
from .model import ModelParams, NaNDetected, SpectralModel, StageInfo

STOP_REASONS = ("reached_T", "gradient_threshold", "resolution_loss", "nan_detected")
EPS_FLOOR = 1e-12


@dataclass(frozen=True)
class SolverState:
    t: float
    theta_hat: SpectralField
    dt: float
    step_count: int = 0


@dataclass(frozen=True)
class StopReport:
    reason: str
    t_stop: float
    final_diagnostics: DiagnosticsRecord | None

    def __post_init__(self):
        if self.reason not in STOP_REASONS:
            raise ValueError(f"unknown stop reason {self.reason!r}")


@dataclass(frozen=True)
class Tracer:
    """Lagrangian marker; ``position`` is kept wrapped to ``[0, L)^n``."""

    position: tuple[float, ...]
    theta_initial: float


@dataclass(frozen=True)
class Snapshot:
    t: float
    field: PhysicalField


@dataclass
class RunControls:
    """Integration controls.

    ``record_every`` is a time cadence; ``None`` records after every step.
    Steps are shortened to land exactly on record and snapshot times.
    ``dt_fixed`` bypasses the CFL rule (still shortened at event times).
    """

    T_end: float = 10.0
    c_cfl: float = 0.4
    dt_max: float = 0.05
    dt_fixed: float | None = None
    grad_factor: float = 1e3
    tail_threshold: float = 1e-4
    record_every: float | None = 0.01
    snapshot_times: Sequence[float] = ()
    tracer_points: Sequence[Sequence[float]] = ()
    tracer_every: int = 1
    project_initial: bool = True
    max_steps: int = 10_000_000
    on_record: Callable[[DiagnosticsRecord], None] | None = None
    on_snapshot: Callable[[Snapshot], None] | None = None

    def __post_init__(self):
        if not 0 < self.c_cfl <= 1:
            raise ValueError(f"c_cfl out of (0,1]: {self.c_cfl}")
        if not self.T_end >= 0:
            raise ValueError(f"T_end must be >= 0: {self.T_end}")
        if not self.dt_max > 0:
            raise ValueError(f"dt_max must be > 0: {self.dt_max}")
        if self.record_every is not None and not self.record_every > 0:
            raise ValueError(f"record_every must be > 0: {self.record_every}")


@dataclass
class TracerTrack:
    """Tracer positions and interpolated theta at recorded step times."""

    t: list[float] = field(default_factory=list)
    positions: list[np.ndarray] = field(default_factory=list)
    theta: list[np.ndarray] = field(default_factory=list)


@dataclass
class RunResult:
    stop: StopReport
    series: list[DiagnosticsRecord]
    snapshots: list[Snapshot]
    tracers: list[Tracer]
    track: TracerTrack
    final_state: SolverState
    cfl_history: list[tuple[float, float]]


def _cfl(u_max: float, grid: Grid, c_cfl: float, dt_max: float | None) -> float:
    dt = c_cfl * grid.dx / max(u_max, EPS_FLOOR)
    return min(dt, dt_max) if dt_max is not None else dt


def cfl_dt(state: SolverState, p: ModelParams, c_cfl: float = 0.4, dt_max: float | None = None,
           model: SpectralModel | None = None) -> float:
    """``c_cfl dx / max(|u|_inf, 1e-12)``, clamped to ``dt_max`` when given."""
    if not 0 < c_cfl <= 1:
        raise ValueError(f"c_cfl out of (0,1]: {c_cfl}")
    model = model or SpectralModel(state.theta_hat.grid, p)
    if not p.advect:
        return _cfl(0.0, model.grid, c_cfl, dt_max)
    g = model.grid
    th = state.theta_hat.coeffs * model.mask
    u_sq = sum(irfft(th * v, g) ** 2 for v in model.vsym)
    return _cfl(float(np.sqrt(np.max(u_sq))), g, c_cfl, dt_max)


def _rk3(model: SpectralModel, c0: np.ndarray, dt: float, n0: np.ndarray | None = None,
         keep_velocity: bool = False):
    """One integrating-factor SSP-RK3 step from coefficients ``c0``.

    With ``E(s) = exp(-kappa Lambda^gamma s)`` and ``N`` the advective term:
    ``c1 = E(dt)(c0 + dt N(c0))``,
    ``c2 = 3/4 E(dt/2) c0 + 1/4 E(-dt/2)(c1 + dt N(c1))``,
    ``c3 = 1/3 E(dt) c0 + 2/3 E(dt/2)(c2 + dt N(c2))``.
    Returns the new coefficients and the stage infos (for tracers).
    """
    infos = []
    if n0 is None:
        n0, info0 = model.nonlinear(c0, keep_velocity)
        infos.append(info0)
    e_full = model.propagator(dt)
    e_half = model.propagator(0.5 * dt)
    e_back = 1.0 / e_half if model.rate is not None else 1.0
    c1 = e_full * (c0 + dt * n0)
    n1, info1 = model.nonlinear(c1, keep_velocity)
    c2 = 0.75 * e_half * c0 + 0.25 * e_back * (c1 + dt * n1)
    n2, info2 = model.nonlinear(c2, keep_velocity)
    c3 = (1.0 / 3.0) * e_full * c0 + (2.0 / 3.0) * e_half * (c2 + dt * n2)
    c3 = c3 * model.mask
    if not np.all(np.isfinite(c3)):
        raise NaNDetected("non-finite coefficients after step")
    infos.extend([info1, info2])
    return c3, infos


def step(state: SolverState, p: ModelParams, model: SpectralModel | None = None) -> SolverState:
    """Advance by ``state.dt`` with SSP-RK3 plus the exact dissipative factor.

    Raises
    ------
    NaNDetected
        If any stage produces non-finite values.
    """
    model = model or SpectralModel(state.theta_hat.grid, p)
    c3, _ = _rk3(model, state.theta_hat.coeffs, state.dt)
    return SolverState(state.t + state.dt, SpectralField(model.grid, c3), state.dt, state.step_count + 1)


def _wrap(x: np.ndarray, L: float) -> np.ndarray:
    y = np.mod(x, L)
    y[y >= L] = 0.0
    return y


def _velocity_at(u_full: list[np.ndarray], grid: Grid, pts: np.ndarray) -> np.ndarray:
    return np.stack([evaluate(uf, pts, grid=grid, full=True) for uf in u_full], axis=1)


def _as_full(u, grid: Grid) -> list[np.ndarray]:
    out = []
    for comp in u:
        if isinstance(comp, SpectralField):
            out.append(comp.full())
        else:
            out.append(SpectralField(grid, comp).full())
    return out


def advance_tracers(tracers: Sequence[Tracer], u_field, dt: float) -> list[Tracer]:
    """SSP-RK3 update of tracer positions with trigonometric interpolation of ``u``.

    Parameters
    ----------
    u_field : VectorField or sequence of three VectorFields
        Spectral velocity. A single field is frozen over the step; three
        fields are the velocities at the RK stage times ``t, t + dt, t + dt/2``.
    """
    if not tracers:
        return []
    stages = list(u_field) if isinstance(u_field, (list, tuple)) and len(u_field) == 3 \
        and not isinstance(u_field[0], SpectralField) else [u_field] * 3
    grid = stages[0][0].grid
    fulls = [_as_full(s, grid) for s in stages]
    x0 = np.array([tr.position for tr in tracers], dtype=float)
    x1 = x0 + dt * _velocity_at(fulls[0], grid, x0)
    x2 = 0.75 * x0 + 0.25 * (x1 + dt * _velocity_at(fulls[1], grid, x1))
    x3 = x0 / 3.0 + (2.0 / 3.0) * (x2 + dt * _velocity_at(fulls[2], grid, x2))
    x3 = _wrap(x3, grid.L)
    return [Tracer(tuple(float(c) for c in x), tr.theta_initial) for x, tr in zip(x3, tracers)]


class _Events:
    """Upcoming record and snapshot times, generated without accumulation drift."""

    def __init__(self, controls: RunControls):
        self.every = controls.record_every
        self.k_rec = 0
        self.snaps = sorted(float(s) for s in controls.snapshot_times if 0 <= s <= controls.T_end)
        self.i_snap = 0
        self.T = controls.T_end

    def next_record(self) -> float:
        return self.k_rec * self.every if self.every is not None else math.inf

    def next_snapshot(self) -> float:
        return self.snaps[self.i_snap] if self.i_snap < len(self.snaps) else math.inf

    def next_time(self) -> float:
        return min(self.next_record(), self.next_snapshot(), self.T)


def _close(a: float, b: float) -> bool:
    if not math.isfinite(b):
        return False
    return abs(a - b) <= 1e-12 * max(1.0, abs(b))


def run(initial: PhysicalField, p: ModelParams, controls: RunControls | None = None) -> RunResult:
    """Integrate from ``initial`` until ``T_end`` or a stop trigger.

    Stops are checked on the state at the start of each step, so the final
    state is always the last one that passed every monitor.
    """
    controls = controls or RunControls()
    grid = initial.grid
    model = SpectralModel(grid, p)
    maker = RecordMaker(grid, p.alpha)
    coeffs = forward_transform(initial).coeffs
    if controls.project_initial:
        coeffs = coeffs * model.mask
    t = 0.0
    steps = 0
    series: list[DiagnosticsRecord] = []
    snapshots: list[Snapshot] = []
    cfl_history: list[tuple[float, float]] = []
    events = _Events(controls)

    tracers = []
    track = TracerTrack()
    if len(controls.tracer_points):
        pts = _wrap(np.array(controls.tracer_points, dtype=float).reshape(-1, grid.n), grid.L)
        th0 = evaluate(SpectralField(grid, coeffs), pts)
        tracers = [Tracer(tuple(map(float, x)), float(v)) for x, v in zip(pts, th0)]
    keep_velocity = bool(tracers)

    def record_tracers(c):
        pos = np.array([tr.position for tr in tracers])
        track.t.append(t)
        track.positions.append(pos)
        track.theta.append(evaluate(SpectralField(grid, c), pos))

    grad_threshold = None
    reason = None
    last_info: StageInfo | None = None
    dt = controls.dt_fixed or controls.dt_max

    while True:
        try:
            n0, info = model.nonlinear(coeffs, keep_velocity)
        except NaNDetected:
            reason = "nan_detected"
            break
        last_info = info
        if grad_threshold is None:
            grad_threshold = controls.grad_factor * info.grad_inf if info.grad_inf > 0 else math.inf
        if tracers and (steps % controls.tracer_every == 0):
            record_tracers(coeffs)

        if _close(t, events.next_record()):
            rec = maker(t, coeffs, info.grad_inf, info.tail_fraction)
            series.append(rec)
            if controls.on_record:
                controls.on_record(rec)
            events.k_rec += 1
        elif controls.record_every is None:
            rec = maker(t, coeffs, info.grad_inf, info.tail_fraction)
            series.append(rec)
            if controls.on_record:
                controls.on_record(rec)
        while _close(t, events.next_snapshot()):
            snap = Snapshot(t, PhysicalField(grid, irfft(coeffs, grid)))
            snapshots.append(snap)
            if controls.on_snapshot:
                controls.on_snapshot(snap)
            events.i_snap += 1

        if info.grad_inf > grad_threshold:
            reason = "gradient_threshold"
            break
        if info.tail_fraction > controls.tail_threshold:
            reason = "resolution_loss"
            break
        if t >= controls.T_end or _close(t, controls.T_end):
            reason = "reached_T"
            break
        if steps >= controls.max_steps:
            raise RuntimeError(f"max_steps={controls.max_steps} reached at t={t}")

        dt_cfl = controls.dt_fixed or _cfl(info.u_max, grid, controls.c_cfl, controls.dt_max)
        cfl_history.append((t, dt_cfl))
        target = events.next_time()
        dt = min(dt_cfl, target - t)
        landing = dt == target - t
        try:
            coeffs, infos = _rk3(model, coeffs, dt, n0=n0, keep_velocity=keep_velocity)
        except NaNDetected:
            reason = "nan_detected"
            break
        if tracers:
            stages = [info.u_hat, infos[0].u_hat, infos[1].u_hat]
            tracers = advance_tracers(tracers, [[SpectralField(grid, c) for c in s] for s in stages], dt)
        t = target if landing else t + dt
        steps += 1

    final = maker(t, coeffs, last_info.grad_inf if last_info else None,
                  last_info.tail_fraction if last_info else 0.0)
    stop = StopReport(reason, t, final)
    state = SolverState(t, SpectralField(grid, coeffs), dt, steps)
    return RunResult(stop, series, snapshots, tracers, track, state, cfl_history)


__all__ = [
    "STOP_REASONS", "SolverState", "StopReport", "Tracer", "Snapshot", "RunControls", "RunResult",
    "TracerTrack", "cfl_dt", "step", "advance_tracers", "run",
]
