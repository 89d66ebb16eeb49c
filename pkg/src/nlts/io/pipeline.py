"""Run orchestration: simulate from a config, stream outputs, evaluate checks."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

from ..diagnostics.checks import (
    Verdict,
    _verdict,
    check_chebyshev_chain,
    check_decay_series,
    check_level_dissipation,
    check_mass_dissipation,
    check_max_principle,
    criterion_integral,
)
from ..diagnostics.degiorgi import check_recurrence, degiorgi_sequence
from ..diagnostics.records import DiagnosticsRecord
from ..solver.integrate import RunResult, Snapshot, run
from ..solver.model import ModelParams
from ..spectral.grid import PhysicalField
from .config import RunConfig
from .formats import SeriesWriter, emit_snapshot, snapshot_name

# smooth-phase windows (tail-fraction ceilings) used by the post-hoc checks
MASS_TAIL_MAX = 1e-6
MAX_PRINCIPLE_TAIL_MAX = 1e-6
DECAY_TAIL_MAX = 1e-4


@dataclass(frozen=True)
class CheckContext:
    """What the checks need beyond the series: model constants and initial data scales."""

    n: int
    alpha: float
    velocity_type: str = "gradient"
    k_max: int = 6


def _needs_snapshots(name):
    return name in ("level_dissipation", "degiorgi", "chebyshev_chain")


def run_checks(names: Sequence[str], series: Sequence[DiagnosticsRecord],
               snapshots: Sequence[tuple[float, PhysicalField]] | None, ctx: CheckContext) -> list[Verdict]:
    """Evaluate named checks; a check that cannot be evaluated yields a failed verdict."""
    out = []
    for name in names:
        if _needs_snapshots(name) and not snapshots:
            out.append(Verdict(name, math.inf, 0.0, False, {"error": "no snapshots"}))
            continue
        try:
            out.extend(_one_check(name, series, snapshots, ctx))
        except ValueError as exc:
            out.append(Verdict(name, math.inf, 0.0, False, {"error": str(exc)}))
    return out


def _one_check(name, series, snapshots, ctx) -> list[Verdict]:
    if name == "mass_dissipation":
        return [check_mass_dissipation(series, ctx.velocity_type, tail_max=MASS_TAIL_MAX).verdict]
    if name == "max_principle":
        r0 = series[0]
        return [check_max_principle(series, max(abs(r0.M), abs(r0.m)), tail_max=MAX_PRINCIPLE_TAIL_MAX)]
    if name == "decay_bound":
        m0 = series[0].mass_positive
        return [check_decay_series(series, m0, ModelParams(ctx.alpha), ctx.n, tail_max=DECAY_TAIL_MAX)]
    if name == "criterion_integral":
        # informational: the integral has no tolerance of its own
        t_stop = series[-1].t
        full = criterion_integral(series)
        half = criterion_integral(series, t_stop / 2)
        return [_verdict("criterion_integral", full, math.inf, t_stop=t_stop, half=half,
                         ratio=full / half if half > 0 else (math.nan if full == 0 else math.inf))]
    if name == "level_dissipation":
        return [check_level_dissipation(snapshots, k, ctx.alpha).verdict for k in range(ctx.k_max + 1)]
    if name == "chebyshev_chain":
        return [check_chebyshev_chain(snapshots, ctx.k_max)]
    if name == "degiorgi":
        res = degiorgi_sequence(snapshots, ctx.alpha, ctx.k_max)
        built = len(res.states) - 1
        seq = _verdict("degiorgi_sequence", ctx.k_max - built, 0, levels=built, message=res.message,
                       W=[s.W_k for s in res.states], t=[s.t_k for s in res.states])
        return [seq, check_recurrence(res.states, ctx.n, ctx.alpha)]
    raise ValueError(f"unknown check {name!r}")


@dataclass
class RunOutputs:
    result: RunResult
    series_path: Path
    snapshot_dir: Path
    echo_path: Path
    stop_path: Path
    verdicts: list[Verdict]


def artifact_paths(series_path: Path) -> tuple[Path, Path, Path]:
    """Config echo, stop report and verdict file written next to the series."""
    stem = series_path.with_suffix("")
    return (stem.with_name(stem.name + ".config.ini"), stem.with_name(stem.name + ".stop.json"),
            stem.with_name(stem.name + ".verdicts.jsonl"))


def execute(cfg: RunConfig, base: Path | None = None, **extra_controls) -> RunOutputs:
    """Run ``cfg``, streaming the series and snapshots, then run its checks."""
    series_path = cfg.resolve(cfg.series_path, base)
    snap_dir = cfg.resolve(cfg.snapshot_dir, base)
    echo_path, stop_path, _ = artifact_paths(series_path)
    echo_path.parent.mkdir(parents=True, exist_ok=True)
    echo_path.write_text(cfg.echo())

    theta0 = cfg.initial.build(cfg.grid, cfg.seed)
    writer = SeriesWriter(series_path)
    snapshots: list[tuple[float, PhysicalField]] = []

    def on_snapshot(s: Snapshot):
        emit_snapshot(s.field, s.t, snap_dir / snapshot_name(len(snapshots)))
        snapshots.append((s.t, s.field))

    try:
        res = run(theta0, cfg.model, cfg.controls(on_record=writer, on_snapshot=on_snapshot, **extra_controls))
    finally:
        writer.close()
    stop = {"reason": res.stop.reason, "t_stop": res.stop.t_stop,
            "steps": res.final_state.step_count, "final": res.stop.final_diagnostics.to_dict()}
    stop_path.write_text(json.dumps(stop, indent=2) + "\n")

    ctx = CheckContext(cfg.grid.n, cfg.model.alpha, cfg.model.velocity_type, cfg.k_max)
    verdicts = run_checks(cfg.checks, res.series, snapshots, ctx)
    return RunOutputs(res, series_path, snap_dir, echo_path, stop_path, verdicts)


def with_alpha(cfg: RunConfig, alpha: float, outdir: Path) -> RunConfig:
    """Copy of ``cfg`` at another ``alpha`` writing into the private directory ``outdir``."""
    model = replace(cfg.model, alpha=alpha)
    model.validate_for(cfg.grid)
    return replace(cfg, model=model, series_path=str(outdir / Path(cfg.series_path).name),
                   snapshot_dir=str(outdir / Path(cfg.snapshot_dir).name))
