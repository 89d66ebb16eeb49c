"""Command-line interface.

Every subcommand that evaluates checks prints a human table on stdout,
writes one JSON object per verdict (to a ``.verdicts.jsonl`` file or, with
``--jsonl -``, to stdout) and exits with status 1 when any check fails.
Configuration or input errors exit with status 2.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Sequence

from .diagnostics.checks import Verdict
from .diagnostics.degiorgi import check_recurrence, degiorgi_sequence, recurrence_bound
from .io.config import CHECK_NAMES, ConfigError, load_config
from .io.formats import SnapshotFormatError, read_series, read_snapshot_dir
from .io.pipeline import CheckContext, artifact_paths, execute, run_checks, with_alpha
from .recurrence import RecurrenceParams, sweep, table_csv
from .selftest import operators_selftest


def _json_safe(x):
    if isinstance(x, float) and not math.isfinite(x):
        return repr(x)
    if isinstance(x, dict):
        return {k: _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    return x


def verdict_lines(verdicts: Sequence[Verdict]) -> str:
    return "".join(json.dumps(_json_safe(v.to_dict())) + "\n" for v in verdicts)


def verdict_table(verdicts: Sequence[Verdict]) -> str:
    rows = [f"{'check':<28} {'worst':>12} {'tolerance':>12}  result"]
    for v in verdicts:
        rows.append(f"{v.name:<28} {v.worst:>12.4g} {v.tolerance:>12.4g}  {'PASS' if v.passed else 'FAIL'}")
    return "\n".join(rows)


def _report(verdicts: Sequence[Verdict], jsonl: str | None) -> int:
    print(verdict_table(verdicts))
    if jsonl == "-":
        sys.stdout.write(verdict_lines(verdicts))
    elif jsonl:
        Path(jsonl).parent.mkdir(parents=True, exist_ok=True)
        Path(jsonl).write_text(verdict_lines(verdicts))
    return 0 if all(v.passed for v in verdicts) else 1


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = execute(cfg)
    r = out.result
    print(f"stop: {r.stop.reason} at t = {r.stop.t_stop:.6g} after {r.final_state.step_count} steps")
    print(f"series: {out.series_path} ({len(r.series)} records); snapshots: {len(r.snapshots)} in {out.snapshot_dir}")
    if not out.verdicts:
        return 0
    return _report(out.verdicts, args.jsonl or str(artifact_paths(out.series_path)[2]))


def _context(args) -> CheckContext:
    if args.config:
        cfg = load_config(args.config)
        return CheckContext(cfg.grid.n, cfg.model.alpha, cfg.model.velocity_type,
                            args.k_max if args.k_max is not None else cfg.k_max)
    if args.alpha is None or args.n is None:
        raise ConfigError("give --config, or both --alpha and --n")
    return CheckContext(args.n, args.alpha, args.velocity_type, args.k_max if args.k_max is not None else 6)


def cmd_check(args) -> int:
    ctx = _context(args)
    if args.all:
        names = [n for n in CHECK_NAMES if args.snapshots or n not in ("level_dissipation", "degiorgi", "chebyshev_chain")]
        if ctx.velocity_type != "gradient":
            names.remove("mass_dissipation")
    else:
        names = args.name or []
        for n in names:
            if n not in CHECK_NAMES:
                raise ConfigError(f"unknown check {n!r}; known: {', '.join(CHECK_NAMES)}")
    if not names:
        raise ConfigError("nothing to check: give --all or --name")
    series = read_series(args.series)
    snaps = read_snapshot_dir(args.snapshots) if args.snapshots else None
    jsonl = args.jsonl or str(artifact_paths(Path(args.series))[2])
    return _report(run_checks(names, series, snaps, ctx), jsonl)


def cmd_degiorgi(args) -> int:
    ctx = _context(args)
    snaps = read_snapshot_dir(args.snapshot_dir)
    res = degiorgi_sequence(snaps, ctx.alpha, ctx.k_max, check_cadence=not args.no_cadence_check)
    print(f"{'k':>2} {'C_k':>10} {'t_k':>10} {'W_k':>14} {'bound':>14}  result")
    for a, b in zip([None] + res.states[:-1], res.states):
        if a is None:
            print(f"{b.k:>2} {b.C_k:>10.6g} {b.t_k:>10.6g} {b.W_k:>14.6g} {'':>14}  -")
            continue
        bound = recurrence_bound(a.W_k, a.k, ctx.n, ctx.alpha)
        print(f"{b.k:>2} {b.C_k:>10.6g} {b.t_k:>10.6g} {b.W_k:>14.6g} {bound:>14.6g}  {'PASS' if b.W_k <= bound else 'FAIL'}")
    if res.failed_k is not None:
        print(f"level {res.failed_k}: {res.message}")
    built = len(res.states) - 1
    seq = Verdict("degiorgi_sequence", float(ctx.k_max - built), 0.0, res.succeeded,
                  {"levels": built, "message": res.message})
    verdicts = [seq, check_recurrence(res.states, ctx.n, ctx.alpha)]
    jsonl = args.jsonl or str(Path(args.snapshot_dir) / "degiorgi.verdicts.jsonl")
    return _report(verdicts, jsonl)


def cmd_recurrence(args) -> int:
    if args.grid:
        rows = sweep(k_max=args.k_max)
    else:
        if None in (args.C, args.beta, args.W0):
            raise ConfigError("give --C, --beta and --W0, or --grid")
        rows = [RecurrenceParams(args.C, args.beta, args.W0, args.k_max)]
    sys.stdout.write(table_csv(rows))
    return 0


def cmd_selftest(args) -> int:
    return _report(operators_selftest(args.N, args.seed, args.fields, quadrature=not args.quick), args.jsonl)


def _scan_one(job):
    cfg, alpha = job
    out = execute(cfg)
    r = out.result
    s0 = r.series[0] if r.series else r.stop.final_diagnostics
    growth = r.stop.final_diagnostics.grad_inf / s0.grad_inf if s0.grad_inf > 0 else math.nan
    return {"alpha": alpha, "reason": r.stop.reason, "t_stop": r.stop.t_stop,
            "grad_growth": growth, "steps": r.final_state.step_count, "series": str(out.series_path)}


def cmd_blowup_scan(args) -> int:
    cfg = load_config(args.config)
    alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    root = cfg.resolve(args.out)
    jobs = [(with_alpha(cfg, a, root / f"alpha_{a:g}"), a) for a in alphas]
    if args.jobs > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            rows = list(pool.map(_scan_one, jobs))
    else:
        rows = [_scan_one(j) for j in jobs]
    print(f"{'alpha':>8} {'stop':<20} {'t_stop':>10} {'grad_growth':>12} {'steps':>8}")
    for r in rows:
        print(f"{r['alpha']:>8.4g} {r['reason']:<20} {r['t_stop']:>10.6g} {r['grad_growth']:>12.4g} {r['steps']:>8}")
    root.mkdir(parents=True, exist_ok=True)
    (root / "scan.jsonl").write_text("".join(json.dumps(_json_safe(r)) + "\n" for r in rows))
    return 1 if any(r["reason"] == "nan_detected" for r in rows) else 0


def _add_context_args(p):
    p.add_argument("--config", help="run config supplying n, alpha, velocity_type and k_max")
    p.add_argument("--alpha", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--velocity-type", default="gradient", choices=("gradient", "perp"))
    p.add_argument("--k-max", type=int)
    p.add_argument("--jsonl", help="verdict JSON-lines path, or - for stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="nlts", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate a config, write series and snapshots, run its checks")
    p.add_argument("config")
    p.add_argument("--jsonl", help="verdict JSON-lines path (default: next to the series)")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="evaluate checks on a recorded series and snapshots")
    p.add_argument("series")
    p.add_argument("--snapshots", help="directory of .nlts snapshots")
    g = p.add_mutually_exclusive_group()
    g.add_argument("--all", action="store_true")
    g.add_argument("--name", action="append", choices=CHECK_NAMES)
    _add_context_args(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("degiorgi", help="level-set sequence table from snapshots")
    p.add_argument("snapshot_dir")
    p.add_argument("--no-cadence-check", action="store_true")
    _add_context_args(p)
    p.set_defaults(func=cmd_degiorgi)

    p = sub.add_parser("recurrence", help="iterate W_{k+1} = C^k W_k^beta and print a CSV table")
    p.add_argument("--C", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--W0", type=float)
    p.add_argument("--grid", action="store_true", help="sweep a 20x20 (C, beta) grid below threshold")
    p.add_argument("--k-max", type=int, default=60)
    p.set_defaults(func=cmd_recurrence)

    p = sub.add_parser("operators-selftest", help="check spectral operator invariants")
    p.add_argument("--N", type=int, default=256)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--fields", type=int, default=10)
    p.add_argument("--quick", action="store_true", help="skip the quadrature cross-checks")
    p.add_argument("--jsonl", help="verdict JSON-lines path, or - for stdout")
    p.set_defaults(func=cmd_selftest)

    p = sub.add_parser("blowup-scan", help="stop time against alpha for one config")
    p.add_argument("config")
    p.add_argument("--alphas", required=True, help="comma-separated alpha values")
    p.add_argument("--out", default="blowup_scan", help="output directory (one subdirectory per alpha)")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_blowup_scan)
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, SnapshotFormatError, FileNotFoundError, ValueError) as exc:
        print(f"nlts: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
