"""Run configuration: strict INI parsing, validation and a complete echo.

Syntax is standard INI (``[section]`` headers, ``key = value`` lines, ``#``
comments). Lists are comma separated; ``none`` marks an unset optional
value. See the README for every key and its default.
"""
from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from ..diagnostics.checks import epsilon0
from ..solver.integrate import RunControls
from ..solver.model import ModelParams
from ..spectral.grid import Grid
from .initial import KINDS, PARAMS, InitialData

OUTPUT_ROOT_ENV = "NLTS_OUTPUT_ROOT"

CHECK_NAMES = (
    "mass_dissipation", "max_principle", "decay_bound", "criterion_integral",
    "level_dissipation", "degiorgi", "chebyshev_chain",
)


class ConfigError(ValueError):
    """Invalid configuration text or value."""


def _opt_float(s: str):
    return None if s.strip().lower() == "none" else float(s)


def _float_list(s: str) -> tuple[float, ...]:
    s = s.strip()
    if not s or s.lower() == "none":
        return ()
    return tuple(float(x) for x in s.split(","))


def _name_list(s: str) -> tuple[str, ...]:
    s = s.strip()
    if not s or s.lower() == "none":
        return ()
    return tuple(x.strip() for x in s.split(",") if x.strip())


# section -> key -> (parser, default); a default of ... marks a required key
SCHEMA = {
    "grid": {"n": (int, 2), "N": (int, 256), "L": (float, 2 * math.pi)},
    "model": {"alpha": (float, ...), "kappa": (float, 0.0), "gamma": (float, 1.0),
              "velocity_type": (str, "gradient")},
    "time": {"T_end": (float, 10.0), "c_cfl": (float, 0.4), "dt_max": (float, 0.05),
             "dt_fixed": (_opt_float, None)},
    "stops": {"grad_factor": (float, 1e3), "tail_threshold": (float, 1e-4)},
    "outputs": {"series_path": (str, "series.csv"), "record_every": (float, 0.01),
                "snapshot_dir": (str, "snapshots"), "snapshot_times": (_float_list, ()),
                "snapshot_every": (_opt_float, None)},
    "checks": {"names": (_name_list, ()), "k_max": (int, 6)},
    "run": {"seed": (int, 0)},
}

INITIAL_TYPES = {
    "A": float, "sigma": float, "r": float, "center": _float_list, "separation": float,
    "k_cut": float, "amplitude": float,
}


@dataclass(frozen=True)
class RunConfig:
    grid: Grid
    model: ModelParams
    T_end: float
    c_cfl: float
    dt_max: float
    dt_fixed: float | None
    grad_factor: float
    tail_threshold: float
    series_path: str
    record_every: float
    snapshot_dir: str
    snapshot_times: tuple[float, ...]
    snapshot_every: float | None
    initial: InitialData
    checks: tuple[str, ...] = ()
    k_max: int = 6
    seed: int = 0
    positive_mass_spec: str | None = field(default=None, compare=False)

    def all_snapshot_times(self) -> tuple[float, ...]:
        times = set(self.snapshot_times)
        if self.snapshot_every:
            k = 0
            while k * self.snapshot_every <= self.T_end * (1 + 1e-12):
                times.add(k * self.snapshot_every)
                k += 1
        return tuple(sorted(times))

    def controls(self, **extra) -> RunControls:
        return RunControls(
            T_end=self.T_end, c_cfl=self.c_cfl, dt_max=self.dt_max, dt_fixed=self.dt_fixed,
            grad_factor=self.grad_factor, tail_threshold=self.tail_threshold,
            record_every=self.record_every, snapshot_times=self.all_snapshot_times(), **extra,
        )

    def resolve(self, path: str, base: Path | None = None) -> Path:
        """Absolute output path; relative paths sit under the output root."""
        p = Path(path)
        if p.is_absolute():
            return p
        root = os.environ.get(OUTPUT_ROOT_ENV)
        if root:
            return Path(root) / p
        return (base or Path.cwd()) / p

    def echo(self) -> str:
        """INI text with every value explicit; parsing it yields an equal config."""
        def f(x):
            return "none" if x is None else repr(float(x))

        def flist(xs):
            return ", ".join(repr(float(x)) for x in xs) if xs else "none"

        lines = ["[grid]", f"n = {self.grid.n}", f"N = {self.grid.N}", f"L = {f(self.grid.L)}", "",
                 "[model]", f"alpha = {f(self.model.alpha)}", f"kappa = {f(self.model.kappa)}",
                 f"gamma = {f(self.model.gamma)}", f"velocity_type = {self.model.velocity_type}", "",
                 "[time]", f"T_end = {f(self.T_end)}", f"c_cfl = {f(self.c_cfl)}",
                 f"dt_max = {f(self.dt_max)}", f"dt_fixed = {f(self.dt_fixed)}", "",
                 "[stops]", f"grad_factor = {f(self.grad_factor)}",
                 f"tail_threshold = {f(self.tail_threshold)}", "",
                 "[outputs]", f"series_path = {self.series_path}", f"record_every = {f(self.record_every)}",
                 f"snapshot_dir = {self.snapshot_dir}", f"snapshot_times = {flist(self.snapshot_times)}",
                 f"snapshot_every = {f(self.snapshot_every)}", "",
                 "[initial]", f"kind = {self.initial.kind}"]
        for k, v in self.initial.resolved(self.grid, self.seed).items():
            if k == "seed":
                continue
            lines.append(f"{k} = {flist(v) if k == 'center' else f(v)}")
        pm = self.positive_mass_spec if self.positive_mass_spec is not None else f(self.initial.positive_mass)
        lines += [f"positive_mass = {pm}", "",
                  "[checks]", f"names = {', '.join(self.checks) if self.checks else 'none'}",
                  f"k_max = {self.k_max}", "", "[run]", f"seed = {self.seed}", ""]
        return "\n".join(lines)


def _parse_value(section, key, parser, raw):
    try:
        return parser(raw)
    except ValueError as exc:
        raise ConfigError(f"[{section}] {key}: cannot parse {raw!r} ({exc})") from None


def parse_config(text: str) -> RunConfig:
    """Parse and validate configuration text. Unknown sections or keys are errors."""
    cp = configparser.ConfigParser(interpolation=None, default_section="__none__",
                                   inline_comment_prefixes=("#",))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None
    known = set(SCHEMA) | {"initial"}
    for sec in cp.sections():
        if sec not in known:
            raise ConfigError(f"unknown section [{sec}]")
    vals: dict[str, dict] = {}
    for sec, keys in SCHEMA.items():
        got = dict(cp[sec]) if cp.has_section(sec) else {}
        for k in got:
            if k not in keys:
                raise ConfigError(f"unknown key [{sec}] {k}")
        out = {}
        for k, (parser, default) in keys.items():
            if k in got:
                out[k] = _parse_value(sec, k, parser, got[k])
            elif default is ...:
                raise ConfigError(f"missing required key [{sec}] {k}")
            else:
                out[k] = default
        vals[sec] = out

    if not cp.has_section("initial"):
        raise ConfigError("missing section [initial]")
    ini = dict(cp["initial"])
    kind = ini.pop("kind", None)
    if kind is None:
        raise ConfigError("missing required key [initial] kind")
    if kind not in KINDS:
        raise ConfigError(f"[initial] kind must be one of {KINDS}: {kind!r}")
    pm_raw = ini.pop("positive_mass", "none")
    params = {}
    for k, raw in ini.items():
        if k not in PARAMS[kind] or k == "seed":
            raise ConfigError(f"unknown key [initial] {k} for kind {kind}")
        params[k] = None if raw.strip().lower() == "none" else _parse_value("initial", k, INITIAL_TYPES[k], raw)

    g = vals["grid"]
    try:
        grid = Grid(g["n"], g["N"], g["L"])
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from None
    m = vals["model"]
    try:
        model = ModelParams(m["alpha"], m["kappa"], m["gamma"], m["velocity_type"])
        model.validate_for(grid)
    except ValueError as exc:
        raise ConfigError(f"[model] {exc}") from None

    pm_spec = pm_raw.strip()
    if pm_spec.lower() == "none":
        positive_mass, pm_spec = None, None
    elif pm_spec.lower() == "eps0":
        positive_mass = epsilon0(grid.n, model.alpha)
    else:
        positive_mass = _parse_value("initial", "positive_mass", float, pm_spec)
        pm_spec = None
        if not positive_mass > 0:
            raise ConfigError(f"[initial] positive_mass must be > 0: {positive_mass}")
    try:
        initial = InitialData(kind, params, positive_mass)
        # store every default explicitly so the echo parses back to an equal config
        explicit = {k: v for k, v in initial.resolved(grid).items() if k != "seed"}
        initial = InitialData(kind, explicit, positive_mass)
    except ValueError as exc:
        raise ConfigError(f"[initial] {exc}") from None

    t, s, o, c = vals["time"], vals["stops"], vals["outputs"], vals["checks"]
    _check_range("time", "T_end", t["T_end"], lo=0.0)
    if not 0 < t["c_cfl"] <= 1:
        raise ConfigError(f"[time] c_cfl out of (0,1]: {t['c_cfl']}")
    _check_range("time", "dt_max", t["dt_max"], lo=0.0, strict=True)
    if t["dt_fixed"] is not None:
        _check_range("time", "dt_fixed", t["dt_fixed"], lo=0.0, strict=True)
    _check_range("stops", "grad_factor", s["grad_factor"], lo=1.0, strict=True)
    _check_range("stops", "tail_threshold", s["tail_threshold"], lo=0.0, strict=True)
    _check_range("outputs", "record_every", o["record_every"], lo=0.0, strict=True)
    if o["snapshot_every"] is not None:
        _check_range("outputs", "snapshot_every", o["snapshot_every"], lo=0.0, strict=True)
    for name in c["names"]:
        if name not in CHECK_NAMES:
            raise ConfigError(f"[checks] unknown check {name!r}; known: {', '.join(CHECK_NAMES)}")
    if "mass_dissipation" in c["names"] and model.velocity_type != "gradient":
        raise ConfigError("[checks] mass_dissipation needs velocity_type = gradient")
    if c["k_max"] < 1:
        raise ConfigError(f"[checks] k_max must be >= 1: {c['k_max']}")

    cfg = RunConfig(
        grid=grid, model=model, T_end=t["T_end"], c_cfl=t["c_cfl"], dt_max=t["dt_max"],
        dt_fixed=t["dt_fixed"], grad_factor=s["grad_factor"], tail_threshold=s["tail_threshold"],
        series_path=o["series_path"], record_every=o["record_every"], snapshot_dir=o["snapshot_dir"],
        snapshot_times=tuple(sorted(o["snapshot_times"])), snapshot_every=o["snapshot_every"],
        initial=initial, checks=c["names"], k_max=c["k_max"], seed=vals["run"]["seed"],
        positive_mass_spec=pm_spec,
    )
    if "degiorgi" in cfg.checks:
        need = 2.0 ** -(cfg.k_max + 2)
        times = [x for x in cfg.all_snapshot_times() if x <= 1.0]
        gaps = [b - a for a, b in zip([0.0] + times, times + [1.0])]
        if cfg.T_end < 1.0 or not times or times[0] != 0.0 or max(gaps) > need * (1 + 1e-9):
            raise ConfigError(f"[outputs] degiorgi needs snapshots on [0,1] at cadence <= 2^-(k_max+2) = {need:g}")
    return cfg


def _check_range(sec, key, v, lo, strict=False):
    bad = v <= lo if strict else v < lo
    if bad or not math.isfinite(v):
        op = ">" if strict else ">="
        raise ConfigError(f"[{sec}] {key} must be {op} {lo}: {v}")


def load_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)
