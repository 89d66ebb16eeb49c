import csv
import math
import struct
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlts.diagnostics import DiagnosticsRecord, epsilon0
from nlts.io.config import CHECK_NAMES, OUTPUT_ROOT_ENV, ConfigError, load_config, parse_config
from nlts.io.formats import (
    SeriesWriter,
    SnapshotFormatError,
    emit_series,
    emit_snapshot,
    read_series,
    read_snapshot,
    read_snapshot_dir,
    snapshot_name,
)
from nlts.io.initial import KINDS, InitialData
from nlts.io.pipeline import CheckContext, artifact_paths, execute, run_checks, with_alpha
from nlts.spectral import Grid, PhysicalField

MINIMAL = """
[grid]
n = 2
N = 16
[model]
alpha = 0.5
[initial]
kind = gaussian
"""

HEADER = "t,mass,mass_positive,M,m,hdot_alpha_sq,grad_inf,criterion_integrand,tail_fraction"


def with_lines(text, section, *lines):
    """Add ``key = value`` lines to ``section``, replacing keys already present."""
    keys = {ln.split("=")[0].strip() for ln in lines}
    kept = [ln for ln in text.splitlines() if ln.split("=")[0].strip() not in keys or "=" not in ln]
    text = "\n".join(kept) + "\n"
    if f"[{section}]" in text:
        return text.replace(f"[{section}]", f"[{section}]\n" + "\n".join(lines), 1)
    return text + f"[{section}]\n" + "\n".join(lines) + "\n"


@pytest.fixture(autouse=True)
def _no_output_root(monkeypatch):
    monkeypatch.delenv(OUTPUT_ROOT_ENV, raising=False)


# --- config -----------------------------------------------------------------------

def test_minimal_config_fills_defaults():
    cfg = parse_config(MINIMAL)
    assert (cfg.grid.n, cfg.grid.N, cfg.grid.L) == (2, 16, 2 * math.pi)
    assert cfg.model.kappa == 0 and cfg.model.velocity_type == "gradient"
    assert (cfg.T_end, cfg.c_cfl, cfg.dt_max, cfg.dt_fixed) == (10.0, 0.4, 0.05, None)
    assert (cfg.grad_factor, cfg.tail_threshold) == (1e3, 1e-4)
    assert cfg.record_every == 0.01 and cfg.snapshot_times == () and cfg.checks == ()
    echo = cfg.echo()
    for line in ("T_end = 10.0", "sigma = 0.3141592653589793", "center = 3.141592653589793, 3.141592653589793",
                 "names = none", "seed = 0", "positive_mass = none"):
        assert line in echo


def test_echo_is_a_fixed_point():
    cfg = parse_config(MINIMAL)
    again = parse_config(cfg.echo())
    assert again == cfg and again.echo() == cfg.echo()


@given(alpha=st.floats(0.01, 0.99), n=st.sampled_from([1, 2]), N=st.sampled_from([8, 16, 32]),
       L=st.floats(0.5, 100.0), kind=st.sampled_from(KINDS), kappa=st.sampled_from([0.0, 0.3]),
       seed=st.integers(0, 1000), every=st.floats(1e-3, 1.0), times=st.lists(st.floats(0, 5), max_size=4))
def test_echo_idempotence(alpha, n, N, L, kind, kappa, seed, every, times):
    text = f"""
[grid]
n = {n}
N = {N}
L = {L!r}
[model]
alpha = {alpha!r}
kappa = {kappa!r}
[outputs]
record_every = {every!r}
snapshot_times = {', '.join(repr(t) for t in times) or 'none'}
[initial]
kind = {kind}
{"k_cut = 2" if kind == "random_bandlimited" else ""}
[run]
seed = {seed}
"""
    cfg = parse_config(text)
    again = parse_config(cfg.echo())
    assert again == cfg
    assert again.initial.build(again.grid, again.seed).values.tobytes() == \
        cfg.initial.build(cfg.grid, cfg.seed).values.tobytes()


def test_eps0_positive_mass_is_echoed_symbolically():
    cfg = parse_config(with_lines(MINIMAL, "initial", "positive_mass = eps0"))
    assert cfg.initial.positive_mass == epsilon0(2, 0.5)
    assert "positive_mass = eps0" in cfg.echo()
    assert parse_config(cfg.echo()) == cfg


@pytest.mark.parametrize("section,line,match", [
    ("model", "alpha = 1.5", r"alpha out of \(0,1\)"),
    ("model", "velocity_type = curl", "velocity_type"),
    ("grid", "N = 0", r"\[grid\]"),
    ("time", "c_cfl = 1.5", "c_cfl"),
    ("time", "T_end = -1", "T_end"),
    ("time", "dt_max = 0", "dt_max"),
    ("stops", "grad_factor = 1", "grad_factor"),
    ("stops", "tail_threshold = 0", "tail_threshold"),
    ("outputs", "record_every = 0", "record_every"),
    ("checks", "names = bogus", "unknown check"),
    ("checks", "k_max = 0", "k_max"),
    ("grid", "colour = red", r"unknown key \[grid\] colour"),
    ("initial", "r = 1", "unknown key"),
    ("initial", "positive_mass = -1", "positive_mass"),
    ("time", "T_end = soon", "cannot parse"),
])
def test_config_errors(section, line, match):
    with pytest.raises(ConfigError, match=match):
        parse_config(with_lines(MINIMAL, section, line))


def test_config_structural_errors():
    with pytest.raises(ConfigError, match="unknown section"):
        parse_config(MINIMAL + "\n[extras]\nx = 1\n")
    with pytest.raises(ConfigError, match="alpha"):
        parse_config(MINIMAL.replace("alpha = 0.5", ""))
    with pytest.raises(ConfigError, match=r"\[initial\]"):
        parse_config(MINIMAL.replace("[initial]\nkind = gaussian", ""))
    with pytest.raises(ConfigError, match="kind"):
        parse_config(MINIMAL.replace("kind = gaussian", "kind = vortex"))
    with pytest.raises(ConfigError, match="center"):
        parse_config(with_lines(MINIMAL, "initial", "center = 1.0"))
    with pytest.raises(ConfigError, match="malformed"):
        parse_config("kind = gaussian")
    with pytest.raises(ConfigError, match="cannot read"):
        load_config("/nonexistent/run.ini")


def test_perp_rules():
    with pytest.raises(ConfigError, match="n = 2"):
        parse_config(with_lines(with_lines(MINIMAL, "grid", "n = 3"), "model", "velocity_type = perp"))
    perp = with_lines(MINIMAL, "model", "velocity_type = perp")
    assert parse_config(perp).model.velocity_type == "perp"
    with pytest.raises(ConfigError, match="mass_dissipation"):
        parse_config(with_lines(perp, "checks", "names = mass_dissipation"))


def test_degiorgi_cadence_validation():
    base = with_lines(MINIMAL, "checks", "names = degiorgi", "k_max = 3")
    with pytest.raises(ConfigError, match="cadence"):
        parse_config(with_lines(base, "outputs", "snapshot_every = 0.1"))
    ok = parse_config(with_lines(base, "outputs", "snapshot_every = 0.03125"))
    assert ok.all_snapshot_times()[:3] == (0.0, 0.03125, 0.0625)
    with pytest.raises(ConfigError, match="cadence"):
        parse_config(with_lines(with_lines(base, "outputs", "snapshot_every = 0.03125"), "time", "T_end = 0.5"))


def test_inline_comments_and_lists():
    cfg = parse_config(with_lines(MINIMAL, "outputs", "snapshot_times = 0.5, 0.1  # two", "record_every = 0.1"))
    assert cfg.snapshot_times == (0.1, 0.5)


def test_output_paths(tmp_path, monkeypatch):
    cfg = parse_config(MINIMAL)
    assert cfg.resolve("a/b.csv", tmp_path) == tmp_path / "a/b.csv"
    assert cfg.resolve(str(tmp_path / "abs.csv"), Path("/elsewhere")) == tmp_path / "abs.csv"
    monkeypatch.setenv(OUTPUT_ROOT_ENV, str(tmp_path / "root"))
    assert cfg.resolve("x.csv") == tmp_path / "root" / "x.csv"


# --- series ---------------------------------------------------------------------------

def _records(k=5, seed=0):
    rng = np.random.default_rng(seed)
    return [DiagnosticsRecord(*(float(x) for x in rng.standard_normal(9) * 10.0 ** rng.integers(-20, 20, 9)))
            for _ in range(k)]


def test_series_round_trip_is_bit_exact(tmp_path):
    recs = _records() + [DiagnosticsRecord(0.1, -0.0, 5e-324, 1.7976931348623157e308, -1e-300, 0, 0, 0, 0)]
    path = emit_series(recs, tmp_path / "sub" / "s.csv")
    assert path.read_text().splitlines()[0] == HEADER
    back = read_series(path)
    assert [r.as_tuple() for r in back] == [r.as_tuple() for r in recs]
    assert all(struct.pack("<9d", *a.as_tuple()) == struct.pack("<9d", *b.as_tuple()) for a, b in zip(back, recs))


def test_series_writer_streams(tmp_path):
    w = SeriesWriter(tmp_path / "s.csv")
    for r in _records(3, seed=1):
        w(r)
    w.close()
    assert [r.as_tuple() for r in read_series(tmp_path / "s.csv")] == [r.as_tuple() for r in _records(3, seed=1)]


def test_series_header_is_enforced(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("t,mass\n0,0\n")
    with pytest.raises(ValueError, match="header"):
        read_series(p)


def test_series_write_error_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError, match="file"):
        emit_series(_records(1), blocker / "s.csv")


# --- snapshots ----------------------------------------------------------------------

@pytest.mark.parametrize("n,N", [(1, 6), (2, 16), (3, 4)])
def test_snapshot_round_trip(tmp_path, n, N):
    g = Grid(n, N, 3.7)
    f = PhysicalField(g, np.random.default_rng(n).standard_normal(g.shape))
    p = emit_snapshot(f, 0.123456789, tmp_path / "x.nlts")
    assert p.stat().st_size == 32 + 8 * N ** n
    t, back = read_snapshot(p)
    assert t == 0.123456789 and back.grid == g
    assert back.values.tobytes() == f.values.tobytes()


def test_snapshot_layout(tmp_path):
    g = Grid(1, 4, 1.5)
    vals = np.array([1.0, -2.0, 0.5, 3.0])
    p = emit_snapshot(PhysicalField(g, vals), 0.25, tmp_path / "x.nlts")
    assert p.read_bytes() == b"NLTS" + struct.pack("<IIIdd", 1, 1, 4, 1.5, 0.25) + struct.pack("<4d", *vals)


@pytest.mark.parametrize("mutate,match", [
    (lambda b: b"NLTX" + b[4:], "magic"),
    (lambda b: b[:4] + struct.pack("<I", 2) + b[8:], "version"),
    (lambda b: b[:-8], "samples"),
    (lambda b: b + b"\0" * 8, "samples"),
    (lambda b: b[:20], "truncated"),
])
def test_snapshot_rejects_malformed(tmp_path, mutate, match):
    g = Grid(2, 4, 1.0)
    p = emit_snapshot(PhysicalField(g, np.ones(g.shape)), 0.0, tmp_path / "x.nlts")
    p.write_bytes(mutate(p.read_bytes()))
    with pytest.raises(SnapshotFormatError, match=match):
        read_snapshot(p)


def test_snapshot_dir_sorted_by_time(tmp_path):
    g = Grid(1, 4, 1.0)
    for i, t in enumerate([0.5, 0.0, 0.25]):
        emit_snapshot(PhysicalField(g, np.full(4, t)), t, tmp_path / snapshot_name(i))
    assert [t for t, _ in read_snapshot_dir(tmp_path)] == [0.0, 0.25, 0.5]
    with pytest.raises(FileNotFoundError):
        read_snapshot_dir(tmp_path / "empty")


# --- initial data -------------------------------------------------------------------

@pytest.mark.parametrize("kind", ["gaussian", "smooth_bump"])
def test_bumps_have_positive_sup(kind):
    g = Grid(2, 32, 10.0)
    f = InitialData(kind).build(g)
    assert f.values.max() > 0 and f.values.min() >= 0
    assert f.values.max() == pytest.approx(1.0, rel=1e-12)


def test_smooth_bump_compact_support():
    g = Grid(2, 64, 10.0)
    f = InitialData("smooth_bump", {"r": 2.0}).build(g)
    X, Y = g.mesh()
    d2 = (X - 5) ** 2 + (Y - 5) ** 2
    assert not np.any(f.values[d2 >= 4.0])
    assert np.all(f.values[d2 < 3.9] > 0)


def test_dipole_changes_sign():
    f = InitialData("dipole").build(Grid(2, 32, 10.0))
    assert f.values.max() > 0.5 and f.values.min() < -0.5
    assert float(np.sum(f.values)) == pytest.approx(0.0, abs=1e-10)


def test_positive_mass_rescale():
    g = Grid(2, 32, 10.0)
    f = InitialData("dipole", positive_mass=0.3).build(g)
    assert float(np.sum(np.maximum(f.values, 0))) * g.cell_volume == pytest.approx(0.3, rel=1e-12)
    with pytest.raises(ValueError, match="positive part"):
        InitialData("zero", positive_mass=0.3).build(g)


def test_random_bandlimited():
    g = Grid(2, 32, 2 * math.pi)
    a = InitialData("random_bandlimited", {"k_cut": 5, "amplitude": 2.0}).build(g, seed=3)
    b = InitialData("random_bandlimited", {"k_cut": 5, "amplitude": 2.0}).build(g, seed=3)
    c = InitialData("random_bandlimited", {"k_cut": 5, "amplitude": 2.0}).build(g, seed=4)
    assert a.values.tobytes() == b.values.tobytes() and a.values.tobytes() != c.values.tobytes()
    assert np.max(np.abs(a.values)) == pytest.approx(2.0)
    spec = np.abs(np.fft.fftn(a.values))
    k = np.fft.fftfreq(32, 1 / 32)
    kk = np.sqrt(k[:, None] ** 2 + k[None, :] ** 2)
    assert np.all(spec[kk > 5] < 1e-10) and spec[0, 0] < 1e-10


def test_initial_data_validation():
    with pytest.raises(ValueError, match="kind"):
        InitialData("vortex")
    with pytest.raises(ValueError, match="unknown parameters"):
        InitialData("gaussian", {"r": 1.0})
    with pytest.raises(ValueError, match="sigma"):
        InitialData("gaussian", {"sigma": -1.0}).build(Grid(1, 8, 1.0))


# --- pipeline ------------------------------------------------------------------------

ZERO_RUN = """
[grid]
n = 2
N = 16
[model]
alpha = 0.5
[time]
T_end = 0.1
[outputs]
record_every = 0.02
series_path = out/series.csv
snapshot_dir = out/snaps
snapshot_every = 0.05
[initial]
kind = zero
[checks]
names = mass_dissipation, max_principle, criterion_integral
"""


def test_execute_zero_run(tmp_path):
    out = execute(parse_config(ZERO_RUN), tmp_path)
    assert out.result.stop.reason == "reached_T"
    rows = list(csv.reader(out.series_path.open()))
    assert ",".join(rows[0]) == HEADER and len(rows) == 7
    assert all(float(v) == 0 for row in rows[1:] for v in row[1:])
    assert sorted(p.name for p in out.snapshot_dir.iterdir()) == [snapshot_name(i) for i in range(3)]
    assert parse_config(out.echo_path.read_text()) == parse_config(ZERO_RUN)
    assert '"reason": "reached_T"' in out.stop_path.read_text()
    assert all(v.passed for v in out.verdicts)
    assert artifact_paths(out.series_path)[0] == out.echo_path


def test_execute_is_deterministic(tmp_path):
    text = ZERO_RUN.replace("kind = zero", "kind = random_bandlimited\nk_cut = 3").replace("names = mass_dissipation, max_principle, criterion_integral", "names = none")
    a = execute(parse_config(text), tmp_path / "a")
    b = execute(parse_config(text), tmp_path / "b")
    assert a.series_path.read_bytes() == b.series_path.read_bytes()
    for x, y in zip(sorted(a.snapshot_dir.iterdir()), sorted(b.snapshot_dir.iterdir())):
        assert x.read_bytes() == y.read_bytes()


def test_run_checks_failures_become_verdicts():
    recs = [DiagnosticsRecord(0.1 * i, 0, 0, 0, 0, 0, 0, 0, 0) for i in range(2)]
    vs = run_checks(["mass_dissipation", "degiorgi"], recs, None, CheckContext(2, 0.5))
    assert [v.passed for v in vs] == [False, False]
    recs4 = [DiagnosticsRecord(0.1 * i, 0, 0, 0, 0, 0, 0, 0, 0) for i in range(4)]
    assert "error" in vs[0].detail and vs[1].detail["error"] == "no snapshots"
    assert {v.name for v in run_checks(list(CHECK_NAMES[:4]), recs4, None, CheckContext(2, 0.5))} >= {
        "criterion_integral", "decay_bound"}


def test_with_alpha(tmp_path):
    cfg = parse_config(ZERO_RUN)
    c2 = with_alpha(cfg, 0.25, tmp_path / "a")
    assert c2.model.alpha == 0.25 and c2.series_path == str(tmp_path / "a" / "series.csv")
    with pytest.raises(ValueError):
        with_alpha(cfg, 1.5, tmp_path)
