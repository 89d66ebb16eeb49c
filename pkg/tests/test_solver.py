import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from nlts.io.initial import InitialData
from nlts.solver import (
    ModelParams,
    NaNDetected,
    RunControls,
    SolverState,
    SpectralModel,
    StopReport,
    Tracer,
    advance_tracers,
    cfl_dt,
    rhs,
    run,
    step,
)
from nlts.spectral import Grid, PhysicalField, SpectralField, VectorField, forward_transform, hdot_sq, inverse_transform
from nlts.spectral.grid import hermitian_defect


def gaussian(N, n=2, sigma_frac=20):
    g = Grid(n, N, 2 * math.pi)
    return InitialData("gaussian", {"sigma": g.L / sigma_frac}).build(g)


def bandlimited(N, n=2, k_cut=4, seed=0):
    g = Grid(n, N, 2 * math.pi)
    return InitialData("random_bandlimited", {"k_cut": k_cut, "seed": seed}).build(g)


# --- parameters -----------------------------------------------------------------

@pytest.mark.parametrize("kw,msg", [
    ({"alpha": 0.0}, "alpha out of"), ({"alpha": 1.0}, "alpha out of"), ({"alpha": 1.5}, "alpha out of"),
    ({"alpha": 0.5, "kappa": -1.0}, "kappa"), ({"alpha": 0.5, "kappa": 1.0, "gamma": 2.0}, "gamma"),
    ({"alpha": 0.5, "velocity_type": "curl"}, "velocity_type"),
])
def test_model_params_rejects(kw, msg):
    with pytest.raises(ValueError, match=msg):
        ModelParams(**kw)


def test_gamma_ignored_when_inviscid():
    assert ModelParams(0.5, kappa=0.0, gamma=5.0).gamma == 5.0


def test_perp_requires_two_dimensions():
    with pytest.raises(ValueError, match="n = 2"):
        ModelParams(0.5, velocity_type="perp").validate_for(Grid(3, 8, 1.0))
    with pytest.raises(ValueError):
        SpectralModel(Grid(1, 8, 1.0), ModelParams(0.5, velocity_type="perp"))


def test_stop_report_rejects_unknown_reason():
    with pytest.raises(ValueError):
        StopReport("tired", 0.0, None)


# --- right-hand side ---------------------------------------------------------------

def test_rhs_of_constant_is_zero():
    g = Grid(2, 16, 2 * math.pi)
    out = rhs(forward_transform(PhysicalField(g, np.full(g.shape, 3.0))), ModelParams(0.4))
    assert not np.any(out.coeffs)


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.8])
def test_rhs_single_mode_closed_form(alpha):
    # theta = cos(a x): u theta_x = a^{2 alpha} sin^2(a x), so rhs = -a^{2 alpha} (1 - cos 2 a x) / 2
    g = Grid(1, 32, 4.0)
    a = 2 * math.pi * 2 / g.L
    x = g.mesh()[0]
    out = inverse_transform(rhs(forward_transform(PhysicalField(g, np.cos(a * x))), ModelParams(alpha))).values
    np.testing.assert_allclose(out, -a ** (2 * alpha) * (1 - np.cos(2 * a * x)) / 2, atol=1e-13)


def test_rhs_is_dealiased():
    g = Grid(2, 24, 2 * math.pi)
    out = rhs(forward_transform(PhysicalField(g, np.random.default_rng(1).standard_normal(g.shape))), ModelParams(0.5))
    assert not np.any(out.coeffs[~g.dealias_mask])


def test_rhs_single_mode_feeds_one_triad():
    g = Grid(2, 32, 2 * math.pi)
    X, Y = g.mesh()
    out = rhs(forward_transform(PhysicalField(g, np.cos(3 * X + Y))), ModelParams(0.5))
    nz = {tuple(int(v) for v in k) for k in zip(*np.nonzero(np.abs(out.full()) > 1e-12))}
    assert nz <= {(0, 0), (6, 2), (32 - 6, 32 - 2)}


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.75])
def test_zero_mode_of_rhs_is_minus_hdot(alpha):
    # band-limited data well inside the 2/3 band: the product is resolved exactly
    th = bandlimited(64, k_cut=8, seed=3)
    F = forward_transform(th)
    zero = rhs(F, ModelParams(alpha)).coeffs.flat[0].real
    assert zero == pytest.approx(-hdot_sq(F, alpha), rel=1e-8)


def test_perp_rhs_has_no_zero_mode():
    th = bandlimited(32, k_cut=6, seed=4)
    F = forward_transform(th)
    zero = rhs(F, ModelParams(0.5, velocity_type="perp")).coeffs.flat[0]
    assert abs(zero) < 1e-12 * hdot_sq(F, 0.5)


def test_nonlinear_raises_on_overflow():
    g = Grid(2, 16, 2 * math.pi)
    th = forward_transform(PhysicalField(g, 1e200 * np.cos(g.mesh()[0])))
    with pytest.raises(NaNDetected), np.errstate(over="ignore", invalid="ignore"):
        SpectralModel(g, ModelParams(0.5)).nonlinear(th.coeffs)


# --- time stepping ---------------------------------------------------------

def test_pure_dissipation_is_exact():
    g = Grid(2, 16, 2 * math.pi)
    full = np.zeros(g.shape, complex)
    full[2, 1] = full[-2, -1] = 1.0 + 0.5j
    full[-2, -1] = np.conj(full[2, 1])
    F = SpectralField.from_full(g, full)
    p = ModelParams(0.5, kappa=0.7, gamma=1.3, advect=False)
    state = SolverState(0.0, F, 0.05)
    for _ in range(4):
        state = step(state, p)
    rate = 0.7 * (2 * math.pi * math.sqrt(5) / g.L) ** 1.3
    assert state.theta_hat.coeff((2, 1)) == pytest.approx((1 + 0.5j) * math.exp(-rate * 0.2), rel=1e-13)
    assert state.step_count == 4 and state.t == pytest.approx(0.2)


def test_advection_off_is_pure_dissipation():
    th = bandlimited(32, k_cut=5)
    p = ModelParams(0.5, kappa=1.0, gamma=1.0, advect=False)
    F = forward_transform(th)
    F = SpectralField(F.grid, F.coeffs * F.grid.dealias_mask)
    out = step(SolverState(0.0, F, 0.1), p)
    model = SpectralModel(F.grid, p)
    np.testing.assert_allclose(out.theta_hat.coeffs, F.coeffs * model.propagator(0.1), rtol=1e-14, atol=1e-15)


def test_zero_field_stays_zero():
    g = Grid(2, 16, 1.0)
    out = step(SolverState(0.0, SpectralField.zeros(g), 0.1), ModelParams(0.5, kappa=1.0))
    assert not np.any(out.theta_hat.coeffs)


@pytest.mark.parametrize("kappa", [0.0, 0.5])
def test_third_order_self_convergence(kappa):
    th = gaussian(32, sigma_frac=8)
    p = ModelParams(0.5, kappa=kappa, gamma=1.0)
    T = 0.2

    def solve(dt):
        r = run(th, p, RunControls(T_end=T, dt_fixed=dt, record_every=None, tail_threshold=math.inf,
                                   grad_factor=math.inf))
        return r.final_state.theta_hat.coeffs

    ref = solve(T / 160)
    errs = [np.linalg.norm(solve(T / m) - ref) for m in (10, 20, 40)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(6.5 < r < 9.5 for r in ratios), ratios


def test_step_preserves_hermitian_symmetry():
    th = bandlimited(32, k_cut=8, seed=9)
    F = forward_transform(th)
    state = SolverState(0.0, F, 0.01)
    for _ in range(5):
        state = step(state, ModelParams(0.3))
    assert hermitian_defect(state.theta_hat.full()) < 1e-13


def test_spatial_self_convergence():
    def at(N):
        r = run(gaussian(N, sigma_frac=10), ModelParams(0.5), RunControls(T_end=0.1, record_every=None))
        v = inverse_transform(r.final_state.theta_hat).values
        return v[:: N // 32, :: N // 32]

    a, b, c = at(32), at(64), at(128)
    d1, d2 = np.linalg.norm(a - b), np.linalg.norm(b - c)
    assert d1 >= 4 * d2


# --- CFL ---------------------------------------------------------------

def test_cfl_of_zero_field_is_clamped():
    g = Grid(2, 16, 1.0)
    s = SolverState(0.0, SpectralField.zeros(g), 0.1)
    assert cfl_dt(s, ModelParams(0.5), 0.4, dt_max=0.05) == 0.05
    assert cfl_dt(s, ModelParams(0.5), 0.4) == pytest.approx(0.4 * g.dx / 1e-12)


def test_cfl_formula_and_resolution_scaling():
    # theta = cos x has |u|_inf = 1 for every alpha (a = 1)
    dts = []
    for N in (16, 32):
        g = Grid(1, N, 2 * math.pi)
        F = forward_transform(PhysicalField(g, np.cos(g.mesh()[0])))
        dts.append(cfl_dt(SolverState(0.0, F, 0.1), ModelParams(0.3), 0.5))
    assert dts[0] == pytest.approx(0.5 * 2 * math.pi / 16, rel=1e-12)
    assert dts[1] == pytest.approx(dts[0] / 2, rel=1e-12)
    with pytest.raises(ValueError, match="c_cfl"):
        cfl_dt(SolverState(0.0, F, 0.1), ModelParams(0.3), 0.0)


def test_reference_run_cfl_step_grows_before_stop():
    # observed: |u|_inf falls while the bump collapses, so the CFL step lengthens
    r = run(gaussian(64), ModelParams(0.5), RunControls(T_end=10.0, dt_max=math.inf, record_every=0.05))
    dts = [d for _, d in r.cfl_history]
    assert dts[-1] > dts[0]


# --- run orchestration ------------------------------------------------------

def test_zero_data_runs_to_end_with_zero_diagnostics():
    g = Grid(2, 16, 2 * math.pi)
    r = run(PhysicalField(g, np.zeros(g.shape)), ModelParams(0.5), RunControls(T_end=0.1, record_every=0.02))
    assert r.stop.reason == "reached_T" and r.stop.t_stop == pytest.approx(0.1)
    assert len(r.series) == 6
    assert all(v == 0 for rec in r.series for v in rec.as_tuple()[1:])


def test_records_and_snapshots_land_on_cadence():
    r = run(bandlimited(32, k_cut=4), ModelParams(0.5),
            RunControls(T_end=0.3, record_every=0.05, snapshot_times=(0.0, 0.123, 0.3, 7.0),
                        tail_threshold=math.inf))
    assert [x.t for x in r.series] == pytest.approx([0.05 * k for k in range(7)], abs=1e-12)
    assert [s.t for s in r.snapshots] == pytest.approx([0.0, 0.123, 0.3], abs=1e-12)


def test_gaussian_run_stops_on_resolution_loss():
    r = run(gaussian(64), ModelParams(0.5), RunControls(T_end=10.0))
    assert r.stop.reason == "resolution_loss" and r.stop.t_stop < 10
    assert r.stop.final_diagnostics.tail_fraction > 1e-4


def test_gradient_threshold_stop():
    r = run(gaussian(64), ModelParams(0.5), RunControls(T_end=10.0, grad_factor=1.01, tail_threshold=math.inf))
    assert r.stop.reason == "gradient_threshold"
    assert r.stop.final_diagnostics.grad_inf > 1.01 * r.series[0].grad_inf


def test_nan_stop():
    g = Grid(2, 16, 2 * math.pi)
    with np.errstate(over="ignore", invalid="ignore"):
        r = run(PhysicalField(g, 1e200 * np.cos(g.mesh()[0])), ModelParams(0.5), RunControls(T_end=1.0))
    assert r.stop.reason == "nan_detected" and r.stop.t_stop == 0.0


def test_perp_run_conserves_mass():
    r = run(gaussian(64), ModelParams(0.5, velocity_type="perp"), RunControls(T_end=0.5))
    mass = np.array([x.mass for x in r.series])
    assert np.max(np.abs(mass - mass[0])) <= 1e-8 * abs(mass[0])


def test_runs_are_bit_identical():
    a = run(bandlimited(32, k_cut=6, seed=5), ModelParams(0.4), RunControls(T_end=0.2))
    b = run(bandlimited(32, k_cut=6, seed=5), ModelParams(0.4), RunControls(T_end=0.2))
    assert [x.as_tuple() for x in a.series] == [x.as_tuple() for x in b.series]
    assert a.final_state.theta_hat.coeffs.tobytes() == b.final_state.theta_hat.coeffs.tobytes()


def test_callbacks_stream_records_and_snapshots():
    seen, snaps = [], []
    r = run(bandlimited(16), ModelParams(0.5),
            RunControls(T_end=0.1, record_every=0.05, snapshot_times=(0.05,), tail_threshold=math.inf,
                        on_record=seen.append,
                        on_snapshot=snaps.append))
    assert seen == r.series and [s.t for s in snaps] == [0.05]


# --- tracers ------------------------------------------------------------------

def _constant_velocity(g, c):
    comps = []
    for cj in c:
        coeffs = np.zeros(g.spectral_shape, complex)
        coeffs.flat[0] = cj * g.volume
        comps.append(SpectralField(g, coeffs))
    return VectorField(tuple(comps))


def test_tracer_stationary_in_zero_velocity():
    g = Grid(2, 16, 1.0)
    tr = [Tracer((0.3, 0.7), 1.0)]
    assert advance_tracers(tr, _constant_velocity(g, (0.0, 0.0)), 0.1) == tr


@given(c=st.tuples(st.floats(-3, 3), st.floats(-3, 3)), dt=st.floats(0.001, 0.5))
def test_tracer_rigid_translation_and_wrap(c, dt):
    g = Grid(2, 8, 1.0)
    (out,) = advance_tracers([Tracer((0.25, 0.5), 0.0)], _constant_velocity(g, c), dt)
    expected = np.mod(np.array([0.25, 0.5]) + dt * np.array(c), 1.0)
    d = np.abs(np.array(out.position) - expected)
    assert np.all(np.minimum(d, 1.0 - d) < 1e-12)
    assert all(0 <= x < 1.0 for x in out.position)


def test_tracer_follows_field_value_before_steepening():
    th = gaussian(64, sigma_frac=10)
    off = tuple(np.array(th.grid.center()) + 0.2)
    r = run(th, ModelParams(0.5), RunControls(T_end=0.1, tracer_points=[off]))
    vals = np.array(r.track.theta)[:, 0]
    assert np.max(np.abs(vals - vals[0])) < 1e-4
    assert r.tracers[0].theta_initial == pytest.approx(vals[0])
