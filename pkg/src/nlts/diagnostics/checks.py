"""Checkers that turn recorded series and snapshots into verdicts."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.integrate import trapezoid

from ..spectral.grid import PhysicalField, forward_transform
from ..spectral.operators import hdot_sq
from ..spectral.quadrature import unit_ball_volume
from .records import DiagnosticsRecord

EPS = 1e-300


class CadenceWarning(UserWarning):
    """Recorded times are not uniformly spaced."""


@dataclass(frozen=True)
class Verdict:
    """Outcome of one check.

    ``worst`` is the largest observed value of the checked quantity and the
    check passes iff ``worst <= tolerance``.
    """

    name: str
    worst: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"name": self.name, "worst": self.worst, "tolerance": self.tolerance,
                "passed": self.passed, **self.detail}


def _verdict(name, worst, tol, **detail) -> Verdict:
    worst = float(worst)
    return Verdict(name, worst, float(tol), bool(worst <= tol), detail)


def truncate(theta: PhysicalField, level: float) -> PhysicalField:
    """Pointwise ``max(theta - level, 0)``."""
    return PhysicalField(theta.grid, np.maximum(theta.values - level, 0.0))


def level_value(k: int) -> float:
    """``C_k = 1 - 2^{-k}``."""
    return 1.0 - 2.0 ** (-k)


def time_derivative(t: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Centered differences in the interior, one-sided at the ends."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 3:
        raise ValueError("need at least 3 samples to difference")
    h = np.diff(t)
    if np.ptp(h) > 1e-9 * np.max(h):
        warnings.warn("non-uniform cadence; centered differences lose accuracy", CadenceWarning)
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - y[:-2]) / (t[2:] - t[:-2])
    out[0] = (y[1] - y[0]) / h[0]
    out[-1] = (y[-1] - y[-2]) / h[-1]
    return out


def _series_array(series: Sequence[DiagnosticsRecord], name: str) -> np.ndarray:
    return np.array([getattr(r, name) for r in series], dtype=float)


def smooth_window(series: Sequence[DiagnosticsRecord], tail_max: float | None) -> list[DiagnosticsRecord]:
    """Leading records whose tail fraction stays below ``tail_max``."""
    if tail_max is None:
        return list(series)
    out = []
    for r in series:
        if r.tail_fraction >= tail_max:
            break
        out.append(r)
    return out


@dataclass(frozen=True)
class ResidualSeries:
    t: np.ndarray
    residual: np.ndarray
    relative: np.ndarray
    verdict: Verdict


def check_mass_dissipation(series: Sequence[DiagnosticsRecord], velocity_type: str = "gradient",
                           tol: float = 1e-4, tail_max: float | None = 1e-6) -> ResidualSeries:
    """Residual of ``d/dt int theta + ||theta||^2_{Hdot^alpha} = 0``.

    Only records before the tail fraction first reaches ``tail_max`` are used.
    Interior points use centered differences; the two one-sided end values
    are excluded from the verdict. The identity holds only for the gradient
    velocity, so other velocity types are rejected.
    """
    if velocity_type != "gradient":
        raise ValueError("mass dissipation law holds for velocity_type 'gradient' only")
    recs = smooth_window(series, tail_max)
    if len(recs) < 3:
        raise ValueError(f"need >= 3 records in the smooth window, got {len(recs)}")
    t = _series_array(recs, "t")
    mass = _series_array(recs, "mass")
    H = _series_array(recs, "hdot_alpha_sq")
    res = time_derivative(t, mass) + H
    rel = np.abs(res) / np.maximum(H, EPS)
    worst = float(np.max(rel[1:-1])) if len(rel) > 2 else 0.0
    v = _verdict("mass_dissipation", worst, tol, t_end=float(t[-1]), records=len(recs),
                 strictly_decreasing=bool(np.all(np.diff(mass) < 0)))
    return ResidualSeries(t, res, rel, v)


def check_level_dissipation(snapshots: Sequence[tuple[float, PhysicalField]], k: int, alpha: float,
                            tol: float = 1e-3) -> ResidualSeries:
    """Check ``d/dt ||theta_k||_{L^1} <= -||theta_k||^2_{Hdot^alpha}`` with relative slack ``tol``.

    ``theta_k = (theta - C_k)^+``. The worst value of
    ``(dW/dt + H) / max(H, eps)`` is reported; a positive value above ``tol``
    is a violation.
    """
    c_k = level_value(k)
    t = np.array([s[0] for s in snapshots], dtype=float)
    W = np.empty(len(t))
    H = np.empty(len(t))
    for i, (_, f) in enumerate(snapshots):
        tk = truncate(f, c_k)
        W[i] = float(np.sum(tk.values)) * f.grid.cell_volume
        H[i] = hdot_sq(forward_transform(tk), alpha)
    res = time_derivative(t, W) + H
    rel = res / np.maximum(H, EPS)
    worst = float(np.max(rel)) if len(rel) else 0.0
    return ResidualSeries(t, res, rel, _verdict(f"level_dissipation_k{k}", worst, tol, level=c_k))


def check_chebyshev_chain(snapshots: Sequence[tuple[float, PhysicalField]], k_max: int) -> Verdict:
    """``||theta_{k+1}||_{L^1} <= 2^{k+1} ||theta_k||_{L^2}^2`` on every snapshot and level.

    Reports the largest ratio of left to right side (passes at <= 1).
    """
    worst = 0.0
    for _, f in snapshots:
        dv = f.grid.cell_volume
        for k in range(k_max):
            lhs = float(np.sum(truncate(f, level_value(k + 1)).values)) * dv
            rhs = 2.0 ** (k + 1) * float(np.sum(truncate(f, level_value(k)).values ** 2)) * dv
            if lhs > 0:
                worst = max(worst, lhs / rhs if rhs > 0 else math.inf)
    return _verdict("chebyshev_chain", worst, 1.0)


def interpolation_constant(n: int, alpha: float) -> float:
    """``2^{1/2} omega_n^{alpha/(n + 2 alpha)}`` with ``omega_n`` the unit-ball volume."""
    return math.sqrt(2.0) * unit_ball_volume(n) ** (alpha / (n + 2 * alpha))


def epsilon0(n: int, alpha: float) -> float:
    """Small-mass threshold ``2^{-(n+alpha)(n+2alpha)/(2alpha^2)} / C^{(n+2alpha)/(2alpha)}``."""
    c = interpolation_constant(n, alpha)
    return 2.0 ** (-(n + alpha) * (n + 2 * alpha) / (2 * alpha ** 2)) / c ** ((n + 2 * alpha) / (2 * alpha))


def check_interpolation(f: PhysicalField, alpha: float) -> float:
    """``||f||_{L^2} / (||f||_{L^1}^{2a/(n+2a)} ||f||_{Hdot^a}^{n/(n+2a)})``."""
    g = f.grid
    v = f.values
    if not np.any(v):
        raise ValueError("interpolation ratio undefined for the zero field")
    n = g.n
    l1 = float(np.sum(np.abs(v))) * g.cell_volume
    l2 = math.sqrt(float(np.sum(v * v)) * g.cell_volume)
    h = math.sqrt(hdot_sq(forward_transform(f), alpha))
    if h == 0:
        return math.inf
    return l2 / (l1 ** (2 * alpha / (n + 2 * alpha)) * h ** (n / (n + 2 * alpha)))


def decay_bound(T: float, theta0_positive_mass: float, n: int, alpha: float) -> float:
    """``(||theta_0^+||_{L^1} / (eps_0 T^{n/(2 alpha)}))^{2 alpha/(n + 2 alpha)}``."""
    if not T > 0:
        raise ValueError(f"T must be > 0: {T}")
    e0 = epsilon0(n, alpha)
    return (theta0_positive_mass / (e0 * T ** (n / (2 * alpha)))) ** (2 * alpha / (n + 2 * alpha))


def check_decay_bound(record: DiagnosticsRecord, theta0_positive_mass: float, p, n: int) -> float:
    """Margin ``bound - M(T)``; non-negative when the decay estimate holds."""
    return decay_bound(record.t, theta0_positive_mass, n, p.alpha) - record.M


def check_decay_series(series: Sequence[DiagnosticsRecord], theta0_positive_mass: float, p, n: int,
                       tail_max: float = 1e-4) -> Verdict:
    """Decay-bound margin over every record with ``t > 0`` before the tail passes ``tail_max``."""
    recs = [r for r in smooth_window(series, tail_max) if r.t > 0]
    margins = [check_decay_bound(r, theta0_positive_mass, p, n) for r in recs]
    worst = -min(margins) if margins else -math.inf
    return _verdict("decay_bound", worst, 0.0, records=len(recs),
                    min_margin=min(margins) if margins else None)


def criterion_integral(series: Sequence[DiagnosticsRecord], t_max: float | None = None) -> float:
    """Trapezoid integral of ``criterion_integrand`` over recorded times up to ``t_max``."""
    t = _series_array(series, "t")
    y = _series_array(series, "criterion_integrand")
    if t_max is not None:
        keep = t <= t_max * (1 + 1e-12)
        t, y = t[keep], y[keep]
    if len(t) < 2:
        return 0.0
    return float(trapezoid(y, t))


def check_max_principle(series: Sequence[DiagnosticsRecord], theta0_inf: float, tol: float = 1e-6,
                        tail_max: float | None = None) -> Verdict:
    """``M`` non-increasing and ``m`` non-decreasing within ``tol ||theta_0||_inf`` per unit time.

    Consecutive records suffice: if every adjacent pair satisfies the rate
    bound, so does every pair. ``worst`` is the largest normalized rate of
    increase of ``M`` or of decrease of ``m``.
    """
    recs = smooth_window(series, tail_max)
    if len(recs) < 2:
        return _verdict("max_principle", 0.0, tol, records=len(recs))
    t = _series_array(recs, "t")
    M = _series_array(recs, "M")
    m = _series_array(recs, "m")
    dt = np.diff(t)
    scale = theta0_inf if theta0_inf > 0 else 1.0
    rise = float(np.max(np.diff(M) / dt)) / scale
    drop = float(np.max(-np.diff(m) / dt)) / scale
    return _verdict("max_principle", max(rise, drop, 0.0), tol, M_rate=rise, m_rate=drop,
                    records=len(recs), t_end=float(t[-1]))
