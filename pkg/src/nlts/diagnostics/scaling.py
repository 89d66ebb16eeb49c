"""Paired runs testing the space-time scaling symmetry."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..spectral.grid import Grid, PhysicalField


def scaling_pair_test(theta0: PhysicalField, p, lam: int = 2, mu: float = 1.0,
                      times=(0.025, 0.05, 0.075, 0.1), controls=None) -> float:
    """Max deviation between a run and its rescaled partner, relative to ``||theta_0||_inf``.

    Run A starts from ``theta0`` on the box ``L``. Run B starts from
    ``lam^{-2 alpha} mu theta0(lam x)`` on the box ``L / lam`` with the same
    ``N``, so its samples are those of A times a constant. Snapshots of B at
    ``t`` are compared with ``lam^{-2 alpha} mu theta_A(lam x, mu t)``.

    Both runs use the CFL rule without a ``dt_max`` cap; the CFL step of B is
    then exactly ``1/mu`` times that of A, so the two discrete systems are
    rescalings of each other and deviations come only from rounding.
    """
    from ..solver.integrate import RunControls, run  # solver imports diagnostics

    g = theta0.grid
    if lam not in (1, 2) or g.N % lam:
        raise ValueError(f"lambda must be 1 or 2 and divide N: {lam}")
    if not mu > 0:
        raise ValueError(f"mu must be > 0: {mu}")
    base = controls or RunControls()
    times = tuple(float(t) for t in times)
    factor = lam ** (-2 * p.alpha) * mu
    ctl_b = replace(base, T_end=max(times), dt_max=np.inf, snapshot_times=times,
                    tail_threshold=np.inf, grad_factor=np.inf)
    ctl_a = replace(ctl_b, T_end=mu * max(times), snapshot_times=tuple(mu * t for t in times),
                    record_every=None if ctl_b.record_every is None else mu * ctl_b.record_every)
    grid_b = Grid(g.n, g.N, g.L / lam)
    theta_b0 = PhysicalField(grid_b, factor * theta0.values)
    ra = run(theta0, p, ctl_a)
    rb = run(theta_b0, p, ctl_b)
    if len(ra.snapshots) != len(times) or len(rb.snapshots) != len(times):
        raise RuntimeError("a scaling run stopped before the last comparison time")
    scale = float(np.max(np.abs(theta0.values))) or 1.0
    dev = 0.0
    for sa, sb in zip(ra.snapshots, rb.snapshots):
        dev = max(dev, float(np.max(np.abs(factor * sa.field.values - sb.field.values))))
    return dev / scale
