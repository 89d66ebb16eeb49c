"""Level-set truncation sequence and its superlinear recurrence."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..spectral.grid import PhysicalField, forward_transform
from ..spectral.operators import hdot_sq
from .checks import Verdict, _verdict, interpolation_constant, level_value, truncate


@dataclass(frozen=True)
class DeGiorgiState:
    """Level ``k`` with value ``C_k``, chosen time ``t_k`` and mass ``W_k``."""

    k: int
    C_k: float
    t_k: float
    W_k: float


@dataclass(frozen=True)
class DeGiorgiResult:
    states: list[DeGiorgiState]
    failed_k: int | None
    message: str = ""

    @property
    def succeeded(self) -> bool:
        return self.failed_k is None


def _l1(f: PhysicalField) -> float:
    return float(np.sum(f.values)) * f.grid.cell_volume


def degiorgi_sequence(snapshots: Sequence[tuple[float, PhysicalField]], alpha: float,
                      k_max: int = 6, check_cadence: bool = True) -> DeGiorgiResult:
    """Build ``t_0 = 0 < t_1 < ... `` and ``W_k`` from snapshots on ``[0, 1]``.

    ``t_{k+1}`` is the earliest snapshot time in ``(t_k, C_{k+1})`` with
    ``||theta_k(t)||^2_{Hdot^alpha} <= W_k / (C_{k+1} - t_k)``. When every
    admissible candidate has the same Sobolev value (for instance all zero)
    the candidate nearest the interval midpoint is taken instead.

    Returns the states built so far and the first level that had no
    admissible snapshot, if any.
    """
    snaps = sorted(((float(t), f) for t, f in snapshots), key=lambda s: s[0])
    if not snaps or snaps[0][0] != 0.0:
        raise ValueError("snapshots must start at t = 0")
    times = np.array([s[0] for s in snaps])
    if check_cadence:
        need = 2.0 ** -(k_max + 2)
        inside = times[times <= 1.0]
        gaps = np.diff(np.append(inside, 1.0))
        if np.max(gaps) > need * (1 + 1e-9):
            raise ValueError(f"snapshot cadence {np.max(gaps):.3g} on [0,1] exceeds 2^-(k_max+2) = {need:.3g}")

    t_k = 0.0
    W_k = _l1(truncate(snaps[0][1], 0.0))
    states = [DeGiorgiState(0, 0.0, 0.0, W_k)]
    for k in range(k_max):
        c_next = level_value(k + 1)
        budget = W_k / (c_next - t_k)
        cands = []
        for t, f in snaps:
            if t_k < t < c_next:
                h = hdot_sq(forward_transform(truncate(f, level_value(k))), alpha)
                if h <= budget:
                    cands.append((t, h, f))
        if not cands:
            return DeGiorgiResult(states, k + 1, f"no snapshot in ({t_k:.6g}, {c_next:.6g}) satisfies the mean-value bound")
        hs = [c[1] for c in cands]
        if max(hs) == min(hs) and len(cands) > 1:
            mid = 0.5 * (t_k + c_next)
            t_new, _, f_new = min(cands, key=lambda c: (abs(c[0] - mid), c[0]))
        else:
            t_new, _, f_new = cands[0]
        W_k = _l1(truncate(f_new, c_next))
        t_k = t_new
        states.append(DeGiorgiState(k + 1, c_next, t_k, W_k))
    return DeGiorgiResult(states, None)


def recurrence_bound(W_k: float, k: int, n: int, alpha: float) -> float:
    """``C_{n,alpha} 2^{(2n+2alpha)/(n+2alpha) k} W_k^{(n+4alpha)/(n+2alpha)}``."""
    c = interpolation_constant(n, alpha)
    return c * 2.0 ** ((2 * n + 2 * alpha) / (n + 2 * alpha) * k) * W_k ** ((n + 4 * alpha) / (n + 2 * alpha))


def check_recurrence(states: Sequence[DeGiorgiState], n: int, alpha: float) -> Verdict:
    """``W_{k+1} <= recurrence_bound(W_k, k)`` at each computed level.

    ``worst`` is the largest excess ``W_{k+1} - bound`` (passes at <= 0).
    """
    worst = -np.inf
    for a, b in zip(states[:-1], states[1:]):
        worst = max(worst, b.W_k - recurrence_bound(a.W_k, a.k, n, alpha))
    if not np.isfinite(worst):
        worst = 0.0
    return _verdict("degiorgi_recurrence", worst, 0.0, levels=len(states) - 1)
