"""Initial-data catalog."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..spectral.grid import Grid, PhysicalField, irfft, rfft

KINDS = ("gaussian", "smooth_bump", "dipole", "random_bandlimited", "zero")

# accepted parameters per kind (center defaults to the box center)
PARAMS = {
    "gaussian": {"A": 1.0, "sigma": None, "center": None},
    "smooth_bump": {"A": 1.0, "r": None, "center": None},
    "dipole": {"A": 1.0, "sigma": None, "separation": None, "center": None},
    "random_bandlimited": {"k_cut": 8, "amplitude": 1.0, "seed": None},
    "zero": {},
}


@dataclass(frozen=True)
class InitialData:
    """A named initial condition.

    ``sigma`` defaults to ``L/20``, ``r`` to ``L/5`` and ``separation`` to
    ``L/5``. ``positive_mass``, when set, rescales the field so that
    ``int theta^+ dx`` equals it.
    """

    kind: str
    params: dict = field(default_factory=dict)
    positive_mass: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"initial kind must be one of {KINDS}: {self.kind!r}")
        unknown = set(self.params) - set(PARAMS[self.kind])
        if unknown:
            raise ValueError(f"unknown parameters for {self.kind}: {sorted(unknown)}")

    def resolved(self, grid: Grid, seed: int | None = None) -> dict:
        """Parameters with every default made explicit."""
        out = dict(PARAMS[self.kind])
        out.update({k: v for k, v in self.params.items() if v is not None})
        L = grid.L
        if "center" in out and out["center"] is None:
            out["center"] = tuple(float(c) for c in grid.center())
        if "sigma" in out and out["sigma"] is None:
            out["sigma"] = L / 20
        if "r" in out and out["r"] is None:
            out["r"] = L / 5
        if "separation" in out and out["separation"] is None:
            out["separation"] = L / 5
        if "seed" in out and out["seed"] is None:
            out["seed"] = 0 if seed is None else seed
        if "center" in out:
            c = tuple(float(x) for x in np.atleast_1d(out["center"]))
            if len(c) != grid.n:
                raise ValueError(f"center has {len(c)} components, grid has n = {grid.n}")
            out["center"] = c
        return out

    def build(self, grid: Grid, seed: int | None = None) -> PhysicalField:
        p = self.resolved(grid, seed)
        vals = _BUILDERS[self.kind](grid, **p)
        if self.positive_mass is not None:
            pos = float(np.sum(np.maximum(vals, 0.0))) * grid.cell_volume
            if pos <= 0:
                raise ValueError("positive_mass given but the field has no positive part")
            vals = vals * (self.positive_mass / pos)
        return PhysicalField(grid, vals)


def _periodic_sq_dist(grid: Grid, center) -> np.ndarray:
    """Squared distance to the nearest periodic image of ``center``."""
    L = grid.L
    r2 = np.zeros(grid.shape)
    for x, c in zip(grid.coords(), center):
        d = (x - c + L / 2) % L - L / 2
        r2 = r2 + d * d
    return r2


def gaussian(grid: Grid, A: float, sigma: float, center) -> np.ndarray:
    """``A exp(-|x - c|^2 / (2 sigma^2))``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be > 0: {sigma}")
    return A * np.exp(-_periodic_sq_dist(grid, center) / (2 * sigma * sigma))


def smooth_bump(grid: Grid, A: float, r: float, center) -> np.ndarray:
    """``A exp(1 - 1/(1 - |x - c|^2 / r^2))`` inside radius ``r``, zero outside.

    Normalized so that the maximum equals ``A``.
    """
    if not 0 < r < grid.L / 2:
        raise ValueError(f"r must be in (0, L/2): {r}")
    rho2 = _periodic_sq_dist(grid, center) / (r * r)
    out = np.zeros(grid.shape)
    inside = rho2 < 1
    out[inside] = A * np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
    return out


def dipole(grid: Grid, A: float, sigma: float, separation: float, center) -> np.ndarray:
    """Positive and negative Gaussian lobes split along the first axis."""
    shift = np.zeros(grid.n)
    shift[0] = separation / 2
    c = np.asarray(center)
    return gaussian(grid, A, sigma, c - shift) - gaussian(grid, A, sigma, c + shift)


def random_bandlimited(grid: Grid, k_cut: float, amplitude: float, seed: int) -> np.ndarray:
    """Zero-mean random field with modes ``0 < |k| <= k_cut``, scaled to ``max |theta| = amplitude``."""
    if not 0 < k_cut < grid.N / 3:
        raise ValueError(f"k_cut must be in (0, N/3): {k_cut}")
    rng = np.random.default_rng(seed)
    noise = rng.standard_normal(grid.shape)
    c = rfft(noise, grid)
    c[(grid.kabs > k_cut) | (grid.kabs == 0)] = 0.0
    vals = irfft(c, grid)
    peak = float(np.max(np.abs(vals)))
    return vals * (amplitude / peak) if peak > 0 else vals


def zero(grid: Grid) -> np.ndarray:
    return np.zeros(grid.shape)


_BUILDERS = {
    "gaussian": gaussian,
    "smooth_bump": smooth_bump,
    "dipole": dipole,
    "random_bandlimited": random_bandlimited,
    "zero": zero,
}
