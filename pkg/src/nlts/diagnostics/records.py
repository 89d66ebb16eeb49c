"""Per-time diagnostic records."""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from ..spectral.grid import Grid, SpectralField, irfft
from ..spectral.interp import refine_extremum
from ..spectral.operators import derivative_symbols, lambda_symbol, riesz_tensor_symbols, spectral_energy

SERIES_FIELDS = (
    "t", "mass", "mass_positive", "M", "m", "hdot_alpha_sq",
    "grad_inf", "criterion_integrand", "tail_fraction",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """Scalar diagnostics of one state.

    ``M`` and ``m`` are extrema of the trigonometric interpolant (grid
    extremum polished by Newton), so they do not jitter as a peak moves
    between grid points. ``tail_fraction`` is the energy share of the
    un-dealiased advective product outside the 2/3 band.
    """

    t: float
    mass: float
    mass_positive: float
    M: float
    m: float
    hdot_alpha_sq: float
    grad_inf: float
    criterion_integrand: float
    tail_fraction: float

    def as_tuple(self) -> tuple[float, ...]:
        return tuple(getattr(self, f) for f in SERIES_FIELDS)

    def to_dict(self) -> dict:
        return asdict(self)


assert tuple(f.name for f in fields(DiagnosticsRecord)) == SERIES_FIELDS


class RecordMaker:
    """Builds :class:`DiagnosticsRecord` objects for a fixed grid and alpha."""

    def __init__(self, grid: Grid, alpha: float, refine: bool = True):
        self.grid = grid
        self.alpha = alpha
        self.refine = refine
        self._lam2a = lambda_symbol(grid, 2 * alpha)
        self._dsym = derivative_symbols(grid)
        tensor = riesz_tensor_symbols(grid, alpha)
        self._tensor = [tensor[j][l] for j in range(grid.n) for l in range(j, grid.n)]

    def __call__(self, t: float, coeffs: np.ndarray, grad_inf: float | None = None,
                 tail_fraction: float = 0.0) -> DiagnosticsRecord:
        g = self.grid
        vals = irfft(coeffs, g)
        mass = float(coeffs.flat[0].real)
        mass_pos = float(np.sum(np.maximum(vals, 0.0))) * g.cell_volume
        M, m = self.extrema(coeffs, vals)
        if grad_inf is None:
            sq = sum(irfft(coeffs * d, g) ** 2 for d in self._dsym)
            grad_inf = float(np.sqrt(np.max(sq)))
        crit = max(float(np.max(np.abs(irfft(coeffs * s, g)))) for s in self._tensor)
        return DiagnosticsRecord(
            t=float(t), mass=mass, mass_positive=mass_pos, M=M, m=m,
            hdot_alpha_sq=spectral_energy(coeffs, g, self._lam2a),
            grad_inf=float(grad_inf), criterion_integrand=crit,
            tail_fraction=float(tail_fraction),
        )

    def extrema(self, coeffs: np.ndarray, vals: np.ndarray) -> tuple[float, float]:
        g = self.grid
        imax, imin = np.unravel_index(np.argmax(vals), vals.shape), np.unravel_index(np.argmin(vals), vals.shape)
        M, m = float(vals[imax]), float(vals[imin])
        if not self.refine or M == m:
            return M, m
        full = SpectralField(g, coeffs).full()
        xmax = np.array(imax, dtype=float) * g.dx
        xmin = np.array(imin, dtype=float) * g.dx
        M, _ = refine_extremum(full, g, xmax, M, sign=1.0)
        m, _ = refine_extremum(full, g, xmin, m, sign=-1.0)
        return M, m
