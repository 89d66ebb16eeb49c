"""Model parameters and the dealiased nonlinear term."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..spectral.grid import Grid, SpectralField, irfft, rfft
from ..spectral.operators import derivative_symbols, lambda_symbol, velocity_symbols

VELOCITY_TYPES = ("gradient", "perp")


class NaNDetected(FloatingPointError):
    """Non-finite values appeared in the advective product."""


@dataclass(frozen=True)
class ModelParams:
    """Physical parameters.

    Attributes
    ----------
    alpha : float
        Velocity order, ``u = grad Lambda^{-2+2 alpha} theta``; in (0, 1).
    kappa : float
        Dissipation coefficient (>= 0).
    gamma : float
        Dissipation order, in (0, 2) when ``kappa > 0``.
    velocity_type : str
        ``"gradient"`` (compressible) or ``"perp"`` (divergence-free, n = 2 only).
    advect : bool
        When False the advective term is switched off, leaving pure dissipation.
    """

    alpha: float
    kappa: float = 0.0
    gamma: float = 1.0
    velocity_type: str = "gradient"
    advect: bool = True

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha out of (0,1): {self.alpha}")
        if not self.kappa >= 0:
            raise ValueError(f"kappa must be >= 0: {self.kappa}")
        if self.kappa > 0 and not 0 < self.gamma < 2:
            raise ValueError(f"gamma out of (0,2): {self.gamma}")
        if self.velocity_type not in VELOCITY_TYPES:
            raise ValueError(f"velocity_type must be one of {VELOCITY_TYPES}: {self.velocity_type!r}")

    def validate_for(self, grid: Grid) -> None:
        if self.velocity_type == "perp" and grid.n != 2:
            raise ValueError(f"velocity_type 'perp' requires n = 2, got n = {grid.n}")


@dataclass
class StageInfo:
    """By-products of one nonlinear evaluation, all for the input state."""

    u_max: float
    grad_inf: float
    tail_fraction: float
    u_hat: tuple[np.ndarray, ...] = field(repr=False, default=())


class SpectralModel:
    """Precomputed multipliers for one ``(grid, params)`` pair."""

    def __init__(self, grid: Grid, params: ModelParams):
        params.validate_for(grid)
        self.grid = grid
        self.params = params
        self.mask = grid.dealias_mask
        self.dsym = derivative_symbols(grid)
        self.vsym = velocity_symbols(grid, params.alpha, params.velocity_type)
        if params.kappa > 0:
            self.rate = params.kappa * lambda_symbol(grid, params.gamma)
        else:
            self.rate = None
        self._tail_weight = grid.half_weights * ~self.mask
        self._all_weight = grid.half_weights

    def propagator(self, tau: float) -> np.ndarray | float:
        """``exp(-kappa (2 pi |k| / L)^gamma tau)``; scalar 1 when inviscid."""
        if self.rate is None:
            return 1.0
        return np.exp(-self.rate * tau)

    def nonlinear(self, coeffs: np.ndarray, keep_velocity: bool = False) -> tuple[np.ndarray, StageInfo]:
        """``-dealias(forward(u . grad theta))`` plus monitors for the input state."""
        g = self.grid
        th = coeffs * self.mask
        grads = [irfft(th * d, g) for d in self.dsym]
        grad_inf = float(np.sqrt(np.max(sum(gj * gj for gj in grads)))) if grads else 0.0
        if not self.params.advect:
            zero = np.zeros_like(coeffs)
            return zero, StageInfo(0.0, grad_inf, 0.0, tuple(zero for _ in self.vsym) if keep_velocity else ())
        u_hat = tuple(th * v for v in self.vsym)
        us = [irfft(uh, g) for uh in u_hat]
        prod = us[0] * grads[0]
        for uj, gj in zip(us[1:], grads[1:]):
            prod += uj * gj
        if not np.all(np.isfinite(prod)):
            raise NaNDetected("non-finite values in u . grad theta")
        P = rfft(prod, g)
        e2 = P.real ** 2 + P.imag ** 2
        total = float(np.sum(self._all_weight * e2))
        tail = float(np.sum(self._tail_weight * e2)) / total if total > 0 else 0.0
        u_max = float(np.sqrt(np.max(sum(uj * uj for uj in us))))
        P[~self.mask] = 0.0
        np.negative(P, out=P)
        return P, StageInfo(u_max, grad_inf, tail, u_hat if keep_velocity else ())


def rhs(theta_hat: SpectralField, p: ModelParams) -> SpectralField:
    """Advective tendency ``-dealias(forward(u . grad theta))``.

    The dissipative term is not included; :func:`step` treats it exactly.
    """
    out, _ = SpectralModel(theta_hat.grid, p).nonlinear(theta_hat.coeffs)
    return SpectralField(theta_hat.grid, out)
