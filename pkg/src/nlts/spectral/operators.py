"""Fourier multipliers: fractional Laplacian, gradient, nonlocal velocities, norms.

Convention: ``Lambda^s`` has multiplier ``(2 pi |k| / L)^s`` so that
``Lambda^2 = -Laplacian`` exactly with derivative multiplier ``2 pi i k_j / L``.
For ``s != 0`` the zero mode of ``Lambda^s`` is 0 (this covers negative
``s``, where the symbol is singular at the origin).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, PhysicalField, SpectralField, VectorField, forward_transform


def lambda_symbol(grid: Grid, s: float) -> np.ndarray:
    """``(2 pi |k| / L)^s`` on the half layout, zero mode set to 0 when s != 0."""
    if s == 0:
        return np.ones(grid.spectral_shape)
    freq = 2 * np.pi * grid.kabs / grid.L
    out = np.zeros(grid.spectral_shape)
    nz = freq > 0
    out[nz] = freq[nz] ** s
    return out


def derivative_symbols(grid: Grid) -> tuple[np.ndarray, ...]:
    """``2 pi i k_j / L`` (Nyquist planes zeroed)."""
    return tuple(2j * np.pi * k / grid.L for k in grid.odd_wavenumbers)


def _check_alpha(alpha: float):
    if not 0 < alpha < 1:
        raise ValueError(f"alpha out of (0,1): {alpha}")


def fractional_laplacian(F: SpectralField, s: float) -> SpectralField:
    return SpectralField(F.grid, F.coeffs * lambda_symbol(F.grid, s))


def gradient(F: SpectralField) -> VectorField:
    return VectorField(tuple(SpectralField(F.grid, F.coeffs * d) for d in derivative_symbols(F.grid)))


def divergence(V: VectorField) -> SpectralField:
    g = V.grid
    total = np.zeros(g.spectral_shape, dtype=complex)
    for comp, d in zip(V, derivative_symbols(g)):
        total += comp.coeffs * d
    return SpectralField(g, total)


def velocity_symbols(grid: Grid, alpha: float, kind: str = "gradient") -> tuple[np.ndarray, ...]:
    """Multipliers of ``u = grad Lambda^{-2+2alpha}`` (or its perpendicular form)."""
    _check_alpha(alpha)
    pot = lambda_symbol(grid, -2 + 2 * alpha)
    d = derivative_symbols(grid)
    if kind == "gradient":
        return tuple(dj * pot for dj in d)
    if kind == "perp":
        if grid.n != 2:
            raise ValueError(f"perp velocity is two-dimensional; grid has n = {grid.n}")
        return (d[1] * pot, -d[0] * pot)
    raise ValueError(f"unknown velocity type {kind!r}")


def velocity_gradient_type(theta_hat: SpectralField, alpha: float) -> VectorField:
    syms = velocity_symbols(theta_hat.grid, alpha, "gradient")
    return VectorField(tuple(SpectralField(theta_hat.grid, theta_hat.coeffs * s) for s in syms))


def velocity_perp_type(theta_hat: SpectralField, alpha: float) -> VectorField:
    syms = velocity_symbols(theta_hat.grid, alpha, "perp")
    return VectorField(tuple(SpectralField(theta_hat.grid, theta_hat.coeffs * s) for s in syms))


def riesz_tensor_symbols(grid: Grid, alpha: float) -> list[list[np.ndarray]]:
    """Entry ``(j, l)``: ``-(k_j k_l / |k|^2) (2 pi |k| / L)^{2 alpha}``.

    ``(j, l)`` and ``(l, j)`` share the same array object.
    """
    _check_alpha(alpha)
    lam = lambda_symbol(grid, 2 * alpha)
    k2 = grid.kabs ** 2
    inv = np.zeros(grid.spectral_shape)
    inv[k2 > 0] = 1.0 / k2[k2 > 0]
    ks = grid.odd_wavenumbers
    n = grid.n
    out = [[None] * n for _ in range(n)]
    for j in range(n):
        for l in range(j, n):
            kk = ks[j] * ks[l] if j != l else grid.wavenumbers[j] ** 2
            out[j][l] = out[l][j] = -kk * inv * lam
    return out


def riesz_tensor_lambda2alpha(theta_hat: SpectralField, alpha: float) -> list[list[SpectralField]]:
    syms = riesz_tensor_symbols(theta_hat.grid, alpha)
    n = theta_hat.grid.n
    cache = {}
    out = []
    for j in range(n):
        row = []
        for l in range(n):
            key = (min(j, l), max(j, l))
            if key not in cache:
                cache[key] = SpectralField(theta_hat.grid, theta_hat.coeffs * syms[j][l])
            row.append(cache[key])
        out.append(row)
    return out


def spectral_energy(coeffs: np.ndarray, grid: Grid, weight: np.ndarray | None = None) -> float:
    """``sum_k w(k) |coeff(k)|^2 / L^n`` over the full spectrum."""
    mult = grid.half_weights if weight is None else grid.half_weights * weight
    return float(np.sum(mult * (coeffs.real ** 2 + coeffs.imag ** 2))) / grid.volume


@dataclass(frozen=True)
class Norms:
    L1: float
    L1_positive_part: float
    L2: float
    Linf: float
    Hdot_alpha_sq: float


def hdot_sq(F: SpectralField, alpha: float) -> float:
    """``||Lambda^alpha f||_{L^2}^2`` via Plancherel."""
    return spectral_energy(F.coeffs, F.grid, lambda_symbol(F.grid, 2 * alpha))


def norms(f: PhysicalField, alpha: float) -> Norms:
    """Lebesgue norms by the rectangle rule, ``Hdot^alpha`` by Plancherel.

    Sums use numpy's pairwise reduction in C order, which is deterministic
    for a given array shape.
    """
    g = f.grid
    v = f.values
    return Norms(
        L1=float(np.sum(np.abs(v))) * g.cell_volume,
        L1_positive_part=float(np.sum(np.maximum(v, 0.0))) * g.cell_volume,
        L2=float(np.sqrt(np.sum(v * v) * g.cell_volume)),
        Linf=float(np.max(np.abs(v))) if v.size else 0.0,
        Hdot_alpha_sq=hdot_sq(forward_transform(f), alpha),
    )
