"""Spectral-core invariants as verdicts, shared by the CLI and the tests."""
from __future__ import annotations

import math

import numpy as np

from .diagnostics.checks import Verdict, _verdict
from .spectral.grid import Grid, PhysicalField, SpectralField, forward_transform, hermitian_defect, inverse_transform, irfft, rfft
from .spectral.operators import divergence, fractional_laplacian, norms, velocity_gradient_type
from .spectral.quadrature import kernel_velocity, singular_integral_lambda, unit_sphere_area

ALPHAS = (0.25, 0.5, 0.75)
LAMBDA_POWERS = (0.5, 1.0, 1.5)


def smooth_bump(grid: Grid, r: float) -> PhysicalField:
    """``exp(-1/(1 - |x-c|^2/r^2))`` inside radius ``r`` of the box centre, zero outside."""
    rr = np.sqrt(sum((x - c) ** 2 for x, c in zip(grid.mesh(), grid.center()))) / r
    v = np.zeros(grid.shape)
    inside = rr < 1
    v[inside] = np.exp(-1.0 / (1.0 - rr[inside] ** 2))
    return PhysicalField(grid, v)


def gaussian_hdot_sq(n: int, s: float) -> float:
    """``||exp(-pi |x|^2)||^2_{Hdot^s}`` on the whole space, in closed form."""
    a = 2 * math.pi
    return unit_sphere_area(n) * a ** (2 * s) * math.gamma(s + n / 2) / (2 * a ** (s + n / 2))


def padded_fourier_velocity(f: PhysicalField, alpha: float, pad: int = 4) -> list[np.ndarray]:
    """Fourier velocity of ``f`` zero-padded into a box ``pad`` times wider, restricted back.

    Padding pushes the periodic images away so the result approximates the
    whole-space velocity the kernel formula computes.
    """
    g = f.grid
    big = Grid(g.n, g.N * pad, g.L * pad)
    v = np.zeros(big.shape)
    inner = (slice(0, g.N),) * g.n
    v[inner] = f.values
    u = velocity_gradient_type(forward_transform(PhysicalField(big, v)), alpha)
    return [inverse_transform(c).values[inner] for c in u]


def check_roundtrip(N: int = 256, seed: int = 0) -> Verdict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (1, 2):
        g = Grid(n, N, 2 * math.pi)
        v = rng.standard_normal(g.shape)
        worst = max(worst, float(np.max(np.abs(irfft(rfft(v, g), g) - v))) / float(np.max(np.abs(v))))
    return _verdict("transform_roundtrip", worst, 1e-13)


def check_hermitian(N: int = 256, seed: int = 0) -> Verdict:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (1, 2):
        g = Grid(n, N, 2 * math.pi)
        F = forward_transform(PhysicalField(g, rng.standard_normal(g.shape)))
        worst = max(worst, hermitian_defect(F.full()) / float(np.max(np.abs(F.coeffs))))
    return _verdict("hermitian_symmetry", worst, 1e-13)


def check_divergence_identity(N: int = 256, fields: int = 10, seed: int = 0,
                              dims=(1, 2), alphas=ALPHAS) -> Verdict:
    """``div u + Lambda^{2 alpha} theta = 0`` on random fields, relative to ``Lambda^{2 alpha} theta``.

    Nyquist modes are removed first: odd multipliers vanish there, so the
    identity only holds on fields without Nyquist content.
    """
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in dims:
        g = Grid(n, N, 2 * math.pi)
        no_nyquist = np.ones(g.spectral_shape, dtype=bool)
        for k in g.wavenumbers:
            no_nyquist &= np.abs(k) != N // 2
        for _ in range(fields):
            F = forward_transform(PhysicalField(g, rng.standard_normal(g.shape)))
            F = SpectralField(g, F.coeffs * no_nyquist)
            for a in alphas:
                lam = fractional_laplacian(F, 2 * a).coeffs
                res = divergence(velocity_gradient_type(F, a)).coeffs + lam
                worst = max(worst, float(np.max(np.abs(res))) / float(np.max(np.abs(lam))))
    return _verdict("divergence_identity", worst, 1e-12, fields=fields * len(dims) * len(alphas))


def _gaussian(g: Grid) -> PhysicalField:
    r2 = sum((x - c) ** 2 for x, c in zip(g.mesh(), g.center()))
    return PhysicalField(g, np.exp(-math.pi * r2))


def check_gaussian_norms(N: int = 256) -> Verdict:
    """Lebesgue norms of ``exp(-pi |x|^2)``: ``L1 = Linf = 1`` and ``L2^2 = 2^{-n/2}``."""
    worst = 0.0
    for n in (1, 2):
        nm = norms(_gaussian(Grid(n, N, 8.0)), 0.5)
        worst = max(worst, abs(nm.L1 - 1.0), abs(nm.Linf - 1.0),
                    abs(nm.L2 ** 2 - 2 ** (-n / 2)) / 2 ** (-n / 2))
    return _verdict("gaussian_norms", worst, 1e-10)


def check_gaussian_hdot(N: int = 1024, L: float = 64.0) -> Verdict:
    """``Hdot^{1/2}`` of ``exp(-pi |x|^2)`` against the whole-space value.

    The periodic sum is a Riemann sum with spacing ``1/L`` of an integrand
    with a kink at the origin, so the error is ``O(L^{-2})`` rather than
    spectrally small; the box is taken wide for that reason.
    """
    worst = 0.0
    detail = {}
    for n in (1, 2):
        exact = gaussian_hdot_sq(n, 0.5)
        err = abs(norms(_gaussian(Grid(n, N, L)), 0.5).Hdot_alpha_sq - exact) / exact
        detail[f"n{n}"] = err
        worst = max(worst, err)
    return _verdict("gaussian_hdot", worst, 1e-3, **detail)


def check_lambda_quadrature(N: int = 256, dims=(1, 2), powers=LAMBDA_POWERS) -> Verdict:
    """Singular-integral ``Lambda^s`` against the Fourier multiplier on a compact bump."""
    worst = 0.0
    detail = {}
    for n in dims:
        g = Grid(n, N, 2 * math.pi)
        f = smooth_bump(g, g.L / 10)
        for s in powers:
            a = singular_integral_lambda(f, s).values
            b = inverse_transform(fractional_laplacian(forward_transform(f), s)).values
            err = float(np.linalg.norm(a - b) / np.linalg.norm(b))
            detail[f"n{n}_s{s:g}"] = err
            worst = max(worst, err)
    return _verdict("lambda_quadrature", worst, 1e-2, **detail)


def check_kernel_velocity(N: int = 256, dims=(1, 2), alphas=ALPHAS, pad: int = 4) -> Verdict:
    """Kernel velocity against the padded Fourier velocity, relative L2 on the bump support."""
    worst = 0.0
    detail = {}
    for n in dims:
        g = Grid(n, N, 2 * math.pi)
        f = smooth_bump(g, g.L / 10)
        supp = f.values > 0
        for a in alphas:
            uk = kernel_velocity(f, a)
            uf = padded_fourier_velocity(f, a, pad)
            num = sum(float(np.sum((k.values - q)[supp] ** 2)) for k, q in zip(uk, uf))
            den = sum(float(np.sum(q[supp] ** 2)) for q in uf)
            err = math.sqrt(num / den)
            detail[f"n{n}_a{a:g}"] = err
            worst = max(worst, err)
    return _verdict("kernel_velocity", worst, 2e-2, **detail)


def operators_selftest(N: int = 256, seed: int = 0, fields: int = 10, quadrature: bool = True) -> list[Verdict]:
    out = [check_roundtrip(N, seed), check_hermitian(N, seed),
           check_divergence_identity(N, fields, seed), check_gaussian_norms(N),
           check_gaussian_hdot()]
    if quadrature:
        out += [check_lambda_quadrature(N), check_kernel_velocity(N)]
    return out
