"""Real-space quadrature oracles for ``Lambda^s`` and the nonlocal velocity.

Both routes sum a sampled singular kernel over the lattice with the origin
removed.  The error of that punctured rectangle rule is an expansion in
``dx^{|beta| - s}`` whose coefficients are the Taylor coefficients of the
smooth factor at the singular point times lattice sums
``Z_beta(sigma) = sum' m^beta |m|^{-sigma}`` (analytically continued).
Terms up to fourth order are subtracted; the Taylor coefficients come from
central finite differences, so nothing here applies a Fourier multiplier.

The lattice sums are discrete convolutions.  ``method="direct"`` evaluates
them offset by offset; ``method="fft"`` evaluates the same sums with FFT
convolution (:func:`scipy.signal.fftconvolve` or a circular FFT product).
"""
from __future__ import annotations

import itertools
import math
import warnings
from functools import lru_cache

import numpy as np
from scipy import integrate, special
from scipy.signal import fftconvolve

from .grid import PhysicalField, VectorField

TAIL_MASS_RTOL = 1e-8
IMAGE_SHELLS = 6


class TailMassWarning(UserWarning):
    """Field is not effectively supported inside the box."""


def unit_sphere_area(n: int) -> float:
    return 2 * math.pi ** (n / 2) / math.gamma(n / 2)


def unit_ball_volume(n: int) -> float:
    return 2 * math.pi ** (n / 2) / (n * math.gamma(n / 2))


def lambda_constant(n: int, s: float) -> float:
    """``C_{n,s} = 2^s Gamma((n+s)/2) / (pi^{n/2} |Gamma(-s/2)|)``."""
    return 2 ** s * math.gamma((n + s) / 2) / (math.pi ** (n / 2) * abs(math.gamma(-s / 2)))


def velocity_kernel_constant(n: int, alpha: float) -> float:
    """Constant of the velocity kernel ``C (x-y)/|x-y|^{n+2 alpha}``.

    ``(2-2a-n) Gamma(n/2-1+a)`` is rewritten as ``-2 Gamma(n/2+a)``, which
    removes the 0 * inf form at ``n = 1, a = 1/2``.
    """
    return -2 * math.gamma(n / 2 + alpha) / (
        math.pi ** (n / 2) * 2 ** (2 - 2 * alpha) * math.gamma(1 - alpha)
    )


def _theta_moment(a: int, t: float) -> float:
    """``sum_{m in Z} m^a exp(-pi t m^2)`` for even ``a``."""
    m = np.arange(1, 80)
    out = 2.0 * np.sum(m ** a * np.exp(-np.pi * t * m * m))
    return out + 1.0 if a == 0 else out


@lru_cache(maxsize=None)
def lattice_zeta(exponents: tuple[int, ...], sigma: float) -> float:
    """``sum'_{m in Z^n} prod_i m_i^{a_i} / |m|^sigma``, analytically continued in ``sigma``.

    Mellin representation split at ``t = 1``; below ``t = 1`` the theta
    moments are replaced by their integral asymptotics, whose remainder is
    ``O(exp(-pi/t))``.  Odd exponents give 0 by symmetry.
    """
    exps = tuple(int(a) for a in exponents)
    if any(a % 2 for a in exps):
        return 0.0
    n, deg = len(exps), sum(exps)
    p = (deg + n) / 2
    if sigma / 2 == p:
        raise ValueError(f"lattice sum has a pole at sigma = {2 * p}")
    const = 1.0 if deg == 0 else 0.0
    lead = float(np.prod([special.gamma((a + 1) / 2) / math.pi ** ((a + 1) / 2) for a in exps]))

    def moments(t):
        return float(np.prod([_theta_moment(a, t) for a in exps]))

    low, _ = integrate.quad(
        lambda t: t ** (sigma / 2 - 1) * (moments(t) - lead * t ** (-p)),
        0.004, 1.0, epsabs=1e-14, epsrel=1e-12, limit=200,
    )
    high, _ = integrate.quad(
        lambda t: t ** (sigma / 2 - 1) * (moments(t) - const),
        1.0, np.inf, epsabs=1e-14, epsrel=1e-12, limit=200,
    )
    total = low + high + lead / (sigma / 2 - p)
    pref = math.pi ** (sigma / 2)
    # -const * 2/sigma * rgamma(sigma/2) written without the removable pole at sigma = 0
    return float(pref * special.rgamma(sigma / 2) * total - const * pref / special.gamma(sigma / 2 + 1))


def epstein_zeta(n: int, sigma: float) -> float:
    """``sum'_{m in Z^n} |m|^{-sigma}``, analytically continued."""
    return lattice_zeta((0,) * n, sigma)


def _even_multi_indices(n: int, order: int):
    for beta in itertools.product(range(order + 1), repeat=n):
        if sum(beta) == order and all(b % 2 == 0 for b in beta):
            yield beta


# 1-D central stencils (offsets -2..2): fourth order for d1, d2; second order for d3, d4
_STENCILS = {
    0: np.array([0, 0, 1, 0, 0], float),
    1: np.array([1, -8, 0, 8, -1], float) / 12,
    2: np.array([-1, 16, -30, 16, -1], float) / 12,
    3: np.array([-1, 2, 0, -2, 1], float) / 2,
    4: np.array([1, -4, 6, -4, 1], float),
}


def _fd_partial(v: np.ndarray, beta, dx: float, periodic: bool) -> np.ndarray:
    out = v
    for ax, order in enumerate(beta):
        if order == 0:
            continue
        w = _STENCILS[order]
        if periodic:
            acc = sum(w[j] * np.roll(out, -(j - 2), axis=ax) for j in range(5) if w[j])
        else:
            pad = [(0, 0)] * v.ndim
            pad[ax] = (2, 2)
            p = np.pad(out, pad)
            acc = 0.0
            for j in range(5):
                if w[j]:
                    sl = [slice(None)] * v.ndim
                    sl[ax] = slice(j, j + v.shape[ax])
                    acc = acc + w[j] * p[tuple(sl)]
        out = acc / dx ** order
    return out


def _factorial(beta) -> float:
    return float(np.prod([math.factorial(b) for b in beta]))


def _offset_grid(n: int, offsets: np.ndarray) -> list[np.ndarray]:
    return np.meshgrid(*([offsets] * n), indexing="ij")


def _convolve_zero(values: np.ndarray, kernel: np.ndarray, method: str) -> np.ndarray:
    """``out[i] = sum_o kernel[o] values[i - o]``, zero extension, centred odd kernel."""
    if method == "fft":
        return fftconvolve(values, kernel, mode="same")
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    N = values.shape[0]
    M = kernel.shape[0] // 2
    n = values.ndim
    out = np.zeros_like(values)
    padded = np.zeros(tuple(N + 2 * M for _ in range(n)))
    padded[tuple(slice(M, M + N) for _ in range(n))] = values
    for idx in np.ndindex(kernel.shape):
        w = kernel[idx]
        if w != 0.0:
            out += w * padded[tuple(slice(2 * M - j, 2 * M - j + N) for j in idx)]
    return out


def _convolve_periodic(values: np.ndarray, kernel: np.ndarray, method: str) -> np.ndarray:
    """``out[i] = sum_o kernel[o] values[i - o]`` on the torus; ``kernel`` indexed by offset mod N."""
    axes = tuple(range(values.ndim))
    if method == "fft":
        return np.fft.irfftn(np.fft.rfftn(values) * np.fft.rfftn(kernel), s=values.shape, axes=axes)
    if method != "direct":
        raise ValueError(f"unknown method {method!r}")
    out = np.zeros_like(values)
    for idx in np.ndindex(kernel.shape):
        w = kernel[idx]
        if w != 0.0:
            out += w * np.roll(values, idx, axis=axes)
    return out


def boundary_tail_fraction(f: PhysicalField, margin_fraction: float = 0.125) -> float:
    """Share of ``int |f|`` carried within ``margin_fraction * L`` of the box faces."""
    g = f.grid
    a = np.abs(f.values)
    total = a.sum()
    if total == 0:
        return 0.0
    m = max(1, int(round(margin_fraction * g.N)))
    inner = a[tuple(slice(m, g.N - m) for _ in range(g.n))].sum()
    return float((total - inner) / total)


def _warn_tail(f: PhysicalField):
    frac = boundary_tail_fraction(f)
    if frac > TAIL_MASS_RTOL:
        warnings.warn(
            f"field is not effectively supported in the box: boundary tail mass fraction {frac:.2e}",
            TailMassWarning,
            stacklevel=3,
        )


def _periodized_kernel(n: int, N: int, L: float, power: float) -> np.ndarray:
    """``sum_m |d + m L|^{-power}`` for lattice offsets ``d`` (index = offset mod N).

    Images with ``|m|_inf <= IMAGE_SHELLS`` are summed; farther shells are
    replaced by their value at ``d = 0``, taken from the Epstein zeta
    function.  The ``d = m = 0`` term is excluded.
    """
    dx = L / N
    d = np.fft.fftfreq(N, 1.0 / N) * dx
    D = _offset_grid(n, d)
    P = IMAGE_SHELLS
    out = np.zeros((N,) * n)
    near_sum = 0.0
    for m in itertools.product(range(-P, P + 1), repeat=n):
        r2 = sum((Dj + mj * L) ** 2 for Dj, mj in zip(D, m))
        if any(m):
            near_sum += float(np.dot(m, m)) ** (-power / 2)
            out += r2 ** (-power / 2)
        else:
            nz = r2 > 0
            out[nz] += r2[nz] ** (-power / 2)
    far = (epstein_zeta(n, power) - near_sum) * L ** (-power)
    return out + far


def singular_integral_lambda(
    f: PhysicalField, s: float, method: str = "fft", extension: str = "periodic"
) -> PhysicalField:
    """``C_{n,s} P.V. int (f(x) - f(y)) / |x-y|^{n+s} dy`` by lattice quadrature.

    ``extension="periodic"`` sums over the periodic extension of ``f``
    (periodized kernel), i.e. the operator on the torus the grid lives on.
    ``extension="zero"`` extends ``f`` by zero, sums offsets inside the ball
    ``|x-y| < L/2`` and adds ``f(x) int_{|h|>L/2} |h|^{-n-s} dh`` in closed
    form, i.e. the whole-space operator applied to the boxed data.
    """
    if not 0 < s < 2:
        raise ValueError(f"s must lie in (0, 2), got {s}")
    _warn_tail(f)
    g = f.grid
    n, dx, v = g.n, g.dx, f.values
    periodic = extension == "periodic"
    if periodic:
        kernel = _periodized_kernel(n, g.N, g.L, n + s) * dx ** n
        summed = v * kernel.sum() - _convolve_periodic(v, kernel, method)
    elif extension == "zero":
        R = g.L / 2
        D = _offset_grid(n, np.arange(-(g.N // 2), g.N // 2 + 1) * dx)
        r = np.sqrt(sum(o * o for o in D))
        kernel = np.zeros_like(r)
        inside = (r > 0) & (r < R)
        kernel[inside] = r[inside] ** (-n - s) * dx ** n
        summed = v * kernel.sum() - _convolve_zero(v, kernel, method)
        summed = summed + v * unit_sphere_area(n) * R ** (-s) / s
    else:
        raise ValueError(f"unknown extension {extension!r}")

    # integrand f(x) - f(x+h): Taylor coefficient of h^beta is -d^beta f / beta!
    correction = np.zeros_like(v)
    for order in (2, 4):
        for beta in _even_multi_indices(n, order):
            z = lattice_zeta(beta, n + s)
            deriv = _fd_partial(v, beta, dx, periodic)
            correction += deriv / _factorial(beta) * z * dx ** (order - s)
    return PhysicalField(g, lambda_constant(n, s) * (summed + correction))


def kernel_velocity(theta: PhysicalField, alpha: float, method: str = "fft") -> VectorField:
    """``u = C_{n,alpha} P.V. int (x-y) / |x-y|^{n+2 alpha} theta(y) dy`` by lattice quadrature.

    ``theta`` is extended by zero outside the box and every pair of box
    points is summed.  Mass outside the box is neglected; a warning is
    issued when the field is not effectively supported.
    """
    if not 0 < alpha < 1:
        raise ValueError(f"alpha out of (0,1): {alpha}")
    _warn_tail(theta)
    g = theta.grid
    n, dx, v = g.n, g.dx, theta.values
    D = _offset_grid(n, np.arange(-(g.N - 1), g.N) * dx)
    r = np.sqrt(sum(o * o for o in D))
    base = np.zeros_like(r)
    nz = r > 0
    base[nz] = r[nz] ** (-n - 2 * alpha) * dx ** n

    c = velocity_kernel_constant(n, alpha)
    comps = []
    for i in range(n):
        summed = _convolve_zero(v, D[i] * base, method)
        # integrand -h_i theta(x+h); Taylor terms -h_i h^gamma d^gamma theta / gamma!
        correction = np.zeros_like(v)
        for order in (2, 4):
            for beta in _even_multi_indices(n, order):
                if beta[i] == 0:
                    continue
                gamma = list(beta)
                gamma[i] -= 1
                z = lattice_zeta(beta, n + 2 * alpha)
                deriv = _fd_partial(v, gamma, dx, periodic=False)
                correction += deriv / _factorial(gamma) * z * dx ** (order - 2 * alpha)
        comps.append(PhysicalField(g, c * (summed + correction)))
    return VectorField(tuple(comps))
