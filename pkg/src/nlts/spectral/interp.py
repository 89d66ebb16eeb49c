"""Trigonometric interpolation of a spectrum at off-grid points."""
from __future__ import annotations

import numpy as np

from .grid import Grid, SpectralField


def _phase_vectors(grid: Grid, point: np.ndarray) -> list[np.ndarray]:
    k = np.fft.fftfreq(grid.N, 1.0 / grid.N)
    return [np.exp(2j * np.pi * k * p / grid.L) for p in point]


def _contract(full: np.ndarray, vecs: list[np.ndarray]) -> complex:
    out = full
    for v in reversed(vecs):
        out = out @ v
    return complex(out)


def evaluate(F: SpectralField | np.ndarray, points, grid: Grid | None = None, full: bool = False) -> np.ndarray:
    """Values of the trigonometric interpolant at ``points`` (shape ``(m, n)``).

    ``F`` may be a :class:`SpectralField` or, with ``full=True``, a full
    coefficient array (pass ``grid`` then).
    """
    if isinstance(F, SpectralField):
        grid, C = F.grid, F.full()
    else:
        C = F if full else SpectralField(grid, F).full()
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    out = np.empty(len(pts))
    for i, p in enumerate(pts):
        out[i] = _contract(C, _phase_vectors(grid, p)).real
    return out / grid.volume


def value_grad_hess(full: np.ndarray, grid: Grid, point: np.ndarray):
    """Interpolant value, gradient and Hessian at one point."""
    n = grid.n
    k = np.fft.fftfreq(grid.N, 1.0 / grid.N)
    ik = 2j * np.pi * k / grid.L
    base = _phase_vectors(grid, point)
    scale = 1.0 / grid.volume

    def with_orders(orders):
        vecs = [b * ik ** o if o else b for b, o in zip(base, orders)]
        return _contract(full, vecs).real * scale

    val = with_orders([0] * n)
    grad = np.empty(n)
    hess = np.empty((n, n))
    for a in range(n):
        o = [0] * n
        o[a] = 1
        grad[a] = with_orders(o)
        for b in range(a, n):
            o2 = [0] * n
            o2[a] += 1
            o2[b] += 1
            hess[a, b] = hess[b, a] = with_orders(o2)
    return val, grad, hess


def refine_extremum(full: np.ndarray, grid: Grid, start: np.ndarray, start_value: float,
                    sign: float = 1.0, iters: int = 8) -> tuple[float, np.ndarray]:
    """Newton polish of a grid maximum (``sign=1``) or minimum (``sign=-1``).

    Steps are clipped to one cell and only improving moves are accepted, so
    the result is never worse than ``start_value``.
    """
    x = np.asarray(start, dtype=float).copy()
    best = sign * start_value
    for _ in range(iters):
        val, g, h = value_grad_hess(full, grid, x)
        val, g, h = sign * val, sign * g, sign * h
        if val > best:
            best = val
        try:
            step = -np.linalg.solve(h, g)
        except np.linalg.LinAlgError:
            break
        if not np.all(np.isfinite(step)):
            break
        step = np.clip(step, -grid.dx, grid.dx)
        trial = x + step
        tv = sign * value_grad_hess(full, grid, trial)[0]
        if tv <= best:
            break
        x, best = trial, tv
        if np.max(np.abs(step)) < 1e-13 * grid.L:
            break
    return sign * best, x
