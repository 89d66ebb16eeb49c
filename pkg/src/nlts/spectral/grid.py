"""Periodic grids, sampled fields and the forward/inverse transform pair.

Spectra are stored in the real-FFT half layout (last axis holds
``k_last = 0..N/2``).  The full Hermitian array is available through
:meth:`SpectralField.full` and single coefficients through
:meth:`SpectralField.coeff`.

Transform normalisation: ``coeff(k) = (L/N)^n * sum_j f(x_j) exp(-2 pi i k.x_j / L)``,
the Riemann-sum approximation of ``int f(x) exp(-2 pi i x.xi) dx`` at
``xi = k / L``.  With this choice ``coeff(0)`` approximates ``int f dx`` and
Parseval reads ``sum_j |f_j|^2 (L/N)^n = sum_k |coeff(k)|^2 / L^n``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

HERMITIAN_RTOL = 1e-13


class HermitianSymmetryError(ValueError):
    """Raised when a spectrum cannot represent a real field."""


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on ``[0, L)^n`` with ``N`` samples per axis."""

    n: int
    N: int
    L: float

    def __post_init__(self):
        if self.n not in (1, 2, 3):
            raise ValueError(f"dimension n must be 1, 2 or 3, got {self.n}")
        if self.N < 4 or self.N % 2:
            raise ValueError(f"N must be even and >= 4, got {self.N}")
        if not self.L > 0:
            raise ValueError(f"box length L must be positive, got {self.L}")
        object.__setattr__(self, "L", float(self.L))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.N,) * self.n

    @property
    def spectral_shape(self) -> tuple[int, ...]:
        return (self.N,) * (self.n - 1) + (self.N // 2 + 1,)

    @property
    def dx(self) -> float:
        return self.L / self.N

    @property
    def cell_volume(self) -> float:
        return self.dx ** self.n

    @property
    def volume(self) -> float:
        return self.L ** self.n

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(range(self.n))

    def coords(self) -> list[np.ndarray]:
        """Broadcastable sample coordinates ``x_j = j L / N`` per axis."""
        x = np.arange(self.N) * self.dx
        out = []
        for ax in range(self.n):
            shape = [1] * self.n
            shape[ax] = self.N
            out.append(x.reshape(shape))
        return out

    def mesh(self) -> list[np.ndarray]:
        return [np.broadcast_to(c, self.shape) for c in self.coords()]

    def center(self) -> np.ndarray:
        return np.full(self.n, self.L / 2)

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Integer wavevector components in half layout, broadcastable."""
        ks = []
        for ax in range(self.n):
            if ax == self.n - 1:
                k = np.arange(self.N // 2 + 1, dtype=float)
            else:
                k = np.fft.fftfreq(self.N, 1.0 / self.N)
            shape = [1] * self.n
            shape[ax] = k.size
            ks.append(k.reshape(shape))
        return tuple(ks)

    @cached_property
    def odd_wavenumbers(self) -> tuple[np.ndarray, ...]:
        """Wavenumbers for odd-order multipliers: Nyquist entries set to 0.

        An odd multiplier on the self-conjugate Nyquist plane cannot produce a
        real field, so it is dropped there.
        """
        out = []
        for k in self.wavenumbers:
            k = k.copy()
            k[np.abs(k) == self.N // 2] = 0.0
            out.append(k)
        return tuple(out)

    @cached_property
    def kabs(self) -> np.ndarray:
        """``|k|`` on the half layout (integer wavevector norm)."""
        return np.sqrt(sum(k ** 2 for k in self.wavenumbers))

    @cached_property
    def kmax_inf(self) -> np.ndarray:
        """``max_j |k_j|`` on the half layout."""
        out = np.abs(self.wavenumbers[0])
        for k in self.wavenumbers[1:]:
            out = np.maximum(out, np.abs(k))
        return np.broadcast_to(out, self.spectral_shape)

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3 rule: keep modes with every ``|k_j| <= N/3``."""
        return self.kmax_inf <= self.N / 3

    @cached_property
    def half_weights(self) -> np.ndarray:
        """Multiplicity of each half-layout entry in the full spectrum."""
        w = np.full(self.spectral_shape, 2.0)
        w[..., 0] = 1.0
        w[..., self.N // 2] = 1.0
        return w

    def physical_frequency_sq(self) -> np.ndarray:
        """``(2 pi |k| / L)^2``."""
        return (2 * np.pi * self.kabs / self.L) ** 2

    def full_wavenumbers(self) -> tuple[np.ndarray, ...]:
        k = np.fft.fftfreq(self.N, 1.0 / self.N)
        return tuple(np.meshgrid(*([k] * self.n), indexing="ij"))

    def to_dict(self) -> dict:
        return {"n": self.n, "N": self.N, "L": self.L}


@dataclass(frozen=True, eq=False)
class PhysicalField:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.shape != self.grid.shape:
            if v.size != self.grid.N ** self.grid.n:
                raise ValueError(
                    f"field has {v.size} samples, grid needs {self.grid.N ** self.grid.n}"
                )
            v = v.reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise ValueError("field contains non-finite values")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @classmethod
    def zeros(cls, grid: Grid) -> "PhysicalField":
        return cls(grid, np.zeros(grid.shape))

    def __add__(self, other):
        return PhysicalField(self.grid, self.values + _vals(other))

    def __sub__(self, other):
        return PhysicalField(self.grid, self.values - _vals(other))

    def __mul__(self, c):
        return PhysicalField(self.grid, self.values * _vals(c))

    __rmul__ = __mul__

    def __neg__(self):
        return PhysicalField(self.grid, -self.values)


def _vals(x):
    return x.values if isinstance(x, PhysicalField) else x


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field, half layout.

    ``coeffs`` has shape ``grid.spectral_shape``.  Entries on the
    self-conjugate planes (``k_last = 0`` and ``k_last = N/2``) must obey
    ``coeff(-k) = conj(coeff(k))``; :func:`inverse_transform` checks this.
    """

    grid: Grid
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        if c.shape != self.grid.spectral_shape:
            raise ValueError(
                f"coefficient array has shape {c.shape}, expected {self.grid.spectral_shape}"
            )
        object.__setattr__(self, "coeffs", c)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros(grid.spectral_shape, dtype=complex))

    @classmethod
    def from_full(cls, grid: Grid, full: np.ndarray) -> "SpectralField":
        """Build from a full ``(N,)*n`` coefficient array in FFT order."""
        full = np.asarray(full, dtype=complex)
        if full.shape != grid.shape:
            raise ValueError(f"full spectrum must have shape {grid.shape}")
        hermitian_defect(full, raise_on_error=True)
        return cls(grid, full[..., : grid.N // 2 + 1].copy())

    def full(self) -> np.ndarray:
        """Full Hermitian coefficient array in FFT index order."""
        g = self.grid
        h = self.coeffs
        out = np.empty(g.shape, dtype=complex)
        out[..., : g.N // 2 + 1] = h
        # coeff(-k) = conj(coeff(k)) for the missing negative last-axis half
        mirror = np.conj(h[..., 1 : g.N // 2])
        for ax in range(g.n - 1):
            mirror = np.roll(np.flip(mirror, axis=ax), 1, axis=ax)
        out[..., g.N // 2 + 1 :] = np.flip(mirror, axis=-1)
        return out

    def coeff(self, k) -> complex:
        """Coefficient at integer wavevector ``k`` (any sign convention)."""
        g = self.grid
        k = [int(v) % g.N for v in np.atleast_1d(k)]
        if len(k) != g.n:
            raise ValueError(f"wavevector must have {g.n} components")
        last = k[-1]
        if last <= g.N // 2:
            return complex(self.coeffs[tuple(k)])
        neg = tuple((-v) % g.N for v in k)
        return complex(np.conj(self.coeffs[neg]))

    def __add__(self, other):
        return SpectralField(self.grid, self.coeffs + _coeffs(other))

    def __sub__(self, other):
        return SpectralField(self.grid, self.coeffs - _coeffs(other))

    def __mul__(self, c):
        return SpectralField(self.grid, self.coeffs * _coeffs(c))

    __rmul__ = __mul__

    def __neg__(self):
        return SpectralField(self.grid, -self.coeffs)


def _coeffs(x):
    return x.coeffs if isinstance(x, SpectralField) else x


@dataclass(frozen=True, eq=False)
class VectorField:
    """``n`` components (all physical or all spectral) on one grid."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if not comps:
            raise ValueError("vector field needs at least one component")
        kinds = {type(c) for c in comps}
        if len(kinds) != 1:
            raise ValueError("components must be all physical or all spectral")
        if any(c.grid != comps[0].grid for c in comps):
            raise ValueError("components must share one grid")
        object.__setattr__(self, "components", comps)

    @property
    def grid(self) -> Grid:
        return self.components[0].grid

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)


def hermitian_defect(full: np.ndarray, raise_on_error: bool = False) -> float:
    """Relative size of the anti-Hermitian part of a full spectrum."""
    mirrored = np.conj(full)
    for ax in range(full.ndim):
        mirrored = np.roll(np.flip(mirrored, axis=ax), 1, axis=ax)
    scale = np.linalg.norm(full)
    defect = np.linalg.norm(full - mirrored) / scale if scale > 0 else 0.0
    if raise_on_error and defect > HERMITIAN_RTOL:
        raise HermitianSymmetryError(
            f"spectrum violates coeff(-k) = conj(coeff(k)): relative defect {defect:.3e}"
        )
    return float(defect)


def _half_plane_defect(F: SpectralField) -> float:
    """Hermitian defect restricted to the self-conjugate planes of the half layout."""
    g = F.grid
    worst = 0.0
    scale = np.linalg.norm(F.coeffs)
    if scale == 0:
        return 0.0
    for col in (0, g.N // 2):
        plane = F.coeffs[..., col]
        mirrored = np.conj(plane)
        for ax in range(g.n - 1):
            mirrored = np.roll(np.flip(mirrored, axis=ax), 1, axis=ax)
        worst = max(worst, float(np.linalg.norm(plane - mirrored)) / scale)
    return worst


def forward_transform(f: PhysicalField) -> SpectralField:
    g = f.grid
    return SpectralField(g, np.fft.rfftn(f.values, axes=g.axes) * g.cell_volume)


def inverse_transform(F: SpectralField, check: bool = True) -> PhysicalField:
    """Inverse of :func:`forward_transform`.

    With ``check`` the self-conjugate planes are tested; a non-Hermitian
    spectrum raises :class:`HermitianSymmetryError`.
    """
    g = F.grid
    if check:
        defect = _half_plane_defect(F)
        if defect > HERMITIAN_RTOL:
            raise HermitianSymmetryError(
                f"spectrum violates coeff(-k) = conj(coeff(k)): relative defect {defect:.3e}"
            )
    vals = np.fft.irfftn(F.coeffs, s=g.shape, axes=g.axes) / g.cell_volume
    return PhysicalField(g, vals)


# array-level fast paths used inside the time stepper
def rfft(values: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.rfftn(values, axes=grid.axes) * grid.cell_volume


def irfft(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.irfftn(coeffs, s=grid.shape, axes=grid.axes) / grid.cell_volume
