"""Periodic velocity grids and the discrete Fourier pair.

Velocity space is truncated to the box ``[-L, L)^dim`` with ``N`` samples per
axis.  Sample ``j`` on an axis sits at ``v_j = -L + j*h`` with ``h = 2L/N``.

Spectral coefficients follow one fixed convention: the coefficient stored for
the integer wavenumber vector ``k`` multiplies ``exp(i xi_k . v)`` with
``xi_k = pi*k/L``, so that

    u(v_j) = sum_k c_k exp(i xi_k . v_j).

The forward map therefore carries the ``1/N^dim`` factor and the inverse map
is a plain synthesis.  Coefficients are stored in FFT order (the order of
``numpy.fft.fftfreq``); :attr:`GridSpec.wavenumbers` gives the integer
wavenumber of every slot.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

__all__ = [
    "GridSpec",
    "Field",
    "SpectralField",
    "make_grid",
    "to_spectral",
    "to_physical",
    "l2_norm",
    "inner_product",
    "spectral_norm",
]


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on ``[-L, L)^dim``."""

    dim: int
    half_width: float
    n_per_axis: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim!r}")
        if not np.isfinite(self.half_width) or self.half_width <= 0:
            raise ValueError(f"half_width must be positive, got {self.half_width!r}")
        n = self.n_per_axis
        if int(n) != n or n % 2 or n < 8:
            raise ValueError(f"n_per_axis must be an even integer >= 8, got {n!r}")
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "n_per_axis", int(n))

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_per_axis

    @property
    def total_points(self) -> int:
        return self.n_per_axis**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_per_axis,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def box_volume(self) -> float:
        return (2.0 * self.half_width) ** self.dim

    @cached_property
    def axis_points(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n_per_axis)

    @cached_property
    def axis_wavenumbers(self) -> np.ndarray:
        return np.fft.fftfreq(self.n_per_axis, 1.0 / self.n_per_axis).astype(np.int64)

    @cached_property
    def axis_frequencies(self) -> np.ndarray:
        return np.pi * self.axis_wavenumbers / self.half_width

    @cached_property
    def points(self) -> tuple[np.ndarray, ...]:
        """Coordinate arrays, one per axis, each of :attr:`shape`."""
        return tuple(np.meshgrid(*([self.axis_points] * self.dim), indexing="ij"))

    @cached_property
    def wavenumbers(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis_wavenumbers] * self.dim), indexing="ij"))

    @cached_property
    def speed_squared(self) -> np.ndarray:
        """``|v|^2`` at every sample."""
        v2 = np.zeros(self.shape)
        for axis in self.points:
            v2 += axis * axis
        return v2

    @cached_property
    def frequency_squared(self) -> np.ndarray:
        """``|xi_k|^2`` for every stored coefficient slot."""
        xi = self.axis_frequencies
        out = np.zeros(self.shape)
        for ax in range(self.dim):
            idx = [None] * self.dim
            idx[ax] = slice(None)
            out = out + (xi * xi)[tuple(idx)]
        return out

    @property
    def max_frequency(self) -> float:
        """Largest ``|xi_k|`` on the grid (all axes at the Nyquist slot)."""
        return np.sqrt(self.dim) * np.pi * (self.n_per_axis // 2) / self.half_width

    @property
    def max_speed(self) -> float:
        """Largest ``|v|`` on the grid, attained at the corner ``(-L, ..., -L)``."""
        return np.sqrt(self.dim) * self.half_width

    @cached_property
    def _mode_sign(self) -> np.ndarray:
        # exp(i xi_k (-L)) = (-1)^k along each axis
        sign = np.ones(self.shape)
        for k in self.wavenumbers:
            sign = sign * np.where(k % 2, -1.0, 1.0)
        return sign

    def zeros(self) -> "Field":
        return Field(self, np.zeros(self.shape, dtype=complex))

    def field(self, func) -> "Field":
        """Sample ``func(*coords)`` on the grid."""
        return Field(self, func(*self.points))


def make_grid(dim: int, half_width: float, n_per_axis: int) -> GridSpec:
    """Build the grid ``[-L, L)^dim`` with ``N`` points per axis."""
    return GridSpec(dim, half_width, n_per_axis)


def _frozen_values(grid: GridSpec, values, what: str) -> np.ndarray:
    arr = np.array(values, dtype=complex)
    if arr.size != grid.total_points:
        raise ValueError(
            f"{what} has {arr.size} entries, grid expects {grid.total_points}"
        )
    arr = arr.reshape(grid.shape)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Field:
    """Complex samples of a state on ``grid``, in lexicographic axis order.

    ``values`` may be passed flat or already shaped; it is copied and stored
    read-only with shape ``grid.shape``.
    """

    grid: GridSpec
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_values(self.grid, self.values, "Field"))

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def _check(self, other: "Field"):
        if not isinstance(other, Field):
            return NotImplemented
        if other.grid != self.grid:
            raise ValueError("fields live on different grids")
        return other

    def __add__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other):
        if self._check(other) is NotImplemented:
            return NotImplemented
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar):
        if isinstance(scalar, Field):
            self._check(scalar)
            return Field(self.grid, self.values * scalar.values)
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def __neg__(self):
        return Field(self.grid, -self.values)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a field, stored in FFT order."""

    grid: GridSpec
    coefficients: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(
            self,
            "coefficients",
            _frozen_values(self.grid, self.coefficients, "SpectralField"),
        )

    def coefficient(self, k) -> complex:
        """Coefficient of the integer wavenumber vector ``k``."""
        k = np.atleast_1d(k)
        if k.size != self.grid.dim:
            raise ValueError("wavenumber vector has wrong dimension")
        return complex(self.coefficients[tuple(int(ki) % self.grid.n_per_axis for ki in k)])


def to_spectral(u: Field) -> SpectralField:
    """Forward transform: samples -> coefficients of ``exp(i xi_k . v)``."""
    g = u.grid
    coeffs = np.fft.fftn(u.values) * (g._mode_sign / g.total_points)
    return SpectralField(g, coeffs)


def to_physical(c: SpectralField) -> Field:
    """Inverse transform: synthesis ``sum_k c_k exp(i xi_k . v)``."""
    g = c.grid
    values = np.fft.ifftn(c.coefficients * g._mode_sign) * g.total_points
    return Field(g, values)


def _same_grid(u: Field, w: Field) -> GridSpec:
    if u.grid != w.grid:
        raise ValueError("fields live on different grids")
    return u.grid


def l2_norm(u: Field) -> float:
    """Rectangle-rule ``L^2`` norm over the box."""
    vals = u.values
    return float(np.sqrt(u.grid.cell_volume * np.vdot(vals, vals).real))


def inner_product(u: Field, w: Field) -> complex:
    """``h^dim * sum u * conj(w)``; conjugate-linear in ``w``."""
    g = _same_grid(u, w)
    return complex(g.cell_volume * np.vdot(w.values, u.values))


def spectral_norm(c: SpectralField) -> float:
    """``L^2`` norm computed from coefficients (Parseval on the box)."""
    coeffs = c.coefficients
    return float(np.sqrt(c.grid.box_volume * np.vdot(coeffs, coeffs).real))
