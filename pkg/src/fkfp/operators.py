"""Fourier multipliers, velocity weights and the KFP generator.

The generator is

    A u = <v>^gamma ((1 - Delta)^s u + <v>^{2s} u),

with ``<v> = (1 + |v|^2)^{1/2}``.  ``(1 - Delta)^{r/2}`` (written ``<D>^r``)
acts as the Fourier multiplier ``(1 + |xi|^2)^{r/2}``; weights act by
pointwise multiplication.  No dealiasing is applied to weight products.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import kernels
from .grid import Field, GridSpec

__all__ = [
    "OperatorParams",
    "KFPOperator",
    "bracket_weight",
    "log_bracket",
    "bessel_symbol",
    "bessel_power",
    "apply_kfp",
    "commutator_bessel_weight",
    "symbol_bound",
    "kfp_operator",
    "dense_matrix",
]

# |m * ln<v>| above this switches weight evaluation to log space
LOG_SPACE_THRESHOLD = 600.0


@dataclass(frozen=True)
class OperatorParams:
    """Exponents ``(gamma, s)`` of the generator, with ``gamma + 2s > 0``."""

    gamma: float
    s: float

    def __post_init__(self):
        g, s = float(self.gamma), float(self.s)
        if not (math.isfinite(g) and math.isfinite(s)):
            raise ValueError("gamma and s must be finite")
        if not 0.0 < s <= 1.0:
            raise ValueError(f"s must lie in (0, 1], got {s}")
        if g + 2.0 * s <= 0.0:
            raise ValueError(f"gamma + 2s must be positive, got {g + 2.0 * s:g}")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "s", s)

    @property
    def s_tilde(self) -> float:
        return min(0.5, self.s)

    @property
    def weight_exponent(self) -> float:
        """``gamma/2 + s``, the exponent of the decay weight."""
        return self.gamma / 2.0 + self.s


def log_bracket(grid: GridSpec) -> np.ndarray:
    """``ln <v>`` on the grid."""
    return 0.5 * np.log1p(grid.speed_squared)


def _bracket_values(grid: GridSpec, m: float) -> np.ndarray:
    if m == 0:
        return np.ones(grid.shape)
    if abs(m) * 0.5 * math.log1p(grid.max_speed**2) > LOG_SPACE_THRESHOLD:
        return np.exp(m * log_bracket(grid))
    return np.power(1.0 + grid.speed_squared, 0.5 * m)


def bracket_weight(grid: GridSpec, m: float) -> Field:
    """Samples of ``<v>^m = (1 + |v|^2)^{m/2}``."""
    return Field(grid, _bracket_values(grid, m))


def bessel_symbol(grid: GridSpec, r: float) -> np.ndarray:
    """Symbol ``(1 + |xi_k|^2)^{r/2}`` in FFT order."""
    if r == 0:
        return np.ones(grid.shape)
    return np.power(1.0 + grid.frequency_squared, 0.5 * r)


def _multiply_spectral(values: np.ndarray, symbol: np.ndarray) -> np.ndarray:
    z = np.fft.fftn(values)
    kernels.scale(z, symbol)
    return np.fft.ifftn(z)


def bessel_power(u: Field, r: float) -> Field:
    """Apply ``<D>^r = (1 - Delta)^{r/2}``; negative ``r`` smooths."""
    if r == 0:
        return u
    return Field(u.grid, _multiply_spectral(u.values, bessel_symbol(u.grid, r)))


class KFPOperator:
    """Precomputed weights and symbols of ``A`` for one grid and parameter set.

    Works on raw ``complex128`` arrays of shape ``grid.shape``; this is the
    path the time steppers use.
    """

    def __init__(self, grid: GridSpec, params: OperatorParams):
        self.grid = grid
        self.params = params
        self.wg = np.ascontiguousarray(_bracket_values(grid, params.gamma))
        self.w2s = np.ascontiguousarray(_bracket_values(grid, 2.0 * params.s))
        self.symbol = np.ascontiguousarray(bessel_symbol(grid, 2.0 * params.s))
        for arr in (self.wg, self.w2s, self.symbol):
            arr.flags.writeable = False

    def apply(self, values: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        bu = _multiply_spectral(values, self.symbol)
        if out is None:
            out = np.empty_like(bu)
        kernels.kfp_apply(out, bu, values, self.wg, self.w2s)
        return out

    def rhs(self, values: np.ndarray, source: np.ndarray | None, out: np.ndarray) -> np.ndarray:
        """``out = source - A values``."""
        bu = _multiply_spectral(values, self.symbol)
        kernels.kfp_rhs(out, bu, values, self.wg, self.w2s, source)
        return out


@lru_cache(maxsize=32)
def kfp_operator(grid: GridSpec, params: OperatorParams) -> KFPOperator:
    return KFPOperator(grid, params)


def apply_kfp(u: Field, p: OperatorParams) -> Field:
    """``A u = <v>^gamma ((1 - Delta)^s u + <v>^{2s} u)``."""
    return Field(u.grid, kfp_operator(u.grid, p).apply(np.ascontiguousarray(u.values)))


def commutator_bessel_weight(u: Field, r: float, m: float) -> Field:
    """``[(1 - Delta)^{r/2}, <v>^m] u``, evaluated exactly on the grid."""
    if r == 0 or m == 0:
        return u.grid.zeros()
    w = _bracket_values(u.grid, m)
    sym = bessel_symbol(u.grid, r)
    left = _multiply_spectral(w * u.values, sym)
    right = w * _multiply_spectral(u.values, sym)
    return Field(u.grid, left - right)


def symbol_bound(p: OperatorParams, grid: GridSpec) -> float:
    """Upper bound ``Lambda`` on the discrete operator norm of ``A``.

    ``max <v>^gamma * ((1 + |xi_max|^2)^s + max <v>^{2s})``; the weight
    ``<v>^gamma`` peaks at the corner for ``gamma >= 0`` and at ``v = 0``
    (value 1) otherwise.
    """
    corner = math.sqrt(1.0 + grid.max_speed**2)
    wg_max = corner**p.gamma if p.gamma >= 0 else 1.0
    return wg_max * ((1.0 + grid.max_frequency**2) ** p.s + corner ** (2.0 * p.s))


def dense_matrix(linear_map, grid: GridSpec) -> np.ndarray:
    """Assemble the matrix of a linear ``Field -> Field`` map from unit impulses."""
    n = grid.total_points
    if n > 4096:
        raise ValueError(f"dense assembly refused for {n} > 4096 points")
    mat = np.empty((n, n), dtype=complex)
    e = np.zeros(n, dtype=complex)
    for j in range(n):
        e[j] = 1.0
        mat[:, j] = linear_map(Field(grid, e)).flat()
        e[j] = 0.0
    return mat
