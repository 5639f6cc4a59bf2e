"""Weighted norms and the Gevrey / Gelfand-Shilov seminorm sequences.

Conventions
-----------
``||u||_{2,m}`` is ``||<v>^m u||_{L^2}`` and ``||u||_{H^k_m}`` is
``||<D>^k (<v>^m u)||_{L^2}``: the weight is applied first.

The frequency sequence is ``a_k = ||<D>^{2 s~ k} u||`` with
``s~ = min(1/2, s)`` and the weight sequence is
``b_k = ||<v>^{(gamma/2 + s) k} u||``.  Both are evaluated in log space
(log-sum-exp over coefficients or samples), so no entry overflows.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, logsumexp

from .grid import Field, l2_norm
from .operators import OperatorParams, _bracket_values, bessel_symbol, log_bracket

__all__ = [
    "NormReport",
    "GevreyFit",
    "weighted_l2",
    "weighted_sobolev",
    "log_bessel_sequence",
    "log_weight_sequence",
    "resolved_k_max",
    "norm_report",
    "fit_gevrey",
]

_LOG_DBL_MAX = math.log(np.finfo(float).max)


def weighted_l2(u: Field, m: float) -> float:
    """``||<v>^m u||_{L^2}``."""
    if m == 0:
        return l2_norm(u)
    return l2_norm(Field(u.grid, _bracket_values(u.grid, m) * u.values))


def _coefficients(values: np.ndarray, grid) -> np.ndarray:
    # |c_k| only; the (-1)^k mode phase is irrelevant for norms
    return np.fft.fftn(values) / grid.total_points


def weighted_sobolev(u: Field, k: float, m: float) -> float:
    """``||<D>^k (<v>^m u)||_{L^2}``, via Parseval on the weighted field."""
    g = u.grid
    wu = u.values if m == 0 else _bracket_values(g, m) * u.values
    if k == 0:
        return l2_norm(Field(g, wu))
    c = _coefficients(wu, g) * bessel_symbol(g, k)
    return float(np.sqrt(g.box_volume * np.vdot(c, c).real))


def _log_abs(z: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(np.abs(z))


def log_bessel_sequence(u: Field, exponent: float, k_max: int) -> np.ndarray:
    """``ln ||<D>^{exponent*k} u||`` for ``k = 0..k_max`` (one FFT)."""
    g = u.grid
    log_c2 = (2.0 * _log_abs(_coefficients(u.values, g))).ravel()
    log_sym = np.log1p(g.frequency_squared).ravel()
    out = np.empty(k_max + 1)
    out[0] = _log_or_neg_inf(l2_norm(u))
    for k in range(1, k_max + 1):
        out[k] = 0.5 * (math.log(g.box_volume) + logsumexp(exponent * k * log_sym + log_c2))
    return out


def log_weight_sequence(u: Field, exponent: float, k_max: int) -> np.ndarray:
    """``ln ||<v>^{exponent*k} u||`` for ``k = 0..k_max``."""
    g = u.grid
    log_u2 = (2.0 * _log_abs(u.values)).ravel()
    log_w = log_bracket(g).ravel()
    out = np.empty(k_max + 1)
    out[0] = _log_or_neg_inf(l2_norm(u))
    for k in range(1, k_max + 1):
        out[k] = 0.5 * (math.log(g.cell_volume) + logsumexp(2.0 * exponent * k * log_w + log_u2))
    return out


def _log_or_neg_inf(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def resolved_k_max(u: Field, exponent: float, k_max: int, tol: float = 1e-2) -> int:
    """Largest ``K <= k_max`` whose frequency seminorms are resolved.

    Order ``k`` counts as resolved when the outer quarter of the wavenumber
    range (``|k_i| >= 3N/8`` on some axis) carries at most ``tol`` of
    ``||<D>^{exponent*k} u||^2``.  Beyond that the amplified spectral tail
    is cut by the grid and the seminorm is no longer trustworthy.
    """
    g = u.grid
    log_c2 = 2.0 * _log_abs(_coefficients(u.values, g))
    if not np.isfinite(log_c2).any():
        return k_max
    edge = np.zeros(g.shape, dtype=bool)
    for kk in g.wavenumbers:
        edge |= np.abs(kk) >= 3 * g.n_per_axis // 8
    log_sym = np.log1p(g.frequency_squared)
    for k in range(1, k_max + 1):
        weighted = exponent * k * log_sym + log_c2
        share = logsumexp(weighted[edge]) - logsumexp(weighted)
        if share > math.log(tol):
            return k - 1
    return k_max


@dataclass(frozen=True, eq=False)
class NormReport:
    """Norms of one state at time ``t``.

    ``flags`` lists ``"zero-field"`` when the state vanishes and
    ``"overflow:a"``/``"overflow:b"`` when a linear-domain seminorm exceeds
    the double range (the log entries stay finite).
    """

    t: float
    l2: float
    h_s_gamma2: float
    w_gamma2s: float
    log_a: np.ndarray = field(repr=False)
    log_b: np.ndarray = field(repr=False)
    flags: tuple = ()

    @property
    def k_max(self) -> int:
        return len(self.log_a) - 1

    @property
    def a(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_a)

    @property
    def b(self) -> np.ndarray:
        with np.errstate(over="ignore"):
            return np.exp(self.log_b)


def norm_report(u: Field, t: float, p: OperatorParams, k_max: int = 10) -> NormReport:
    if k_max < 1:
        raise ValueError("k_max must be at least 1")
    log_a = log_bessel_sequence(u, 2.0 * p.s_tilde, k_max)
    log_b = log_weight_sequence(u, p.weight_exponent, k_max)
    flags = []
    if not np.isfinite(log_a[0]):
        flags.append("zero-field")
    if np.any(log_a > _LOG_DBL_MAX):
        flags.append("overflow:a")
    if np.any(log_b > _LOG_DBL_MAX):
        flags.append("overflow:b")
    log_a.flags.writeable = False
    log_b.flags.writeable = False
    return NormReport(
        t=float(t),
        l2=l2_norm(u),
        h_s_gamma2=weighted_sobolev(u, p.s, p.gamma / 2.0),
        w_gamma2s=weighted_l2(u, p.weight_exponent),
        log_a=log_a,
        log_b=log_b,
        flags=tuple(flags),
    )


@dataclass(frozen=True, eq=False)
class GevreyFit:
    """Per-order constants of the envelope ``a_k <= C^k k! / t^k``.

    ``per_k_constant[i]`` belongs to order ``ks[i]`` (``k >= 1``).
    ``gevrey_order`` is the least-squares coefficient of ``ln k!`` in
    ``ln a_k + k ln t``; 1 is the envelope's own growth, 2 means
    ``(k!)^2``-type growth.  It is ``nan`` when fewer than four orders are
    available.
    """

    t: float
    ks: np.ndarray = field(repr=False)
    per_k_constant: np.ndarray = field(repr=False)
    fitted_C: float
    stability_ratio: float
    gevrey_order: float
    threshold: float
    order_tol: float
    verdict: str


def fit_gevrey(
    log_seq,
    t: float,
    k_max: int | None = None,
    threshold: float = 3.0,
    order_tol: float = 0.5,
) -> GevreyFit:
    """Fit the factorial envelope to ``ln a_0 .. ln a_{k_max}`` at time ``t``.

    ``C_k = (a_k t^k / k!)^{1/k}``; ``fitted_C`` is their maximum and the
    stability ratio is ``max C_k / median C_k`` over ``2 <= k <= k_max``.
    The verdict is ``"pass"`` when the ratio is within ``threshold`` and the
    fitted growth order does not exceed ``1 + order_tol``.
    """
    if not t > 0:
        raise ValueError(f"t must be positive, got {t}")
    log_seq = np.asarray(log_seq, dtype=float)
    if k_max is None:
        k_max = len(log_seq) - 1
    if k_max < 1 or k_max >= len(log_seq):
        raise ValueError(f"k_max={k_max} outside the sequence (length {len(log_seq)})")
    log_seq = log_seq[: k_max + 1]
    if not np.all(np.isfinite(log_seq)):
        raise ValueError("fit_gevrey needs finite log entries")
    ks = np.arange(1, k_max + 1)
    log_t = math.log(t)
    log_fact = gammaln(ks + 1.0)
    consts = np.exp((log_seq[1:] + ks * log_t - log_fact) / ks)
    window = consts[1:] if k_max >= 2 else consts
    ratio = float(window.max() / np.median(window))

    order = math.nan
    if k_max >= 3:
        kk = np.arange(k_max + 1, dtype=float)
        design = np.column_stack([np.ones_like(kk), kk, gammaln(kk + 1.0)])
        coef, *_ = np.linalg.lstsq(design, log_seq + kk * log_t, rcond=None)
        order = float(coef[2])

    ok = ratio <= threshold and not (order > 1.0 + order_tol)
    return GevreyFit(
        t=float(t),
        ks=ks,
        per_k_constant=consts,
        fitted_C=float(consts.max()),
        stability_ratio=ratio,
        gevrey_order=order,
        threshold=float(threshold),
        order_tol=float(order_tol),
        verdict="pass" if ok else "fail",
    )
