"""Numerical checks of the commutator, interpolation, energy and
smoothing/decay estimates.

Each estimate asserts that some constant exists.  A check evaluates the
ratio that constant must dominate over a finite family of states (or the
samples of a trajectory), reports the largest value as the fitted constant,
and judges *stability*: the spread of the ratios (max / min for families,
the Gevrey fit's stability ratio for trajectories) must stay under a
threshold.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .grid import Field, GridSpec, l2_norm
from .norms import (
    fit_gevrey,
    log_bessel_sequence,
    log_weight_sequence,
    resolved_k_max,
    weighted_l2,
    weighted_sobolev,
)
from .operators import OperatorParams, _bracket_values, bessel_power, commutator_bessel_weight
from .solver import SourceSpec, Trajectory, energy_identity_residuals

__all__ = [
    "CheckResult",
    "TestFamily",
    "build_family",
    "edge_share",
    "check_commutator",
    "check_interpolation_eps",
    "check_interpolation_product",
    "check_energy",
    "check_gevrey_frequency",
    "check_gevrey_weight",
]

LEMMA_SPREAD = 100.0
GEVREY_RATIO = 3.0
T_MIN = 0.05
# a family member whose outer-quarter spectrum holds more than this share of
# its energy makes the verdict low-confidence
RESOLUTION_SHARE = 1e-6


@dataclass(frozen=True, eq=False)
class CheckResult:
    name: str
    fitted_constant: float
    stability_ratio: float
    verdict: str
    threshold: float
    details: list = field(default_factory=list, repr=False)
    confidence: str = "normal"
    extra: dict = field(default_factory=dict)
    notes: tuple = ()

    @property
    def passed(self) -> bool:
        return self.verdict in ("pass", "vacuous-pass")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "fitted_constant": self.fitted_constant,
            "stability_ratio": self.stability_ratio,
            "verdict": self.verdict,
            "threshold": self.threshold,
            "confidence": self.confidence,
            "extra": dict(self.extra),
            "notes": list(self.notes),
            "details": list(self.details),
        }


@dataclass(frozen=True, eq=False)
class TestFamily:
    """Named nonzero test states on one grid."""

    __test__ = False  # not a pytest class

    grid: GridSpec
    members: tuple

    def __iter__(self):
        return iter(self.members)

    def __len__(self):
        return len(self.members)


def build_family(grid: GridSpec, seeds=(0, 1, 2)) -> TestFamily:
    """Dilated Gaussians, a translated Gaussian, and seeded band-limited fields.

    Band-limited members have standard complex normal coefficients on
    ``|k_i| <= N/8`` for every axis and exactly zero coefficients elsewhere.
    """
    members = []
    for sigma in (0.5, 1.0, 2.0, 4.0):
        members.append((f"gauss-sigma{sigma:g}", Field(grid, np.exp(-grid.speed_squared / (2 * sigma**2)))))
    for shift in (0.0, grid.half_width / 4):
        v2 = grid.speed_squared - grid.points[0] ** 2 + (grid.points[0] - shift) ** 2
        members.append((f"gauss-shift{shift:g}", Field(grid, np.exp(-v2 / 2))))
    band = grid.n_per_axis // 8
    inside = np.ones(grid.shape, dtype=bool)
    for kk in grid.wavenumbers:
        inside &= np.abs(kk) <= band
    for seed in seeds:
        rng = np.random.default_rng(seed)
        c = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
        c[~inside] = 0.0
        members.append((f"band-seed{seed}", Field(grid, np.fft.ifftn(c) * grid.total_points)))
    return TestFamily(grid, tuple(members))


def edge_share(u: Field) -> float:
    """Share of ``||u||^2`` carried by the outer quarter of the wavenumbers."""
    g = u.grid
    c2 = np.abs(np.fft.fftn(u.values)) ** 2
    total = c2.sum()
    if total == 0:
        return 0.0
    edge = np.zeros(g.shape, dtype=bool)
    for kk in g.wavenumbers:
        edge |= np.abs(kk) >= 3 * g.n_per_axis // 8
    return float(c2[edge].sum() / total)


def _family_confidence(family: TestFamily) -> str:
    return "low" if any(edge_share(u) > RESOLUTION_SHARE for _, u in family) else "normal"


def _ratio_check(name, family, ratios, threshold, extra=None, notes=()):
    ratios = np.asarray(ratios, dtype=float)
    details = [{"member": n, "ratio": float(r)} for (n, _), r in zip(family, ratios)]
    conf = _family_confidence(family)
    if not np.all(np.isfinite(ratios)):
        return CheckResult(name, math.inf, math.inf, "fail", threshold, details, conf, extra or {}, notes)
    top = float(ratios.max())
    if top == 0:
        return CheckResult(name, 0.0, 1.0, "pass", threshold, details, conf, extra or {}, notes)
    low = float(ratios.min())
    spread = top / low if low > 0 else math.inf
    verdict = "pass" if spread <= threshold else "fail"
    return CheckResult(name, top, spread, verdict, threshold, details, conf, extra or {}, notes)


def check_commutator(family: TestFamily, r: float, m: float, threshold: float = LEMMA_SPREAD) -> CheckResult:
    """Ratio ``||[<D>^r, <v>^m] u|| / ||u||_{H^{r-1}_m}`` over the family.

    For ``r <= 1`` the denominator is ``||u||_{2,m}``, the form used for
    ``r = 2s`` with ``s <= 1/2``; for ``r > 1`` it is ``||u||_{H^{r-1}_m}``.
    """
    if not r > 0:
        raise ValueError("commutator check needs r > 0")
    ratios = []
    for name, u in family:
        num = l2_norm(commutator_bessel_weight(u, r, m))
        den = weighted_l2(u, m) if r <= 1 else weighted_sobolev(u, r - 1.0, m)
        if den == 0:
            raise ValueError(f"member {name} has a zero denominator")
        ratios.append(num / den)
    denom = "||u||_{2,m}" if r <= 1 else "||u||_{H^{r-1}_m}"
    return _ratio_check(
        f"commutator(r={r:g},m={m:g})", family, ratios, threshold,
        extra={"r": r, "m": m, "denominator": denom},
    )


def check_interpolation_eps(family: TestFamily, k: float, l: float, delta: float, eps_list=(0.5, 0.1, 0.01)) -> CheckResult:
    """``C_eps = max (||u||_{H^k_l} - eps ||u||_{H^{k+delta}_l})_+ / ||u||``.

    Passes when every ``C_eps`` is finite; no monotonicity in ``eps`` is
    required.  ``fitted_constant`` is the largest ``C_eps``.
    """
    if not (k > 0 and l > 0 and delta > 0):
        raise ValueError("need k, l, delta > 0")
    norms = []
    for name, u in family:
        l2 = l2_norm(u)
        if l2 == 0:
            raise ValueError(f"member {name} is zero")
        norms.append((weighted_sobolev(u, k, l), weighted_sobolev(u, k + delta, l), l2))
    details, consts = [], {}
    for eps in eps_list:
        vals = [max(a - eps * b, 0.0) / c for a, b, c in norms]
        consts[eps] = max(vals)
        details.append({"eps": eps, "C_eps": consts[eps]})
    finite = all(math.isfinite(c) for c in consts.values())
    return CheckResult(
        f"interpolation-eps(k={k:g},l={l:g},delta={delta:g})",
        fitted_constant=max(consts.values()),
        stability_ratio=1.0,
        verdict="pass" if finite else "fail",
        threshold=math.inf,
        details=details,
        confidence=_family_confidence(family),
        extra={"k": k, "l": l, "delta": delta, "C_eps": {str(e): c for e, c in consts.items()}},
    )


def check_interpolation_product(family: TestFamily, k: float, l: float, delta: float, threshold: float = LEMMA_SPREAD) -> CheckResult:
    """``||u||^2_{H^k_l} / (||u||_{H^{k+delta}_{2l}} ||u||_{H^{k-delta}})`` over the family."""
    if not delta > 0:
        raise ValueError("need delta > 0")
    ratios = []
    for name, u in family:
        den = weighted_sobolev(u, k + delta, 2 * l) * weighted_sobolev(u, k - delta, 0.0)
        if den == 0:
            raise ValueError(f"member {name} has a zero denominator")
        ratios.append(weighted_sobolev(u, k, l) ** 2 / den)
    return _ratio_check(
        f"interpolation-product(k={k:g},l={l:g},delta={delta:g})", family, ratios, threshold,
        extra={"k": k, "l": l, "delta": delta},
    )


def _source_energy(source: SourceSpec | None, grid: GridSpec, t: float) -> float:
    """``int_0^t ||f||^2``, in closed form for the Gaussian source."""
    if source is None or source.is_zero:
        return 0.0
    prof = np.exp(-grid.speed_squared / (2.0 * source.width**2))
    g2 = source.amplitude**2 * grid.cell_volume * float(np.sum(prof * prof))
    lam = 2.0 * source.time_decay
    return g2 * (t if lam == 0 else -math.expm1(-lam * t) / lam)


def check_energy(traj: Trajectory, b0_bound: float | None = None) -> CheckResult:
    """Energy ``E(t) = ||u||^2 + int ||u||^2_{H^s_{gamma/2}} + int ||u||^2_{2,gamma/2+s}``.

    ``fitted_constant`` is ``B0 = max E``.  The growth rate ``c`` is the
    smallest value with ``E(t) <= exp(c t) (||u0||^2 + 2 int_0^t ||f||^2)`` at
    every sample.  With ``b0_bound`` given, ``max E`` must also stay below it.
    """
    p, g = traj.params, traj.grid
    e0 = l2_norm(traj.initial) ** 2
    details = []
    rates = []
    energies = []
    residuals = energy_identity_residuals(traj)
    for smp, dh, dw, res in zip(traj.samples, traj.dissipation_h, traj.dissipation_w, residuals):
        e = smp.report.l2**2 + dh + dw
        ref = e0 + 2.0 * _source_energy(traj.source, g, smp.t)
        if e == 0:
            rate = 0.0
        elif ref == 0:
            rate = math.inf
        else:
            rate = max(0.0, math.log(e / ref) / smp.t)
        energies.append(e)
        rates.append(rate)
        details.append({"t": smp.t, "E": e, "l2_sq": smp.report.l2**2, "dissipation_h": float(dh),
                        "dissipation_w": float(dw), "identity_residual": float(res)})
    energies = np.asarray(energies)
    finite = bool(np.all(np.isfinite(energies))) and all(math.isfinite(r) for r in rates)
    b0 = float(energies.max()) if len(energies) else 0.0
    c = max(rates) if rates else 0.0
    ok = finite and (b0_bound is None or b0 <= b0_bound)
    k_fit = float(np.nanmax(residuals / traj.dt**4)) if np.any(np.isfinite(residuals)) else math.nan
    if b0 == 0:
        verdict = "vacuous-pass"
    else:
        verdict = "pass" if ok else "fail"
    return CheckResult(
        "energy",
        fitted_constant=b0,
        stability_ratio=1.0,
        verdict=verdict,
        threshold=math.inf if b0_bound is None else b0_bound,
        details=details,
        extra={"growth_rate": c, "identity_K": k_fit, "dt": traj.dt, "gamma": p.gamma, "s": p.s},
    )


def _require_open_s(p: OperatorParams):
    if not 0 < p.s < 1:
        raise ValueError(f"smoothing checks need 0 < s < 1 (got s = {p.s:g})")


def _trapezoid(t, y):
    t = np.asarray(t, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(t) < 2:
        return 0.0
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(t)))


def _aggregate_constant(traj, k_max, scaled):
    """``B_k = (sqrt(Q_k) / k!)^{1/(k+1)}`` with
    ``Q_k = sup_t ||t^k X^k u||^2 + int ||t^k X^k u||^2_{H^s_{gamma/2}} + int ||t^k X^k u||^2_{2,gamma/2+s}``
    where ``scaled(u, k)`` returns ``X^k u``.  Integrals run over the sample
    grid, so the region before the first sample is missing and the constant
    is a lower bound."""
    p = traj.params
    ts = traj.times
    consts = []
    for k in range(k_max + 1):
        sup_part, h_part, w_part = [], [], []
        for smp in traj.samples:
            xu = scaled(smp.state, k)
            tk = smp.t**k
            sup_part.append((tk * l2_norm(xu)) ** 2)
            h_part.append((tk * weighted_sobolev(xu, p.s, p.gamma / 2.0)) ** 2)
            w_part.append((tk * weighted_l2(xu, p.weight_exponent)) ** 2)
        q = max(sup_part) + _trapezoid(ts, h_part) + _trapezoid(ts, w_part)
        if q == 0:
            consts.append(0.0)
            continue
        consts.append(math.exp((0.5 * math.log(q) - gammaln(k + 1.0)) / (k + 1)))
    return float(max(consts)), consts


def _gevrey_check(name, traj, sequences, k_max, t_min, threshold, extra, ceiling=None):
    details = []
    fits = []
    zero = True
    truncated = False
    for smp in traj.samples:
        # snapped sample times may sit one rounding step below t_min
        if smp.t < t_min * (1.0 - 1e-12):
            continue
        logs, k_eff = sequences(smp.state)
        row = {"t": smp.t, "k_max": k_eff}
        if not np.isfinite(logs[0]):
            row["verdict"] = "zero-field"
            details.append(row)
            continue
        zero = False
        if ceiling is not None:
            ceil = ceiling(smp.state, k_eff)
            margin = ceil[1:] - logs[1 : k_eff + 1]
            row["ceiling_margin"] = float(margin.min())
            if np.any(margin <= math.log(2.0)):
                truncated = True
        if k_eff < 1:
            row["verdict"] = "unresolved"
            details.append(row)
            continue
        fit = fit_gevrey(logs, smp.t, k_eff, threshold)
        fits.append(fit)
        row.update(fitted_C=fit.fitted_C, stability_ratio=fit.stability_ratio,
                   gevrey_order=fit.gevrey_order, verdict=fit.verdict,
                   per_k_constant=[float(c) for c in fit.per_k_constant])
        details.append(row)
    if zero:
        return CheckResult(name, 0.0, 1.0, "vacuous-pass", threshold, details, extra=extra,
                           notes=("all samples are the zero field",))
    if not fits:
        return CheckResult(name, math.nan, math.nan, "fail", threshold, details, extra=extra,
                           notes=("no resolved sample at or after t_min",))
    fitted = max(f.fitted_C for f in fits)
    ratio = max(f.stability_ratio for f in fits)
    if truncated:
        verdict = "truncation-limited"
    else:
        verdict = "pass" if all(f.verdict == "pass" for f in fits) else "fail"
    return CheckResult(name, fitted, ratio, verdict, threshold, details, extra=extra)


def check_gevrey_frequency(
    traj: Trajectory,
    k_max: int = 10,
    t_min: float = T_MIN,
    threshold: float = GEVREY_RATIO,
    exponent: float | None = None,
    resolution_tol: float = 1e-2,
) -> CheckResult:
    """Smoothing envelope ``||<D>^{2 s~ k} u(t)|| <= C^k k! / t^k``.

    Each sample with ``t >= t_min`` is fitted with :func:`fit_gevrey` after
    the resolution guard has capped ``k``; the verdict passes when every
    fitted sample passes.  ``extra["B1"]`` is the fitted constant of the
    aggregate bound (sup norm plus the two dissipation integrals of
    ``(t <D>^{2 s~})^k u``).  ``exponent`` overrides ``2 s~``.
    """
    p = traj.params
    _require_open_s(p)
    expo = 2.0 * p.s_tilde if exponent is None else float(exponent)

    def sequences(u):
        return log_bessel_sequence(u, expo, k_max), resolved_k_max(u, expo, k_max, resolution_tol)

    b1, b1_k = _aggregate_constant(traj, k_max, lambda u, k: bessel_power(u, expo * k))
    extra = {"exponent": expo, "k_max": k_max, "t_min": t_min, "B1": b1, "B1_per_k": b1_k}
    return _gevrey_check("gevrey-frequency", traj, sequences, k_max, t_min, threshold, extra)


def check_gevrey_weight(
    traj: Trajectory,
    k_max: int = 8,
    t_min: float = T_MIN,
    threshold: float = GEVREY_RATIO,
) -> CheckResult:
    """Decay envelope ``||<v>^{(gamma/2+s) k} u(t)|| <= C^k k! / t^k``.

    A sample whose ``b_k`` comes within a factor 2 of the box ceiling
    ``<L sqrt(dim)>^{(gamma/2+s) k} ||u||`` makes the verdict
    ``"truncation-limited"``.
    """
    p = traj.params
    _require_open_s(p)
    if traj.source is not None and traj.source.kind not in ("zero", "gaussian"):
        raise ValueError("weight check needs a source with all exponential moments")
    sigma = p.weight_exponent
    log_corner = 0.5 * math.log1p(traj.grid.max_speed**2)

    def sequences(u):
        return log_weight_sequence(u, sigma, k_max), k_max

    def ceiling(u, k_eff):
        return sigma * np.arange(k_eff + 1) * log_corner + math.log(l2_norm(u))

    def scaled(u, k):
        return Field(u.grid, _bracket_values(u.grid, sigma * k) * u.values)

    b2, b2_k = _aggregate_constant(traj, k_max, scaled)
    extra = {"exponent": sigma, "k_max": k_max, "t_min": t_min, "B2": b2, "B2_per_k": b2_k}
    return _gevrey_check("gevrey-weight", traj, sequences, k_max, t_min, threshold, extra, ceiling)
