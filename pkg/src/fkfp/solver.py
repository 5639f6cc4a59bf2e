"""Time integration of ``du/dt = -A u + f(t)``.

Two integrators share one uniform time grid: explicit classical RK4 and
backward Euler with a preconditioned GMRES solve.  ``dense_oracle`` builds
``A`` densely on small grids and evaluates ``exp(-tA) u0`` independently of
the spectral path.

The step is uniform: ``dt = t_end / n_steps``.  Requested sample times are
snapped to the nearest step; reports carry the snapped times.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from . import kernels
from .grid import Field, GridSpec, l2_norm
from .norms import NormReport, norm_report
from .operators import (
    OperatorParams,
    _bracket_values,
    _multiply_spectral,
    apply_kfp,
    bessel_power,
    bessel_symbol,
    dense_matrix,
    kfp_operator,
    symbol_bound,
)

__all__ = [
    "SourceSpec",
    "InitialDataSpec",
    "SolverConfig",
    "Sample",
    "Trajectory",
    "SolverError",
    "KrylovError",
    "stability_dt",
    "step_rk4",
    "step_backward_euler",
    "evolve",
    "dense_oracle",
    "energy_identity_residuals",
    "boundary_magnitude",
]

log = logging.getLogger(__name__)

RK4_STABILITY_NUMBER = 2.5


class SolverError(RuntimeError):
    """Integration aborted; ``step`` is the index of the failing step."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class KrylovError(SolverError):
    """GMRES did not reach the tolerance; carries the final relative residual."""

    def __init__(self, message, residual, iterations, step=None):
        super().__init__(message, step)
        self.residual = residual
        self.iterations = iterations


@dataclass(frozen=True)
class SourceSpec:
    """``f(t, v) = amplitude * exp(-time_decay t) * exp(-|v|^2 / (2 width^2))``.

    Both kinds satisfy the analyticity and exponential-moment hypotheses
    required by the smoothing and decay checks.
    """

    kind: str = "zero"
    amplitude: float = 0.0
    width: float = 1.0
    time_decay: float = 0.0

    def __post_init__(self):
        if self.kind not in ("zero", "gaussian"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if not self.width > 0:
            raise ValueError("source width must be positive")
        if self.time_decay < 0:
            raise ValueError("source time_decay must be nonnegative")

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero" or self.amplitude == 0

    def values(self, grid: GridSpec, t: float) -> np.ndarray | None:
        """Samples at time ``t``, or ``None`` for the zero source."""
        if self.is_zero:
            return None
        prof = np.exp(-grid.speed_squared / (2.0 * self.width**2))
        return (self.amplitude * math.exp(-self.time_decay * t) * prof).astype(complex)

    def field(self, grid: GridSpec, t: float) -> Field:
        vals = self.values(grid, t)
        return grid.zeros() if vals is None else Field(grid, vals)


@dataclass(frozen=True)
class InitialDataSpec:
    """Initial state.

    ``gaussian`` is ``exp(-|v|^2 / (2 width^2))``.  ``rough_random`` has
    spectral magnitudes ``(1 + |xi_k|^2)^{-(dim/2 + epsilon)/4}`` with
    independent uniform phases, made Hermitian so the field is real, then
    normalised to unit ``L^2`` norm.
    """

    kind: str = "gaussian"
    epsilon: float = 1.0
    seed: int = 0
    width: float = 1.0

    def __post_init__(self):
        if self.kind not in ("zero", "gaussian", "rough_random"):
            raise ValueError(f"unknown initial data kind {self.kind!r}")
        if self.kind == "rough_random" and not self.epsilon > 0:
            raise ValueError("rough_random needs epsilon > 0")
        if not self.width > 0:
            raise ValueError("width must be positive")

    def build(self, grid: GridSpec) -> Field:
        if self.kind == "zero":
            return grid.zeros()
        if self.kind == "gaussian":
            return Field(grid, np.exp(-grid.speed_squared / (2.0 * self.width**2)))
        return _rough_random(grid, self.epsilon, self.seed)


def _conjugate_index(grid: GridSpec) -> np.ndarray:
    """Flat slot of ``-k`` for every slot ``k``."""
    idx = np.arange(grid.total_points).reshape(grid.shape)
    neg = np.roll(np.flip(idx), 1, axis=tuple(range(grid.dim)))
    return neg.ravel()


def _rough_random(grid: GridSpec, epsilon: float, seed: int) -> Field:
    from .grid import SpectralField, to_physical

    rng = np.random.default_rng(seed)
    mag = (1.0 + grid.frequency_squared) ** (-(grid.dim / 2.0 + epsilon) / 4.0)
    phase = rng.uniform(0.0, 2.0 * np.pi, grid.total_points)
    flip = rng.integers(0, 2, grid.total_points) * np.pi
    own = np.arange(grid.total_points)
    conj = _conjugate_index(grid)
    # one free phase per {k, -k} pair; self-conjugate slots get 0 or pi
    phase = np.where(own < conj, phase, np.where(own > conj, -phase[conj], flip))
    coeffs = mag * np.exp(1j * phase.reshape(grid.shape))
    u = to_physical(SpectralField(grid, coeffs)).values.real
    u = u / l2_norm(Field(grid, u))
    return Field(grid, u)


@dataclass(frozen=True)
class SolverConfig:
    method: str = "rk4"
    dt: float | str = "auto"
    t_end: float = 1.0
    sample_times: tuple | None = None
    n_samples: int = 32
    krylov_tol: float = 1e-10
    krylov_max_iter: int = 500

    def __post_init__(self):
        if self.method not in ("rk4", "backward_euler"):
            raise ValueError(f"unknown method {self.method!r}")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")
        if self.dt != "auto" and not (isinstance(self.dt, (int, float)) and self.dt > 0):
            raise ValueError("dt must be 'auto' or a positive number")
        if self.sample_times is not None:
            times = tuple(float(x) for x in self.sample_times)
            if not times:
                raise ValueError("sample_times must be nonempty")
            if any(b < a for a, b in zip(times, times[1:])):
                raise ValueError("sample_times must be sorted")
            if times[0] <= 0 or times[-1] > self.t_end:
                raise ValueError("sample_times must lie in (0, t_end]")
            object.__setattr__(self, "sample_times", times)
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")

    def requested_times(self) -> np.ndarray:
        if self.sample_times is not None:
            return np.asarray(self.sample_times)
        return np.geomspace(self.t_end / 64.0, self.t_end, self.n_samples)


def stability_dt(p: OperatorParams, grid: GridSpec) -> float:
    """Explicit RK4 step ``2.5 / Lambda`` (real-axis stability limit ~2.785)."""
    return RK4_STABILITY_NUMBER / symbol_bound(p, grid)


class _RK4:
    def __init__(self, grid, p, source):
        self.op = kfp_operator(grid, p)
        self.grid = grid
        self.source = source
        shape = grid.shape
        self.k = [np.empty(shape, dtype=complex) for _ in range(4)]
        self.tmp = np.empty(shape, dtype=complex)

    def step(self, u: np.ndarray, t: float, dt: float, out: np.ndarray) -> np.ndarray:
        op, k1, k2, k3, k4, tmp = self.op, *self.k, self.tmp
        f = self.source.values(self.grid, t) if self.source else None
        fh = self.source.values(self.grid, t + 0.5 * dt) if self.source else None
        f1 = self.source.values(self.grid, t + dt) if self.source else None
        op.rhs(u, f, k1)
        kernels.axpy(tmp, u, 0.5 * dt, k1)
        op.rhs(tmp, fh, k2)
        kernels.axpy(tmp, u, 0.5 * dt, k2)
        op.rhs(tmp, fh, k3)
        kernels.axpy(tmp, u, dt, k3)
        op.rhs(tmp, f1, k4)
        kernels.rk4_combine(out, u, k1, k2, k3, k4, dt / 6.0)
        return out


def step_rk4(u: Field, t: float, dt: float, p: OperatorParams, source: SourceSpec | None = None) -> Field:
    """One classical RK4 step of ``du/dt = -A u + f``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    out = np.empty(u.grid.shape, dtype=complex)
    _RK4(u.grid, p, source).step(np.ascontiguousarray(u.values), t, dt, out)
    return Field(u.grid, out)


class _BackwardEuler:
    """Solve ``(I + dt A) w = rhs`` by right-preconditioned restarted GMRES.

    The preconditioner is the Fourier-diagonal surrogate of ``I + dt A`` with
    the weights frozen at the median of ``<v>`` over the grid.
    """

    def __init__(self, grid, p, source, dt, tol, max_iter, restart=60):
        self.op = kfp_operator(grid, p)
        self.grid = grid
        self.source = source
        self.dt = dt
        self.tol = tol
        self.max_iter = max_iter
        self.restart = max(1, min(restart, max_iter))
        bref = float(np.median(np.sqrt(1.0 + grid.speed_squared)))
        surrogate = 1.0 + dt * bref**p.gamma * (
            (1.0 + grid.frequency_squared) ** p.s + bref ** (2.0 * p.s)
        )
        self.inv_symbol = np.ascontiguousarray(1.0 / surrogate)
        self.iterations = 0

    def matvec(self, x):
        return x + self.dt * self.op.apply(x)

    def precond(self, x):
        return _multiply_spectral(x, self.inv_symbol)

    def solve(self, rhs: np.ndarray, x0: np.ndarray) -> np.ndarray:
        shape = rhs.shape
        b = rhs.ravel()
        bnorm = np.linalg.norm(b)
        if bnorm == 0:
            return np.zeros(shape, dtype=complex)
        x = x0.ravel().astype(complex)
        total = 0
        rel = np.inf
        while True:
            r = b - self.matvec(x.reshape(shape)).ravel()
            rel = np.linalg.norm(r) / bnorm
            if rel < self.tol:
                self.iterations = total
                return x.reshape(shape)
            if total >= self.max_iter:
                raise KrylovError(
                    f"GMRES stalled at relative residual {rel:.3e} after {total} iterations",
                    residual=rel,
                    iterations=total,
                )
            m = min(self.restart, self.max_iter - total)
            x, used = self._cycle(x, r, bnorm, m, shape)
            total += used

    def _cycle(self, x, r, bnorm, m, shape):
        n = r.size
        beta = np.linalg.norm(r)
        V = np.zeros((m + 1, n), dtype=complex)
        H = np.zeros((m + 1, m), dtype=complex)
        cs = np.zeros(m, dtype=complex)
        sn = np.zeros(m, dtype=complex)
        g = np.zeros(m + 1, dtype=complex)
        g[0] = beta
        V[0] = r / beta
        j_used = 0
        for j in range(m):
            w = self.matvec(self.precond(V[j].reshape(shape))).ravel()
            for i in range(j + 1):
                H[i, j] = np.vdot(V[i], w)
                w = w - H[i, j] * V[i]
            H[j + 1, j] = np.linalg.norm(w)
            if H[j + 1, j] != 0:
                V[j + 1] = w / H[j + 1, j]
            for i in range(j):
                tmp = cs[i].conjugate() * H[i, j] + sn[i].conjugate() * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = tmp
            cs[j], sn[j] = _givens(H[j, j], H[j + 1, j])
            H[j, j] = cs[j].conjugate() * H[j, j] + sn[j].conjugate() * H[j + 1, j]
            H[j + 1, j] = 0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j].conjugate() * g[j]
            j_used = j + 1
            if abs(g[j + 1]) / bnorm < 0.5 * self.tol or H[j, j] == 0:
                break
        y = scipy.linalg.solve_triangular(H[:j_used, :j_used], g[:j_used])
        z = (y @ V[:j_used]).reshape(shape)
        return x + self.precond(z).ravel(), j_used


def _givens(a, b):
    if b == 0:
        return 1.0 + 0j, 0j
    if a == 0:
        return 0j, 1.0 + 0j
    r = math.hypot(abs(a), abs(b))
    return a / r, b / r


def step_backward_euler(
    u: Field,
    t: float,
    dt: float,
    p: OperatorParams,
    source: SourceSpec | None = None,
    tol: float = 1e-10,
    max_iter: int = 500,
) -> Field:
    """One backward-Euler step: solve ``(I + dt A) w = u + dt f(t + dt)``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    solver = _BackwardEuler(u.grid, p, source, dt, tol, max_iter)
    return Field(u.grid, solver.solve(_be_rhs(u.values, source, u.grid, t, dt), u.values))


def _be_rhs(values, source, grid, t, dt):
    f = source.values(grid, t + dt) if source else None
    return values.copy() if f is None else values + dt * f


def boundary_magnitude(u: Field, p: OperatorParams) -> float:
    """Largest ``|<v>^{gamma/2+s} u|`` on the cells of the face ``v_i = -L``."""
    w = _bracket_values(u.grid, p.weight_exponent) * np.abs(u.values)
    return float(max(np.take(w, 0, axis=ax).max() for ax in range(u.grid.dim)))


@dataclass(frozen=True, eq=False)
class Sample:
    t: float
    step: int
    state: Field = field(repr=False)
    report: NormReport = field(repr=False)
    boundary: float = 0.0


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States and norms at the sample times of one run.

    The ``step_*`` arrays hold one entry per time step ``n = 0..n_steps``:
    ``||u_n||^2`` and the running trapezoid integrals of
    ``||u||^2_{H^s_{gamma/2}}`` and ``||u||^2_{2, gamma/2+s}``.
    """

    grid: GridSpec
    params: OperatorParams
    source: SourceSpec | None
    method: str
    dt: float
    samples: list
    step_l2sq: np.ndarray = field(repr=False)
    step_dissipation_h: np.ndarray = field(repr=False)
    step_dissipation_w: np.ndarray = field(repr=False)
    initial: Field = field(repr=False)

    @property
    def n_steps(self) -> int:
        return len(self.step_l2sq) - 1

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def dissipation_h(self) -> np.ndarray:
        return self.step_dissipation_h[[s.step for s in self.samples]]

    @property
    def dissipation_w(self) -> np.ndarray:
        return self.step_dissipation_w[[s.step for s in self.samples]]


def _dissipation_rates(values, grid, sym_sq, wh, ww):
    """``(||u||^2_{H^s_{gamma/2}}, ||u||^2_{2,gamma/2+s})`` of raw samples."""
    c = np.fft.fftn(wh * values) / grid.total_points
    h2 = grid.box_volume * float(np.sum(sym_sq * (c.real**2 + c.imag**2)))
    w2 = grid.cell_volume * float(np.sum((ww * ww) * (values.real**2 + values.imag**2)))
    return h2, w2


def evolve(
    grid: GridSpec,
    u0,
    config: SolverConfig,
    p: OperatorParams,
    source: SourceSpec | None = None,
    k_max: int = 10,
) -> Trajectory:
    """Integrate from 0 to ``config.t_end``, reporting at the sample times.

    ``u0`` is an :class:`InitialDataSpec` or a :class:`Field`.
    """
    u_init = u0.build(grid) if isinstance(u0, InitialDataSpec) else u0
    if u_init.grid != grid:
        raise ValueError("initial field lives on a different grid")
    if source is not None and source.is_zero:
        source = None

    dt_req = stability_dt(p, grid) if config.dt == "auto" else float(config.dt)
    n_steps = max(1, math.ceil(config.t_end / dt_req - 1e-9))
    dt = config.t_end / n_steps
    want = np.clip(np.rint(config.requested_times() / dt).astype(int), 1, n_steps)
    sample_steps = sorted(set(int(n) for n in want))

    if config.method == "rk4":
        stepper = _RK4(grid, p, source)
        advance = stepper.step
    else:
        be = _BackwardEuler(grid, p, source, dt, config.krylov_tol, config.krylov_max_iter)

        def advance(u, t, dt, out):
            out[...] = be.solve(_be_rhs(u, source, grid, t, dt), u)
            return out

    wh = _bracket_values(grid, p.gamma / 2.0)
    ww = _bracket_values(grid, p.weight_exponent)
    sym_sq = bessel_symbol(grid, 2.0 * p.s)
    u = np.array(u_init.values, dtype=complex)
    nxt = np.empty_like(u)
    l2sq = np.empty(n_steps + 1)
    diss_h = np.zeros(n_steps + 1)
    diss_w = np.zeros(n_steps + 1)
    l2sq[0] = grid.cell_volume * np.vdot(u, u).real
    h_prev, w_prev = _dissipation_rates(u, grid, sym_sq, wh, ww)
    samples = []
    targets = iter(sample_steps)
    next_sample = next(targets)
    for n in range(1, n_steps + 1):
        try:
            advance(u, (n - 1) * dt, dt, nxt)
        except KrylovError as exc:
            exc.step = n
            raise
        if not np.isfinite(nxt).all():
            raise SolverError(f"non-finite state at step {n} (t = {n * dt:.6g})", step=n)
        u, nxt = nxt, u
        # a finite state can still overflow once squared; that is a blow-up too
        with np.errstate(over="ignore", invalid="ignore"):
            l2sq[n] = grid.cell_volume * np.vdot(u, u).real
            h_cur, w_cur = _dissipation_rates(u, grid, sym_sq, wh, ww)
        if not (np.isfinite(l2sq[n]) and np.isfinite(h_cur) and np.isfinite(w_cur)):
            raise SolverError(f"norms overflow at step {n} (t = {n * dt:.6g})", step=n)
        diss_h[n] = diss_h[n - 1] + 0.5 * dt * (h_prev + h_cur)
        diss_w[n] = diss_w[n - 1] + 0.5 * dt * (w_prev + w_cur)
        h_prev, w_prev = h_cur, w_cur
        if n == next_sample:
            fld = Field(grid, u)
            t = n * dt
            samples.append(
                Sample(t, n, fld, norm_report(fld, t, p, k_max), boundary_magnitude(fld, p))
            )
            next_sample = next(targets, None)
    for arr in (l2sq, diss_h, diss_w):
        arr.flags.writeable = False
    return Trajectory(
        grid=grid,
        params=p,
        source=source,
        method=config.method,
        dt=dt,
        samples=samples,
        step_l2sq=l2sq,
        step_dissipation_h=diss_h,
        step_dissipation_w=diss_w,
        initial=u_init,
    )


def _fd_weights(offsets) -> np.ndarray:
    """First-derivative weights on integer ``offsets`` (exact for degree < len)."""
    offsets = np.asarray(offsets, dtype=float)
    npts = len(offsets)
    vander = np.vander(offsets, npts, increasing=True).T
    rhs = np.zeros(npts)
    rhs[1] = 1.0
    return np.linalg.solve(vander, rhs)


def energy_identity_residuals(traj: Trajectory) -> np.ndarray:
    """``|d/dt ||u||^2 + 2 Re(Au, u) - 2 Re(f, u)|`` at every sample.

    The time derivative is a five-point difference of the per-step
    ``||u_n||^2`` record, centred where the step range allows and one-sided
    at the ends.  Returns ``nan`` where fewer than five steps exist.
    """
    out = np.full(len(traj.samples), np.nan)
    n_steps = traj.n_steps
    if n_steps < 4:
        return out
    src = traj.source
    for i, smp in enumerate(traj.samples):
        lo = min(max(smp.step - 2, 0), n_steps - 4)
        offs = np.arange(lo, lo + 5) - smp.step
        deriv = _fd_weights(offs) @ traj.step_l2sq[smp.step + offs] / traj.dt
        u = smp.state
        au = apply_kfp(u, traj.params)
        val = deriv + 2.0 * _re_inner(au, u)
        if src is not None:
            val -= 2.0 * _re_inner(src.field(u.grid, smp.t), u)
        out[i] = abs(val)
    return out


def _re_inner(a: Field, b: Field) -> float:
    return a.grid.cell_volume * float(np.vdot(b.values, a.values).real)


def dense_oracle(u0: Field, p: OperatorParams, grid: GridSpec, t: float, method: str = "expm") -> Field:
    """``exp(-t A) u0`` from a dense assembly of ``A`` (at most 4096 points).

    ``method="expm"`` uses scaling and squaring with Pade approximants;
    ``method="eig"`` diagonalises the symmetrised form
    ``<v>^{gamma/2} ((1-Delta)^s + <v>^{2s}) <v>^{gamma/2}``, which is
    similar to ``A``.
    """
    if grid.total_points > 4096:
        raise ValueError(f"dense oracle refused for {grid.total_points} > 4096 points")
    if t == 0:
        return u0
    x = u0.flat()
    if method == "expm":
        A = dense_matrix(lambda f: apply_kfp(f, p), grid)
        return Field(grid, scipy.linalg.expm(-t * A) @ x)
    if method == "eig":
        B = dense_matrix(lambda f: bessel_power(f, 2.0 * p.s), grid)
        B = 0.5 * (B + B.conj().T)
        half = _bracket_values(grid, p.gamma / 2.0).ravel()
        V = _bracket_values(grid, 2.0 * p.s).ravel()
        S = half[:, None] * (B + np.diag(V)) * half[None, :]
        lam, Q = scipy.linalg.eigh(0.5 * (S + S.conj().T))
        y = Q @ (np.exp(-t * lam) * (Q.conj().T @ (x / half)))
        return Field(grid, half * y)
    raise ValueError(f"unknown oracle method {method!r}")
