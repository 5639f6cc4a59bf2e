"""Command line entry point: ``fkfp run | verify-lemmas | sweep``.

Configuration is TOML with the sections ``grid``, ``operator``, ``solver``,
``initial``, ``source``, ``verify`` and ``output``; only ``grid`` and
``operator`` are required.  Every run writes ``report.json`` and, depending
on ``output.formats`` and ``--plot``, ``trajectory.csv`` and SVG charts.
The exit status is 0 exactly when every requested check passes.
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import json
import logging
import math
import os
import platform
import re
import sys
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import ClassVar

import numpy as np
import scipy

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__, kernels
from .grid import GridSpec
from .norms import fit_gevrey
from .operators import OperatorParams
from .solver import InitialDataSpec, KrylovError, SolverConfig, SolverError, SourceSpec, evolve
from .verify import (
    CheckResult,
    build_family,
    check_commutator,
    check_energy,
    check_gevrey_frequency,
    check_gevrey_weight,
    check_interpolation_eps,
    check_interpolation_product,
)

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "run", "verify_lemmas", "sweep", "main"]

log = logging.getLogger("fkfp")

ENV_OUTPUT_DIR = "FKFP_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "fkfp-out"
CSV_SCHEMA = 1
REPORT_SCHEMA = "fkfp-report/1"
BOUNDARY_TOL = 1e-10

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_SOLVER = 0, 1, 2, 3


class ConfigError(ValueError):
    """Invalid configuration; the message names the field and the constraint."""


# --- configuration ---------------------------------------------------------

_REQUIRED = object()


def _num(name, x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {x!r}")
    return float(x)


def _int(name, x):
    if isinstance(x, bool) or not isinstance(x, int):
        raise ConfigError(f"{name}: expected an integer, got {x!r}")
    return x


def _str(name, x):
    if not isinstance(x, str):
        raise ConfigError(f"{name}: expected a string, got {x!r}")
    return x


def _num_list(name, x):
    if not isinstance(x, list):
        raise ConfigError(f"{name}: expected a list, got {x!r}")
    return tuple(_num(f"{name}[{i}]", v) for i, v in enumerate(x))


def _str_list(name, x):
    if not isinstance(x, list):
        raise ConfigError(f"{name}: expected a list, got {x!r}")
    return tuple(_str(f"{name}[{i}]", v) for i, v in enumerate(x))


def _tuples(width):
    def conv(name, x):
        if not isinstance(x, list):
            raise ConfigError(f"{name}: expected a list of {width}-element lists")
        out = []
        for i, row in enumerate(x):
            row = _num_list(f"{name}[{i}]", row)
            if len(row) != width:
                raise ConfigError(f"{name}[{i}]: expected {width} numbers, got {len(row)}")
            out.append(row)
        return tuple(out)
    return conv


def _dt(name, x):
    if x == "auto":
        return x
    v = _num(name, x)
    if not v > 0:
        raise ConfigError(f"{name}: must be 'auto' or positive, got {x!r}")
    return v


def _samples(name, x):
    if isinstance(x, list):
        return _num_list(name, x)
    return _int(name, x)


def _opt_str(name, x):
    return None if x is None else _str(name, x)


@dataclass(frozen=True)
class GridSection:
    dim: int = 1
    L: float = _REQUIRED
    N: int = _REQUIRED
    _conv: ClassVar = {"dim": _int, "L": _num, "N": _int}


@dataclass(frozen=True)
class OperatorSection:
    gamma: float = _REQUIRED
    s: float = _REQUIRED
    _conv: ClassVar = {"gamma": _num, "s": _num}


@dataclass(frozen=True)
class SolverSection:
    method: str = "rk4"
    dt: float | str = "auto"
    t_end: float = 1.0
    samples: int | tuple = 32
    krylov_tol: float = 1e-10
    krylov_max_iter: int = 500
    _conv: ClassVar = {"method": _str, "dt": _dt, "t_end": _num, "samples": _samples,
                       "krylov_tol": _num, "krylov_max_iter": _int}


@dataclass(frozen=True)
class InitialSection:
    kind: str = "gaussian"
    epsilon: float = 1.0
    seed: int = 0
    width: float = 1.0
    _conv: ClassVar = {"kind": _str, "epsilon": _num, "seed": _int, "width": _num}


@dataclass(frozen=True)
class SourceSection:
    kind: str = "zero"
    amplitude: float = 0.0
    width: float = 1.0
    time_decay: float = 0.0
    _conv: ClassVar = {"kind": _str, "amplitude": _num, "width": _num, "time_decay": _num}


CHECKS = ("energy", "gevrey_frequency", "gevrey_weight")


@dataclass(frozen=True)
class VerifySection:
    checks: tuple = CHECKS
    k_max: int = 10
    k_max_weight: int = 8
    t_min: float = 0.05
    gevrey_threshold: float = 3.0
    lemma_threshold: float = 100.0
    commutator: tuple = ((0.6, 2.0), (1.5, 2.0), (1.0, -1.0))
    interpolation: tuple = ((1.0, 1.0, 0.5), (0.5, 1.0, 0.25), (2.0, 2.0, 1.0))
    epsilons: tuple = (0.5, 0.1, 0.01)
    _conv: ClassVar = {"checks": _str_list, "k_max": _int, "k_max_weight": _int, "t_min": _num,
                       "gevrey_threshold": _num, "lemma_threshold": _num,
                       "commutator": _tuples(2), "interpolation": _tuples(3), "epsilons": _num_list}


@dataclass(frozen=True)
class OutputSection:
    directory: str | None = None
    formats: tuple = ("csv", "json")
    _conv: ClassVar = {"directory": _opt_str, "formats": _str_list}


_SECTIONS = {
    "grid": GridSection,
    "operator": OperatorSection,
    "solver": SolverSection,
    "initial": InitialSection,
    "source": SourceSection,
    "verify": VerifySection,
    "output": OutputSection,
}


@dataclass(frozen=True)
class RunConfig:
    grid: GridSection
    operator: OperatorSection
    solver: SolverSection = SolverSection()
    initial: InitialSection = InitialSection()
    source: SourceSection = SourceSection()
    verify: VerifySection = VerifySection()
    output: OutputSection = OutputSection()

    def to_dict(self) -> dict:
        return _plain(dataclasses.asdict(self))

    def replace(self, section: str, **changes) -> "RunConfig":
        new = dataclasses.replace(getattr(self, section), **changes)
        cfg = dataclasses.replace(self, **{section: new})
        _validate(cfg)
        return cfg

    # domain objects
    def grid_spec(self) -> GridSpec:
        g = self.grid
        return GridSpec(dim=g.dim, half_width=g.L, n_per_axis=g.N)

    def params(self) -> OperatorParams:
        return OperatorParams(self.operator.gamma, self.operator.s)

    def solver_config(self) -> SolverConfig:
        s = self.solver
        times = s.samples if isinstance(s.samples, tuple) else None
        n = s.samples if isinstance(s.samples, int) else 32
        return SolverConfig(method=s.method, dt=s.dt, t_end=s.t_end, sample_times=times, n_samples=n,
                            krylov_tol=s.krylov_tol, krylov_max_iter=s.krylov_max_iter)

    def initial_spec(self) -> InitialDataSpec:
        i = self.initial
        return InitialDataSpec(kind=i.kind, epsilon=i.epsilon, seed=i.seed, width=i.width)

    def source_spec(self) -> SourceSpec:
        s = self.source
        return SourceSpec(kind=s.kind, amplitude=s.amplitude, width=s.width, time_decay=s.time_decay)


def _plain(x):
    if isinstance(x, dict):
        return {k: _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    return x


def _section(name, cls, table) -> object:
    if not isinstance(table, dict):
        raise ConfigError(f"[{name}]: expected a table")
    conv = cls._conv
    unknown = sorted(set(table) - set(conv))
    if unknown:
        raise ConfigError(f"[{name}]: unknown key(s) {', '.join(unknown)}; allowed: {', '.join(conv)}")
    values = {}
    for f in dataclasses.fields(cls):
        if f.name in table:
            values[f.name] = conv[f.name](f"{name}.{f.name}", table[f.name])
        elif f.default is _REQUIRED:
            raise ConfigError(f"{name}.{f.name}: required")
    return cls(**values)


def _domain(label, build):
    try:
        return build()
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"{label}: {exc}") from None


def _validate(cfg: RunConfig) -> None:
    _domain("grid", cfg.grid_spec)
    _domain("operator", cfg.params)
    if cfg.solver.method not in ("rk4", "backward_euler"):
        raise ConfigError(f"solver.method: must be 'rk4' or 'backward_euler', got {cfg.solver.method!r}")
    if isinstance(cfg.solver.samples, tuple) and not all(0 < t <= cfg.solver.t_end for t in cfg.solver.samples):
        raise ConfigError("solver.samples: sample times must lie in (0, solver.t_end]")
    _domain("solver", cfg.solver_config)
    if cfg.solver.krylov_max_iter < 1 or not cfg.solver.krylov_tol > 0:
        raise ConfigError("solver.krylov_*: need krylov_tol > 0 and krylov_max_iter >= 1")
    _domain("initial", cfg.initial_spec)
    _domain("source", cfg.source_spec)
    v = cfg.verify
    bad = sorted(set(v.checks) - set(CHECKS))
    if bad:
        raise ConfigError(f"verify.checks: unknown check(s) {', '.join(bad)}; allowed: {', '.join(CHECKS)}")
    if v.k_max < 1 or v.k_max_weight < 1:
        raise ConfigError("verify.k_max, verify.k_max_weight: must be at least 1")
    if not (v.gevrey_threshold >= 1 and v.lemma_threshold >= 1):
        raise ConfigError("verify thresholds: must be at least 1")
    if not v.t_min > 0:
        raise ConfigError("verify.t_min: must be positive")
    for r, _ in v.commutator:
        if not r > 0:
            raise ConfigError("verify.commutator: r must be positive")
    for k, l, d in v.interpolation:
        if not (k > 0 and l > 0 and d > 0):
            raise ConfigError("verify.interpolation: k, l and delta must be positive")
    bad = sorted(set(cfg.output.formats) - {"csv", "json", "svg"})
    if bad:
        raise ConfigError(f"output.formats: unknown format(s) {', '.join(bad)}; allowed: csv, json, svg")


def parse_config(text: str) -> RunConfig:
    """Parse and validate a TOML configuration document."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        line, col = getattr(exc, "lineno", None), getattr(exc, "colno", None)
        if line is None:
            m = re.search(r"line (\d+), column (\d+)", str(exc))
            line, col = (int(m.group(1)), int(m.group(2))) if m else (None, None)
        where = f"line {line}, column {col}: " if line is not None else ""
        raise ConfigError(f"parse error at {where}{exc}") from None
    unknown = sorted(set(doc) - set(_SECTIONS))
    if unknown:
        raise ConfigError(f"unknown section(s) {', '.join(unknown)}; allowed: {', '.join(_SECTIONS)}")
    for required in ("grid", "operator"):
        if required not in doc:
            raise ConfigError(f"[{required}]: section required")
    cfg = RunConfig(**{name: _section(name, cls, doc[name]) for name, cls in _SECTIONS.items() if name in doc})
    _validate(cfg)
    return cfg


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# --- serialisation ---------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    return x


def write_json(path: Path, data: dict) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, allow_nan=False) + "\n", encoding="utf-8")


def _versions() -> dict:
    return {
        "fkfp": __version__,
        "kernels": kernels.BACKEND,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "python": platform.python_version(),
    }


def _log10(x: np.ndarray) -> list:
    return [float(v) for v in np.asarray(x) / math.log(10.0)]


def write_trajectory_csv(path: Path, traj, k_max: int) -> None:
    header = ["t", "l2", "h_s_gamma2", "w_gamma2s"]
    header += [f"log10_a_{k}" for k in range(k_max + 1)]
    header += [f"log10_b_{k}" for k in range(k_max + 1)]
    with path.open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# fkfp-trajectory schema={CSV_SCHEMA} k_max={k_max}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for smp in traj.samples:
            r = smp.report
            w.writerow([repr(v) for v in [smp.t, r.l2, r.h_s_gamma2, r.w_gamma2s,
                                          *_log10(r.log_a[: k_max + 1]), *_log10(r.log_b[: k_max + 1])]])


# --- plots -----------------------------------------------------------------

def write_plots(out: Path, traj, k_max: int, t_min: float) -> list:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "fkfp"
    meta = {"Date": None}
    written = []
    ks = np.arange(k_max + 1)
    fit_samples = [s for s in traj.samples if s.t >= t_min and np.isfinite(s.report.log_a[0])]

    fig, ax = plt.subplots(figsize=(6, 4))
    for smp in traj.samples:
        ax.plot(ks, np.asarray(smp.report.log_a[: k_max + 1]) / math.log(10), lw=0.8, label=f"t={smp.t:.3g}")
    ax.set_xlabel("k")
    ax.set_ylabel("log10 a_k")
    if len(traj.samples) <= 12:
        ax.legend(fontsize=6)
    fig.tight_layout()
    fig.savefig(out / "seminorms.svg", metadata=meta)
    plt.close(fig)
    written.append("seminorms.svg")

    fig, ax = plt.subplots(figsize=(6, 4))
    for smp in fit_samples:
        fit = fit_gevrey(smp.report.log_a, smp.t, k_max)
        ax.plot(fit.ks, fit.per_k_constant, lw=0.8)
    ax.set_xlabel("k")
    ax.set_ylabel("C_k")
    ax.set_title(f"per-order envelope constants, t >= {t_min:g}")
    fig.tight_layout()
    fig.savefig(out / "gevrey_constants.svg", metadata=meta)
    plt.close(fig)
    written.append("gevrey_constants.svg")

    energy = [s.report.l2**2 + h + w for s, h, w in zip(traj.samples, traj.dissipation_h, traj.dissipation_w)]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(traj.times, energy, marker=".")
    ax.set_xlabel("t")
    ax.set_ylabel("E(t)")
    fig.tight_layout()
    fig.savefig(out / "energy.svg", metadata=meta)
    plt.close(fig)
    written.append("energy.svg")
    return written


# --- commands --------------------------------------------------------------

def _refused(name: str, threshold: float, exc: Exception) -> CheckResult:
    return CheckResult(name, math.nan, math.nan, "refused", threshold, notes=(str(exc),))


def _run_checks(cfg: RunConfig, traj) -> list:
    v = cfg.verify

    def energy():
        return check_energy(traj)

    def frequency():
        try:
            return check_gevrey_frequency(traj, k_max=v.k_max, t_min=v.t_min, threshold=v.gevrey_threshold)
        except ValueError as exc:
            return _refused("gevrey-frequency", v.gevrey_threshold, exc)

    def weight():
        try:
            return check_gevrey_weight(traj, k_max=v.k_max_weight, t_min=v.t_min, threshold=v.gevrey_threshold)
        except ValueError as exc:
            return _refused("gevrey-weight", v.gevrey_threshold, exc)

    jobs = {"energy": energy, "gevrey_frequency": frequency, "gevrey_weight": weight}
    with ThreadPoolExecutor(max_workers=len(v.checks) or 1) as pool:
        futures = [pool.submit(jobs[name]) for name in v.checks]
        return [f.result() for f in futures]


def _fitted_constants(results) -> dict:
    out = {}
    for r in results:
        if r.name == "energy":
            out["B0"] = r.fitted_constant
            out["energy_growth_rate"] = r.extra.get("growth_rate")
        elif r.name == "gevrey-frequency":
            out["C_frequency"] = r.fitted_constant
            out["B1"] = r.extra.get("B1")
        elif r.name == "gevrey-weight":
            out["C_weight"] = r.fitted_constant
            out["B2"] = r.extra.get("B2")
    return out


def _report_head(command: str, cfg: RunConfig) -> dict:
    return {
        "schema": REPORT_SCHEMA,
        "command": command,
        "status": None,
        "seed": cfg.initial.seed,
        "config": cfg.to_dict(),
        "versions": _versions(),
    }


def _thresholds(cfg: RunConfig) -> dict:
    v = cfg.verify
    return {
        "gevrey_stability_ratio": v.gevrey_threshold,
        "gevrey_order_max": 1.5,
        "lemma_spread": v.lemma_threshold,
        "t_min": v.t_min,
        "truncation_factor": 2.0,
        "resolution_edge_share": 1e-2,
        "boundary": BOUNDARY_TOL,
    }


def resolve_output_dir(cfg: RunConfig, override=None) -> Path:
    """``--out`` wins, then ``output.directory``, then the environment default."""
    if override:
        return Path(override)
    if cfg.output.directory:
        return Path(cfg.output.directory)
    return Path(os.environ.get(ENV_OUTPUT_DIR) or DEFAULT_OUTPUT_DIR)


def run(cfg: RunConfig, out: Path, plot: bool = False) -> int:
    """Evolve, run the requested checks and write the artifacts into ``out``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    report = _report_head("run", cfg)
    grid, p = cfg.grid_spec(), cfg.params()
    try:
        traj = evolve(grid, cfg.initial_spec(), cfg.solver_config(), p, cfg.source_spec(), k_max=cfg.verify.k_max)
    except SolverError as exc:
        report["status"] = "error"
        report["error"] = {
            "type": type(exc).__name__,
            "message": str(exc),
            "step": exc.step,
            "residual": getattr(exc, "residual", None) if isinstance(exc, KrylovError) else None,
            "iterations": getattr(exc, "iterations", None) if isinstance(exc, KrylovError) else None,
        }
        write_json(out / "report.json", report)
        log.error("solver aborted: %s", exc)
        return EXIT_SOLVER

    warnings = []
    boundary = max((s.boundary for s in traj.samples), default=0.0)
    if boundary > BOUNDARY_TOL:
        worst = max(traj.samples, key=lambda s: s.boundary)
        msg = (f"boundary magnitude of <v>^(gamma/2+s) u reaches {boundary:.3e} at t={worst.t:.4g} "
               f"(tolerance {BOUNDARY_TOL:g}); the box may be too small")
        warnings.append(msg)
        log.warning(msg)

    results = _run_checks(cfg, traj)
    passed = all(r.passed for r in results)
    report["status"] = "pass" if passed else "fail"
    report["run"] = {
        "method": traj.method,
        "dt": traj.dt,
        "n_steps": traj.n_steps,
        "sample_times": traj.times,
        "boundary_max": boundary,
    }
    report["warnings"] = warnings
    report["thresholds"] = _thresholds(cfg)
    report["fitted_constants"] = _fitted_constants(results)
    report["checks"] = [r.to_dict() for r in results]
    report["notes"] = [
        "B1 and B2 use trapezoid integrals over the sample grid only; the interval before the first "
        "sample is missing, so they are lower bounds on any valid constant."
    ]

    if "csv" in cfg.output.formats:
        write_trajectory_csv(out / "trajectory.csv", traj, cfg.verify.k_max)
    if plot or "svg" in cfg.output.formats:
        write_plots(out, traj, cfg.verify.k_max, cfg.verify.t_min)
    write_json(out / "report.json", report)
    for r in results:
        log.info("%-18s %-18s C=%.6g ratio=%.4g", r.name, r.verdict, r.fitted_constant, r.stability_ratio)
    return EXIT_OK if passed else EXIT_FAIL


def lemma_results(cfg: RunConfig) -> list:
    v = cfg.verify
    family = build_family(cfg.grid_spec())
    results = [check_commutator(family, r, m, v.lemma_threshold) for r, m in v.commutator]
    results += [check_interpolation_eps(family, k, l, d, v.epsilons) for k, l, d in v.interpolation]
    results += [check_interpolation_product(family, k, l, d, v.lemma_threshold) for k, l, d in v.interpolation]
    return results


def verify_lemmas(cfg: RunConfig, out: Path) -> int:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    results = lemma_results(cfg)
    passed = all(r.passed for r in results)
    report = _report_head("verify-lemmas", cfg)
    report["status"] = "pass" if passed else "fail"
    report["thresholds"] = _thresholds(cfg)
    report["fitted_constants"] = {r.name: r.fitted_constant for r in results}
    report["checks"] = [r.to_dict() for r in results]
    low = [r.name for r in results if r.confidence != "normal"]
    report["warnings"] = [f"low-confidence (under-resolved family): {', '.join(low)}"] if low else []
    if "csv" in cfg.output.formats:
        with (out / "lemmas.csv").open("w", newline="", encoding="utf-8") as fh:
            fh.write(f"# fkfp-lemmas schema={CSV_SCHEMA}\n")
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["check", "fitted_constant", "stability_ratio", "threshold", "verdict", "confidence"])
            for r in results:
                w.writerow([r.name, repr(r.fitted_constant), repr(r.stability_ratio), repr(r.threshold),
                            r.verdict, r.confidence])
    write_json(out / "report.json", report)
    for msg in report["warnings"]:
        log.warning(msg)
    return EXIT_OK if passed else EXIT_FAIL


def _sweep_entry(cfg: RunConfig, out: str, plot: bool) -> int:
    return run(cfg, Path(out), plot)


def sweep(cfg: RunConfig, gammas, ss, out: Path, plot: bool = False, workers: int | None = None) -> int:
    """Run every ``(gamma, s)`` pair in its own subdirectory and write ``index.csv``."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for g, s in itertools.product(gammas, ss):
        name = f"gamma{g:g}_s{s:g}"
        try:
            entries.append((g, s, name, cfg.replace("operator", gamma=float(g), s=float(s)), None))
        except ConfigError as exc:
            entries.append((g, s, name, None, str(exc)))
    runnable = [e for e in entries if e[3] is not None]
    workers = workers or min(len(runnable), os.cpu_count() or 1) or 1
    codes = {}
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = {e[2]: pool.submit(_sweep_entry, e[3], str(out / e[2]), plot) for e in runnable}
        for name, fut in futures.items():
            codes[name] = fut.result()

    cols = ["B0", "energy_growth_rate", "C_frequency", "B1", "C_weight", "B2"]
    with (out / "index.csv").open("w", newline="", encoding="utf-8") as fh:
        fh.write(f"# fkfp-sweep schema={CSV_SCHEMA}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["gamma", "s", "exit_code", "status", *cols, "directory"])
        for g, s, name, sub, err in entries:
            if sub is None:
                w.writerow([repr(float(g)), repr(float(s)), EXIT_CONFIG, "invalid", *[""] * len(cols), ""])
                log.warning("skipped %s: %s", name, err)
                continue
            rep = json.loads((out / name / "report.json").read_text(encoding="utf-8"))
            fc = rep.get("fitted_constants", {})
            w.writerow([repr(float(g)), repr(float(s)), codes[name], rep["status"],
                        *[fc.get(c, "") for c in cols], name])
    return EXIT_OK if all(c == EXIT_OK for c in codes.values()) and len(runnable) == len(entries) else EXIT_FAIL


# --- entry point -----------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("config", help="TOML configuration file")
    common.add_argument("--out", metavar="DIR", help=f"output directory (default: ${ENV_OUTPUT_DIR} or ./{DEFAULT_OUTPUT_DIR})")
    common.add_argument("--seed", type=int, help="override initial.seed")
    common.add_argument("--plot", action="store_true", help="also write SVG charts")
    common.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    ap = argparse.ArgumentParser(prog="fkfp", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=f"fkfp {__version__} ({kernels.BACKEND} kernels)")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="evolve and run the configured checks")
    sub.add_parser("verify-lemmas", parents=[common], help="run the commutator and interpolation checks")
    sw = sub.add_parser("sweep", parents=[common], help="run a (gamma, s) parameter grid")
    sw.add_argument("--gamma", type=float, nargs="+", required=True, help="gamma values to sweep")
    sw.add_argument("--s", type=float, nargs="+", required=True, help="s values to sweep")
    sw.add_argument("--workers", type=int, default=None, help="worker processes (default: CPU count)")
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.replace("initial", seed=args.seed)
    except (ConfigError, OSError) as exc:
        print(f"fkfp: {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = resolve_output_dir(cfg, args.out)
    if args.command == "run":
        code = run(cfg, out, args.plot)
    elif args.command == "verify-lemmas":
        code = verify_lemmas(cfg, out)
    else:
        code = sweep(cfg, args.gamma, args.s, out, args.plot, args.workers)
    print(f"fkfp {args.command}: {'pass' if code == EXIT_OK else 'FAIL'} (exit {code}) -> {out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
