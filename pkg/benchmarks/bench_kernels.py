"""Compare the compiled and numpy kernel backends.

Kernel timings import both modules side by side.  The end-to-end timing runs
one reference-sized ``evolve`` per backend in a fresh interpreter, with
``FKFP_PURE_PYTHON=1`` selecting the numpy path.

    python benchmarks/bench_kernels.py [--sizes 512 4096 65536] [--repeat 7] [--json out.json]
"""
import argparse
import json
import os
import subprocess
import sys
import timeit

import numpy as np

from fkfp import _pykernels

try:
    from fkfp import _ckernels
except ImportError:  # extension not built
    _ckernels = None

EVOLVE_SNIPPET = """
import time
from fkfp.grid import make_grid
from fkfp.kernels import BACKEND
from fkfp.operators import OperatorParams
from fkfp.solver import InitialDataSpec, SolverConfig, evolve
g = make_grid(1, 12.0, {n})
u0 = InitialDataSpec("rough_random", epsilon=1.0, seed=7)
cfg = SolverConfig(t_end=1.0)
evolve(g, u0, cfg, OperatorParams(0.5, 0.5), k_max=2)
best = float("inf")
for _ in range({repeat}):
    t0 = time.perf_counter()
    evolve(g, u0, cfg, OperatorParams(0.5, 0.5), k_max=2)
    best = min(best, time.perf_counter() - t0)
print(BACKEND, best)
"""


def _arrays(n, rng):
    z = lambda: rng.standard_normal(n) + 1j * rng.standard_normal(n)
    r = lambda: rng.uniform(0.5, 2.0, n)
    # scale works in place, so it gets its own buffer and a unit weight to stay finite
    return dict(out=np.empty(n, complex), u=z(), bu=z(), f=z(), k=[z() for _ in range(4)], wg=r(), w2s=r(),
                zs=z(), ones=np.ones(n))


def _cases(mod, a):
    return {
        "scale": lambda: mod.scale(a["zs"], a["ones"]),
        "kfp_apply": lambda: mod.kfp_apply(a["out"], a["bu"], a["u"], a["wg"], a["w2s"]),
        "kfp_rhs": lambda: mod.kfp_rhs(a["out"], a["bu"], a["u"], a["wg"], a["w2s"], a["f"]),
        "axpy": lambda: mod.axpy(a["out"], a["u"], 0.25, a["bu"]),
        "rk4_combine": lambda: mod.rk4_combine(a["out"], a["u"], *a["k"], 0.01),
    }


def bench_kernels(sizes, repeat):
    rows = []
    rng = np.random.default_rng(0)
    for n in sizes:
        a = _arrays(n, rng)
        number = max(1, 200_000 // n)
        backends = {"python": _pykernels}
        if _ckernels is not None:
            backends["cython"] = _ckernels
        for name in _cases(_pykernels, a):
            row = {"kernel": name, "n": n}
            for label, mod in backends.items():
                fn = _cases(mod, a)[name]
                fn()
                best = min(timeit.repeat(fn, number=number, repeat=repeat)) / number
                row[label] = best
            rows.append(row)
    return rows


def bench_evolve(n, repeat):
    out = {}
    for pure in ("1", "0"):
        env = dict(os.environ, FKFP_PURE_PYTHON=pure)
        res = subprocess.run(
            [sys.executable, "-c", EVOLVE_SNIPPET.format(n=n, repeat=repeat)],
            env=env, capture_output=True, text=True, check=True,
        )
        backend, secs = res.stdout.split()
        out[backend] = float(secs)
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[512, 4096, 65536])
    ap.add_argument("--repeat", type=int, default=7)
    ap.add_argument("--evolve-n", type=int, default=512, help="grid points for the end-to-end run")
    ap.add_argument("--json", help="also write the results here")
    args = ap.parse_args(argv)

    if _ckernels is None:
        print("compiled extension not built; timing the numpy backend only")
    rows = bench_kernels(args.sizes, args.repeat)
    print(f"{'kernel':<12} {'n':>7} {'python us':>11} {'cython us':>11} {'speedup':>8}")
    for r in rows:
        py = r["python"] * 1e6
        cy = r.get("cython")
        cy_s = f"{cy * 1e6:11.2f}" if cy is not None else f"{'-':>11}"
        sp = f"{r['python'] / cy:8.2f}" if cy else f"{'-':>8}"
        print(f"{r['kernel']:<12} {r['n']:>7} {py:11.2f} {cy_s} {sp}")

    ev = bench_evolve(args.evolve_n, max(1, args.repeat // 2))
    print(f"\nevolve, N = {args.evolve_n}, t_end = 1 (best of runs):")
    for backend, secs in ev.items():
        print(f"  {backend:<7} {secs * 1e3:9.1f} ms")
    if args.json:
        with open(args.json, "w", encoding="utf-8") as fh:
            json.dump({"kernels": rows, "evolve": ev}, fh, indent=2)


if __name__ == "__main__":
    main()
