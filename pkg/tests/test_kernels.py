import json
import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fkfp import _pykernels, kernels

ck = pytest.importorskip("fkfp._ckernels", reason="compiled kernels not built")


def cplx(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 300), seed=st.integers(0, 2**32 - 1), a=st.floats(-10, 10))
def test_backends_agree_bitwise(n, seed, a):
    rng = np.random.default_rng(seed)
    u, bu, f, k2, k3, k4 = (cplx(rng, n) for _ in range(6))
    wg, w2s = rng.uniform(0.1, 5, n), rng.uniform(0.1, 5, n)
    for mod_args in [
        ("kfp_apply", (bu, u, wg, w2s)),
        ("kfp_rhs", (bu, u, wg, w2s)),
        ("kfp_rhs", (bu, u, wg, w2s, f)),
        ("axpy", (u, a, f)),
        ("rk4_combine", (u, bu, k2, k3, k4, a)),
    ]:
        name, args = mod_args
        out_c, out_p = np.empty(n, complex), np.empty(n, complex)
        getattr(ck, name)(out_c, *args)
        getattr(_pykernels, name)(out_p, *args)
        np.testing.assert_array_equal(out_c, out_p, err_msg=name)
    zc, zp = u.copy(), u.copy()
    ck.scale(zc, wg)
    _pykernels.scale(zp, wg)
    np.testing.assert_array_equal(zc, zp)


def test_kernels_accept_read_only_inputs_and_aliasing():
    rng = np.random.default_rng(0)
    u = cplx(rng, 16)
    u.flags.writeable = False
    out = cplx(rng, 16)
    ck.axpy(out, u, 2.0, out)  # out aliases y
    np.testing.assert_array_equal(out.shape, (16,))


def test_multidimensional_arrays():
    rng = np.random.default_rng(1)
    z = (rng.standard_normal((8, 8)) + 1j * rng.standard_normal((8, 8)))
    w = rng.uniform(size=(8, 8))
    zc = z.copy()
    ck.scale(zc, w)
    np.testing.assert_array_equal(zc, z * w)


def test_length_mismatch_is_rejected():
    with pytest.raises(ValueError):
        ck.scale(np.zeros(4, complex), np.ones(3))
    with pytest.raises(ValueError):
        ck.kfp_apply(np.zeros(4, complex), np.zeros(4, complex), np.zeros(5, complex), np.ones(4), np.ones(4))


def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_env_var_selects_fallback_and_results_match():
    code = (
        "import json, numpy as np\n"
        "from fkfp import kernels\n"
        "from fkfp.grid import make_grid\n"
        "from fkfp.operators import OperatorParams\n"
        "from fkfp.solver import InitialDataSpec, SolverConfig, evolve\n"
        "t = evolve(make_grid(1, 8.0, 64), InitialDataSpec('rough_random', seed=3), SolverConfig(t_end=0.2), OperatorParams(0.5, 0.5))\n"
        "print(json.dumps([kernels.BACKEND, t.samples[-1].state.values.real.tobytes().hex()]))\n"
    )
    results = {}
    for flag in ("1", ""):
        env = dict(os.environ, FKFP_PURE_PYTHON=flag)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, digest = json.loads(out.stdout)
        results[backend] = digest
    assert set(results) == {"python", "cython"}
    assert results["python"] == results["cython"]
