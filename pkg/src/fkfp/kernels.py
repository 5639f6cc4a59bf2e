"""Backend selection for the pointwise kernels.

The compiled extension ``fkfp._ckernels`` is used when it was built; the
numpy module ``fkfp._pykernels`` is the fallback.  Setting the environment
variable ``FKFP_PURE_PYTHON=1`` forces the fallback (used by the benchmark
and the backend parity tests).
"""
import os

from . import _pykernels

try:
    if os.environ.get("FKFP_PURE_PYTHON", "") not in ("", "0"):
        raise ImportError("pure-python backend requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = _pykernels
    BACKEND = "python"

scale = _impl.scale
kfp_apply = _impl.kfp_apply
kfp_rhs = _impl.kfp_rhs
axpy = _impl.axpy
rk4_combine = _impl.rk4_combine

__all__ = ["BACKEND", "scale", "kfp_apply", "kfp_rhs", "axpy", "rk4_combine"]
