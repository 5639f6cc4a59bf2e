"""Pure-numpy pointwise kernels.

Reference implementation of the fused loops in ``_ckernels.pyx``.  Both
modules evaluate every expression in the same order, so the two backends
agree bit for bit on finite data.

All complex arrays are C-contiguous ``complex128``; weights are contiguous
``float64`` of the same element count.  ``out`` may alias an input.
"""
import numpy as np


def scale(z, m):
    """``z *= m`` in place (complex by real, elementwise)."""
    np.multiply(z, m, out=z)


def kfp_apply(out, bu, u, wg, w2s):
    """``out = wg * (bu + w2s * u)``."""
    out[...] = wg * (bu + w2s * u)


def kfp_rhs(out, bu, u, wg, w2s, f=None):
    """``out = f - wg * (bu + w2s * u)``; ``f=None`` means a zero source."""
    if f is None:
        out[...] = -(wg * (bu + w2s * u))
    else:
        out[...] = f - wg * (bu + w2s * u)


def axpy(out, x, a, y):
    """``out = x + a * y`` with real scalar ``a``."""
    out[...] = x + a * y


def rk4_combine(out, u, k1, k2, k3, k4, c):
    """``out = u + c * (k1 + 2 k2 + 2 k3 + k4)``."""
    out[...] = u + c * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
