# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Fused pointwise kernels for the spectral time stepper.

Complex arrays are handled through their interleaved ``float64`` view, so
every loop is plain double arithmetic.  Expression order matches
``_pykernels`` exactly; build without ``-ffast-math`` and with
``-ffp-contract=off`` to keep the two backends bitwise identical.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef inline object _re(z):
    return np.asarray(z).reshape(-1).view(np.float64)


cdef inline object _w(m):
    return np.asarray(m, dtype=np.float64).reshape(-1)


cdef inline void _same(Py_ssize_t n, Py_ssize_t m) except *:
    if n != m:
        raise ValueError(f"kernel operand length mismatch: {n} != {m}")


def scale(z, m):
    cdef double[::1] zz = _re(z)
    cdef const double[::1] mm = _w(m)
    cdef Py_ssize_t i, n = mm.shape[0]
    _same(zz.shape[0], 2 * n)
    with nogil:
        for i in range(n):
            zz[2 * i] = zz[2 * i] * mm[i]
            zz[2 * i + 1] = zz[2 * i + 1] * mm[i]


def kfp_apply(out, bu, u, wg, w2s):
    cdef double[::1] o = _re(out)
    cdef const double[::1] b = _re(bu)
    cdef const double[::1] x = _re(u)
    cdef const double[::1] g = _w(wg)
    cdef const double[::1] w = _w(w2s)
    cdef Py_ssize_t i, j, n = g.shape[0]
    _same(o.shape[0], 2 * n)
    _same(b.shape[0], 2 * n)
    _same(x.shape[0], 2 * n)
    _same(w.shape[0], n)
    with nogil:
        for i in range(n):
            j = 2 * i
            o[j] = g[i] * (b[j] + w[i] * x[j])
            o[j + 1] = g[i] * (b[j + 1] + w[i] * x[j + 1])


def kfp_rhs(out, bu, u, wg, w2s, f=None):
    cdef double[::1] o = _re(out)
    cdef const double[::1] b = _re(bu)
    cdef const double[::1] x = _re(u)
    cdef const double[::1] g = _w(wg)
    cdef const double[::1] w = _w(w2s)
    cdef const double[::1] s
    cdef Py_ssize_t i, j, n = g.shape[0]
    _same(o.shape[0], 2 * n)
    _same(b.shape[0], 2 * n)
    _same(x.shape[0], 2 * n)
    _same(w.shape[0], n)
    if f is None:
        with nogil:
            for i in range(n):
                j = 2 * i
                o[j] = -(g[i] * (b[j] + w[i] * x[j]))
                o[j + 1] = -(g[i] * (b[j + 1] + w[i] * x[j + 1]))
    else:
        s = _re(f)
        _same(s.shape[0], 2 * n)
        with nogil:
            for i in range(n):
                j = 2 * i
                o[j] = s[j] - g[i] * (b[j] + w[i] * x[j])
                o[j + 1] = s[j + 1] - g[i] * (b[j + 1] + w[i] * x[j + 1])


def axpy(out, x, double a, y):
    cdef double[::1] o = _re(out)
    cdef const double[::1] xx = _re(x)
    cdef const double[::1] yy = _re(y)
    cdef Py_ssize_t i, n = o.shape[0]
    _same(xx.shape[0], n)
    _same(yy.shape[0], n)
    with nogil:
        for i in range(n):
            o[i] = xx[i] + a * yy[i]


def rk4_combine(out, u, k1, k2, k3, k4, double c):
    cdef double[::1] o = _re(out)
    cdef const double[::1] x = _re(u)
    cdef const double[::1] a = _re(k1)
    cdef const double[::1] b = _re(k2)
    cdef const double[::1] d = _re(k3)
    cdef const double[::1] e = _re(k4)
    cdef Py_ssize_t i, n = o.shape[0]
    for arr in (x, a, b, d, e):
        _same(arr.shape[0], n)
    with nogil:
        for i in range(n):
            o[i] = x[i] + c * (((a[i] + 2.0 * b[i]) + 2.0 * d[i]) + e[i])
