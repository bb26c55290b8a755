# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled numerical kernels.

Signatures mirror :mod:`batwb._pykernels` exactly; the two are interchangeable.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()


cdef void _thomas(double* a, double* b, double* c, double* d, double* x, Py_ssize_t n) noexcept nogil:
    # a: sub-diagonal (a[0] unused), b: diagonal, c: super-diagonal (c[n-1] unused).
    # b and d are overwritten.
    cdef Py_ssize_t i
    cdef double w
    for i in range(1, n):
        w = a[i] / b[i - 1]
        b[i] = b[i] - w * c[i - 1]
        d[i] = d[i] - w * d[i - 1]
    x[n - 1] = d[n - 1] / b[n - 1]
    for i in range(n - 2, -1, -1):
        x[i] = (d[i] - c[i] * x[i + 1]) / b[i]


def tridiag_solve(const double[::1] lower, const double[::1] diag,
                  const double[::1] upper, const double[::1] rhs):
    cdef Py_ssize_t n = diag.shape[0]
    cdef cnp.ndarray[double, ndim=1] b = np.array(diag, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] d = np.array(rhs, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] a = np.array(lower, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] c = np.array(upper, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] x = np.empty(n, dtype=np.float64)
    if n == 0:
        return x
    _thomas(&a[0], &b[0], &c[0], &d[0], &x[0], n)
    return x


def implicit_diffusion(const double[::1] c, const double[::1] cap,
                       const double[::1] cond, const double[::1] src,
                       double dt, double g_left=0.0, double c_left=0.0):
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t i
    cdef cnp.ndarray[double, ndim=1] a = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] b = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] up = np.zeros(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] d = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[double, ndim=1] x = np.empty(n, dtype=np.float64)
    cdef double inv_dt = 1.0 / dt
    cdef double gl, gr
    with nogil:
        for i in range(n):
            gl = cond[i - 1] if i > 0 else 0.0
            gr = cond[i] if i < n - 1 else 0.0
            b[i] = cap[i] * inv_dt + gl + gr
            d[i] = cap[i] * c[i] * inv_dt + src[i]
            if i > 0:
                a[i] = -gl
            if i < n - 1:
                up[i] = -gr
        b[0] = b[0] + g_left
        d[0] = d[0] + g_left * c_left
        _thomas(&a[0], &b[0], &up[0], &d[0], &x[0], n)
    return x


def best_split(const double[::1] x, const double[::1] y, Py_ssize_t min_leaf):
    cdef Py_ssize_t n = x.shape[0]
    cdef Py_ssize_t i, best_pos = -1
    cdef double total = 0.0, left = 0.0, right, score
    cdef double best = -np.inf
    if min_leaf < 1:
        min_leaf = 1
    for i in range(n):
        total += y[i]
    for i in range(1, n):
        left += y[i - 1]
        if i < min_leaf or n - i < min_leaf:
            continue
        if not x[i - 1] < x[i]:
            continue
        right = total - left
        score = left * left / i + right * right / (n - i)
        if score > best:
            best = score
            best_pos = i
    return best, best_pos
