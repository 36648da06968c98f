# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled dense-math kernels; same surface as tsedit._kernels_py.

Tuned for the sampler's inner loop: many calls on small contiguous
float64 arrays, where allocation and dispatch overhead dominate the
arithmetic. Matmuls go straight to BLAS dgemm (no ufunc machinery), the
heavy transcendentals (tanh/sin/cos) stay with numpy's vectorized
implementations, and everything else runs as C loops over raw pointers.
Callers must pass C-contiguous float64 arrays (the graph interpreter
guarantees this).
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos as ccos
from libc.math cimport sin as csin

from scipy.linalg.cython_blas cimport dgemm

cnp.import_array()

NAME = "compiled"


cdef inline double* dptr(cnp.ndarray a):
    return <double*> cnp.PyArray_DATA(a)


cdef void _dgemm_rowmajor(bint ta, bint tb, cnp.ndarray a, cnp.ndarray b, cnp.ndarray c) noexcept:
    """c = op(a) @ op(b) for row-major arrays via column-major dgemm.

    Row-major C = A@B is column-major C^T = B^T A^T, so swap the operand
    order and flip the transpose flags.
    """
    cdef Py_ssize_t m = c.shape[0], n = c.shape[1]
    cdef int k = <int> (a.shape[0] if ta else a.shape[1])
    cdef int mi = <int> m, ni = <int> n
    cdef int lda = <int> a.shape[1]
    cdef int ldb = <int> b.shape[1]
    cdef int ldc = <int> n
    cdef double one = 1.0, zero = 0.0
    cdef char fa = b'T' if tb else b'N'
    cdef char fb = b'T' if ta else b'N'
    dgemm(&fa, &fb, &ni, &mi, &k, &one, dptr(b), &ldb, dptr(a), &lda, &zero, dptr(c), &ldc)


def matmul(cnp.ndarray a, cnp.ndarray b):
    cdef cnp.ndarray out = np.empty((a.shape[0], b.shape[1]), dtype=np.float64)
    _dgemm_rowmajor(False, False, a, b, out)
    return out


def matmul_at(cnp.ndarray a, cnp.ndarray g):
    # a.T @ g with a (m, k), g (m, n) -> (k, n)
    cdef cnp.ndarray out = np.empty((a.shape[1], g.shape[1]), dtype=np.float64)
    _dgemm_rowmajor(True, False, a, g, out)
    return out


def matmul_bt(cnp.ndarray g, cnp.ndarray b):
    # g @ b.T with g (m, n), b (k, n) -> (m, k)
    cdef cnp.ndarray out = np.empty((g.shape[0], b.shape[0]), dtype=np.float64)
    _dgemm_rowmajor(False, True, g, b, out)
    return out


def add(cnp.ndarray a, cnp.ndarray b):
    cdef cnp.ndarray out = np.empty_like(a)
    cdef double *x = dptr(a)
    cdef double *y = dptr(b)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(a)
    with nogil:
        for i in range(n):
            o[i] = x[i] + y[i]
    return out


def sub(cnp.ndarray a, cnp.ndarray b):
    cdef cnp.ndarray out = np.empty_like(a)
    cdef double *x = dptr(a)
    cdef double *y = dptr(b)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(a)
    with nogil:
        for i in range(n):
            o[i] = x[i] - y[i]
    return out


def mul(cnp.ndarray a, cnp.ndarray b):
    cdef cnp.ndarray out = np.empty_like(a)
    cdef double *x = dptr(a)
    cdef double *y = dptr(b)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(a)
    with nogil:
        for i in range(n):
            o[i] = x[i] * y[i]
    return out


def scale(cnp.ndarray a, s):
    cdef cnp.ndarray out = np.empty_like(a)
    cdef double *x = dptr(a)
    cdef double *o = dptr(out)
    cdef double f = s
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(a)
    with nogil:
        for i in range(n):
            o[i] = x[i] * f
    return out


def iadd(cnp.ndarray acc, cnp.ndarray g):
    cdef double *x = dptr(acc)
    cdef double *y = dptr(g)
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(acc)
    with nogil:
        for i in range(n):
            x[i] += y[i]


def badd(cnp.ndarray a, cnp.ndarray v):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray out = np.empty_like(a)
    cdef double *x = dptr(a)
    cdef double *b = dptr(v)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(m):
            for j in range(n):
                o[i * n + j] = x[i * n + j] + b[j]
    return out


def colsum(cnp.ndarray a):
    cdef Py_ssize_t m = a.shape[0], n = a.shape[1]
    cdef cnp.ndarray out = np.zeros(n, dtype=np.float64)
    cdef double *x = dptr(a)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(m):
            for j in range(n):
                o[j] += x[i * n + j]
    return out


def tanh(a):
    return np.tanh(a)


def tanh_bwd(cnp.ndarray y, cnp.ndarray g):
    cdef cnp.ndarray out = np.empty_like(y)
    cdef double *yv = dptr(y)
    cdef double *gv = dptr(g)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(y)
    with nogil:
        for i in range(n):
            o[i] = gv[i] * (1.0 - yv[i] * yv[i])
    return out


def relu(cnp.ndarray a):
    cdef cnp.ndarray out = np.empty_like(a)
    cdef double *x = dptr(a)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(a)
    with nogil:
        for i in range(n):
            o[i] = x[i] if x[i] > 0.0 else 0.0
    return out


def relu_bwd(cnp.ndarray x, cnp.ndarray g):
    cdef cnp.ndarray out = np.empty_like(x)
    cdef double *xv = dptr(x)
    cdef double *gv = dptr(g)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(x)
    with nogil:
        for i in range(n):
            o[i] = gv[i] if xv[i] > 0.0 else 0.0
    return out


def sin(a):
    return np.sin(a)


def sin_bwd(cnp.ndarray x, cnp.ndarray g):
    cdef cnp.ndarray out = np.empty_like(x)
    cdef double *xv = dptr(x)
    cdef double *gv = dptr(g)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(x)
    with nogil:
        for i in range(n):
            o[i] = gv[i] * ccos(xv[i])
    return out


def cos(a):
    return np.cos(a)


def cos_bwd(cnp.ndarray x, cnp.ndarray g):
    cdef cnp.ndarray out = np.empty_like(x)
    cdef double *xv = dptr(x)
    cdef double *gv = dptr(g)
    cdef double *o = dptr(out)
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(x)
    with nogil:
        for i in range(n):
            o[i] = -gv[i] * csin(xv[i])
    return out


def region_sum(cnp.ndarray a, Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1):
    cdef Py_ssize_t cols = a.shape[1]
    cdef double *x = dptr(a)
    cdef double acc = 0.0
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(r0, r1):
            for j in range(c0, c1):
                acc += x[i * cols + j]
    return acc


def region_add(cnp.ndarray out, Py_ssize_t r0, Py_ssize_t r1, Py_ssize_t c0, Py_ssize_t c1, val):
    cdef Py_ssize_t cols = out.shape[1]
    cdef double *x = dptr(out)
    cdef double v = val
    cdef Py_ssize_t i, j
    with nogil:
        for i in range(r0, r1):
            for j in range(c0, c1):
                x[i * cols + j] += v
    return None


def sqdiff(cnp.ndarray a, cnp.ndarray b):
    cdef double *x = dptr(a)
    cdef double *y = dptr(b)
    cdef double acc = 0.0, d
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(a)
    with nogil:
        for i in range(n):
            d = x[i] - y[i]
            acc += d * d
    return acc


def sqdiff_bwd(cnp.ndarray a, cnp.ndarray b, g):
    cdef cnp.ndarray out = np.empty_like(a)
    cdef double *x = dptr(a)
    cdef double *y = dptr(b)
    cdef double *o = dptr(out)
    cdef double f = 2.0 * g
    cdef Py_ssize_t i, n = cnp.PyArray_SIZE(a)
    with nogil:
        for i in range(n):
            o[i] = f * (x[i] - y[i])
    return out
