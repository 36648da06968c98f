"""Numpy implementations of the dense-math kernels.

This is the pure-Python fallback backend. The compiled backend
(``tsedit._kernels_cy``) exposes the same functions with the same
semantics; ``tsedit.backend`` picks one at import time.

All kernels take/return C-contiguous float64 arrays. Gradient kernels
follow the convention ``*_bwd(saved, grad_out) -> grad_in``.
"""

import numpy as np

NAME = "python"


def matmul(a, b):
    return a @ b


def matmul_at(a, g):
    """a.T @ g, the cotangent for the right operand of a matmul."""
    return a.T @ g


def matmul_bt(g, b):
    """g @ b.T, the cotangent for the left operand of a matmul."""
    return g @ b.T


def add(a, b):
    return a + b


def sub(a, b):
    return a - b


def mul(a, b):
    return a * b


def scale(a, s):
    return a * s


def iadd(acc, g):
    """In-place gradient accumulation: acc += g."""
    acc += g


def badd(a, v):
    """Row-broadcast add: (B, N) + (N,)."""
    return a + v


def colsum(a):
    return a.sum(axis=0)


def tanh(a):
    return np.tanh(a)


def tanh_bwd(y, g):
    return g * (1.0 - y * y)


def relu(a):
    return np.maximum(a, 0.0)


def relu_bwd(x, g):
    return g * (x > 0.0)


def sin(a):
    return np.sin(a)


def sin_bwd(x, g):
    return g * np.cos(x)


def cos(a):
    return np.cos(a)


def cos_bwd(x, g):
    return -g * np.sin(x)


def region_sum(a, r0, r1, c0, c1):
    """Sum of the rectangle [r0:r1, c0:c1] of a 2-D array."""
    return float(a[r0:r1, c0:c1].sum())


def region_add(out, r0, r1, c0, c1, val):
    """In-place: add the scalar val over the rectangle [r0:r1, c0:c1]."""
    out[r0:r1, c0:c1] += val


def sqdiff(a, b):
    """Sum of squared differences, sum((a - b)**2)."""
    d = a - b
    return float((d * d).sum())


def sqdiff_bwd(a, b, g):
    """d/da of g * sum((a - b)**2); negate for d/db."""
    return (2.0 * g) * (a - b)
