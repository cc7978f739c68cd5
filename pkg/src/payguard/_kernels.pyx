# cython: language_level=3, boundscheck=False, wraparound=False
# cython: cdivision=True, initializedcheck=False
"""Compiled kernel set.

Same interface as backend/pykernels.py: flat ``array('d')`` buffers plus
explicit shape arguments. The matmul variants are unrolled four-wide over
the reduction axis so the j-loop vectorizes; summation order is fixed, so
results are reproducible run to run within one build.
"""

from cpython cimport array
from libc.math cimport cos, exp, log, sin, sqrt, tanh
from libc.string cimport memcpy

import array

NAME = "compiled"

ACT_IDENTITY = 0
ACT_LEAKY_RELU = 1
ACT_SIGMOID = 2
ACT_TANH = 3

cdef array.array _DBL = array.array('d', [])

cdef double _TWO_PI = 6.283185307179586
cdef double _INV_2_53 = 2.0 ** -53


cdef inline bint _finite(double x):
    # exponent-bits test; survives -ffinite-math-only
    cdef unsigned long long bits
    memcpy(&bits, &x, 8)
    return ((bits >> 52) & 0x7FF) != 0x7FF


def matmul_nn(double[::1] a, double[::1] b,
              Py_ssize_t m, Py_ssize_t k, Py_ssize_t n):
    """c[i,j] = sum_p a[i,p] * b[p,j]."""
    cdef array.array out = array.clone(_DBL, m * n, zero=True)
    cdef double[::1] c = out
    cdef Py_ssize_t i, p, j, ik, ci, b0, b1, b2, b3
    cdef Py_ssize_t k4 = k - (k & 3)
    cdef double a0, a1, a2, a3
    for i in range(m):
        ik = i * k
        ci = i * n
        p = 0
        while p < k4:
            a0 = a[ik + p]; a1 = a[ik + p + 1]
            a2 = a[ik + p + 2]; a3 = a[ik + p + 3]
            b0 = p * n; b1 = b0 + n; b2 = b1 + n; b3 = b2 + n
            for j in range(n):
                c[ci + j] += a0 * b[b0 + j] + a1 * b[b1 + j] \
                           + a2 * b[b2 + j] + a3 * b[b3 + j]
            p += 4
        while p < k:
            a0 = a[ik + p]
            b0 = p * n
            for j in range(n):
                c[ci + j] += a0 * b[b0 + j]
            p += 1
    return out


def matmul_tn(double[::1] a, double[::1] b,
              Py_ssize_t k, Py_ssize_t m, Py_ssize_t n):
    """c[i,j] = sum_p a[p,i] * b[p,j], with a stored as [k x m]."""
    cdef array.array out = array.clone(_DBL, m * n, zero=True)
    cdef double[::1] c = out
    cdef Py_ssize_t p, i, j, ci, b0, b1, b2, b3
    cdef Py_ssize_t k4 = k - (k & 3)
    cdef double a0, a1, a2, a3
    for i in range(m):
        ci = i * n
        p = 0
        while p < k4:
            a0 = a[p * m + i]; a1 = a[(p + 1) * m + i]
            a2 = a[(p + 2) * m + i]; a3 = a[(p + 3) * m + i]
            b0 = p * n; b1 = b0 + n; b2 = b1 + n; b3 = b2 + n
            for j in range(n):
                c[ci + j] += a0 * b[b0 + j] + a1 * b[b1 + j] \
                           + a2 * b[b2 + j] + a3 * b[b3 + j]
            p += 4
        while p < k:
            a0 = a[p * m + i]
            b0 = p * n
            for j in range(n):
                c[ci + j] += a0 * b[b0 + j]
            p += 1
    return out


def transpose(double[::1] a, Py_ssize_t m, Py_ssize_t n):
    cdef array.array out = array.clone(_DBL, m * n, zero=False)
    cdef double[::1] o = out
    cdef Py_ssize_t i, j, base
    for i in range(m):
        base = i * n
        for j in range(n):
            o[j * m + i] = a[base + j]
    return out


def ew_add(double[::1] a, double[::1] b):
    cdef Py_ssize_t n = a.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = a[i] + b[i]
    return out


def ew_sub(double[::1] a, double[::1] b):
    cdef Py_ssize_t n = a.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = a[i] - b[i]
    return out


def ew_mul(double[::1] a, double[::1] b):
    cdef Py_ssize_t n = a.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = a[i] * b[i]
    return out


def bias_add(double[::1] a, double[::1] bias, Py_ssize_t rows, Py_ssize_t cols):
    cdef array.array out = array.clone(_DBL, rows * cols, zero=False)
    cdef double[::1] o = out
    cdef Py_ssize_t r, j, base
    for r in range(rows):
        base = r * cols
        for j in range(cols):
            o[base + j] = a[base + j] + bias[j]
    return out


def scale(double[::1] a, double s):
    cdef Py_ssize_t n = a.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    for i in range(n):
        o[i] = s * a[i]
    return out


def colsum(double[::1] a, Py_ssize_t rows, Py_ssize_t cols):
    cdef array.array out = array.clone(_DBL, cols, zero=True)
    cdef double[::1] o = out
    cdef Py_ssize_t r, j, base
    for r in range(rows):
        base = r * cols
        for j in range(cols):
            o[j] += a[base + j]
    return out


def reduce_sum(double[::1] a):
    cdef double total = 0.0
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        total += a[i]
    return total


cdef inline double _sigmoid(double x):
    cdef double e
    if x >= 0.0:
        return 1.0 / (1.0 + exp(-x))
    e = exp(x)
    return e / (1.0 + e)


def act_forward(int kind, double[::1] a, double alpha):
    cdef Py_ssize_t n = a.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    if kind == 0:
        for i in range(n):
            o[i] = a[i]
    elif kind == 1:
        for i in range(n):
            o[i] = a[i] if a[i] > 0.0 else alpha * a[i]
    elif kind == 2:
        for i in range(n):
            o[i] = _sigmoid(a[i])
    elif kind == 3:
        for i in range(n):
            o[i] = tanh(a[i])
    else:
        raise ValueError(f"unknown activation code {kind}")
    return out


def act_backward(int kind, double[::1] pre, double[::1] post,
                 double[::1] gout, double alpha):
    cdef Py_ssize_t n = gout.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    cdef double s
    if kind == 0:
        for i in range(n):
            o[i] = gout[i]
    elif kind == 1:
        for i in range(n):
            o[i] = gout[i] if pre[i] > 0.0 else alpha * gout[i]
    elif kind == 2:
        for i in range(n):
            s = post[i]
            o[i] = gout[i] * s * (1.0 - s)
    elif kind == 3:
        for i in range(n):
            s = post[i]
            o[i] = gout[i] * (1.0 - s * s)
    else:
        raise ValueError(f"unknown activation code {kind}")
    return out


def log_clamped(double[::1] a, double eps):
    cdef Py_ssize_t n = a.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    cdef double hi = 1.0 - eps, p
    for i in range(n):
        p = a[i]
        if p < eps:
            p = eps
        elif p > hi:
            p = hi
        o[i] = log(p)
    return out


def log1m_clamped(double[::1] a, double eps):
    cdef Py_ssize_t n = a.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    cdef double hi = 1.0 - eps, p
    for i in range(n):
        p = a[i]
        if p < eps:
            p = eps
        elif p > hi:
            p = hi
        o[i] = log(1.0 - p)
    return out


def dlog_clamped(double[::1] a, double eps, double s):
    cdef Py_ssize_t n = a.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    cdef double hi = 1.0 - eps
    for i in range(n):
        o[i] = s / a[i] if eps <= a[i] <= hi else 0.0
    return out


def dlog1m_clamped(double[::1] a, double eps, double s):
    cdef Py_ssize_t n = a.shape[0], i
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    cdef double hi = 1.0 - eps
    for i in range(n):
        o[i] = -s / (1.0 - a[i]) if eps <= a[i] <= hi else 0.0
    return out


def first_nonfinite(double[::1] a):
    cdef Py_ssize_t i
    for i in range(a.shape[0]):
        if not _finite(a[i]):
            return i
    return -1


def adam_update(double[::1] theta, double[::1] g, double[::1] m,
                double[::1] v, long t, double lr,
                double beta1, double beta2, double eps):
    """One bias-corrected Adam step; returns new (theta, m, v) buffers."""
    cdef Py_ssize_t n = theta.shape[0], i
    cdef array.array th_out = array.clone(_DBL, n, zero=False)
    cdef array.array m_out = array.clone(_DBL, n, zero=False)
    cdef array.array v_out = array.clone(_DBL, n, zero=False)
    cdef double[::1] th2 = th_out, m2 = m_out, v2 = v_out
    cdef double c1 = 1.0 - beta1 ** t
    cdef double c2 = 1.0 - beta2 ** t
    cdef double gi, mi, vi
    for i in range(n):
        gi = g[i]
        mi = beta1 * m[i] + (1.0 - beta1) * gi
        vi = beta2 * v[i] + (1.0 - beta2) * gi * gi
        m2[i] = mi
        v2[i] = vi
        th2[i] = theta[i] - lr * (mi / c1) / (sqrt(vi / c2) + eps)
    return th_out, m_out, v_out


def fill_normal(unsigned long long state, Py_ssize_t n):
    """n standard normals via Box-Muller; returns (buffer, new rng state).

    Consumes exactly two 64-bit draws per pair; an odd n still consumes the
    full final pair so the state sequence is count-independent.
    """
    cdef array.array out = array.clone(_DBL, n, zero=False)
    cdef double[::1] o = out
    cdef Py_ssize_t i = 0
    cdef unsigned long long x, y, z
    cdef double u1, u2, r, ang
    while i < n:
        state += 0x9E3779B97F4A7C15ULL
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
        x = z ^ (z >> 31)
        state += 0x9E3779B97F4A7C15ULL
        z = state
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
        y = z ^ (z >> 31)
        u1 = <double>((x >> 11) + 1) * _INV_2_53
        u2 = <double>(y >> 11) * _INV_2_53
        r = sqrt(-2.0 * log(u1))
        ang = _TWO_PI * u2
        o[i] = r * cos(ang)
        if i + 1 < n:
            o[i + 1] = r * sin(ang)
        i += 2
    return out, state
