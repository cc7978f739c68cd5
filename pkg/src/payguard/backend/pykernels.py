"""Pure-Python kernel set.

Mirrors the compiled extension function-for-function so either can back the
tensor layer. Buffers are flat ``array('d')`` values in row-major order;
shapes travel as explicit integer arguments. Roughly three orders of
magnitude slower than the compiled kernels (see benchmarks/), so this
backend is for portability and cross-checking, not full-scale training.
"""

import math
from array import array

NAME = "python"

# activation codes shared with the compiled kernels
ACT_IDENTITY = 0
ACT_LEAKY_RELU = 1
ACT_SIGMOID = 2
ACT_TANH = 3

_TWO_PI = 6.283185307179586
_INV_2_53 = 2.0 ** -53
_MASK64 = (1 << 64) - 1


def matmul_nn(a, b, m, k, n):
    """c[i,j] = sum_p a[i,p] * b[p,j]."""
    c = array("d", bytes(8 * m * n))
    for i in range(m):
        ik = i * k
        ci = i * n
        for p in range(k):
            aip = a[ik + p]
            if aip == 0.0:
                continue
            bp = p * n
            for j in range(n):
                c[ci + j] += aip * b[bp + j]
    return c


def matmul_tn(a, b, k, m, n):
    """c[i,j] = sum_p a[p,i] * b[p,j], with a stored as [k x m]."""
    c = array("d", bytes(8 * m * n))
    for p in range(k):
        pm = p * m
        bp = p * n
        for i in range(m):
            api = a[pm + i]
            if api == 0.0:
                continue
            ci = i * n
            for j in range(n):
                c[ci + j] += api * b[bp + j]
    return c


def transpose(a, m, n):
    out = array("d", bytes(8 * m * n))
    for i in range(m):
        base = i * n
        for j in range(n):
            out[j * m + i] = a[base + j]
    return out


def ew_add(a, b):
    return array("d", [x + y for x, y in zip(a, b)])


def ew_sub(a, b):
    return array("d", [x - y for x, y in zip(a, b)])


def ew_mul(a, b):
    return array("d", [x * y for x, y in zip(a, b)])


def bias_add(a, bias, rows, cols):
    out = array("d", a)
    for r in range(rows):
        base = r * cols
        for j in range(cols):
            out[base + j] += bias[j]
    return out


def scale(a, s):
    return array("d", [s * x for x in a])


def colsum(a, rows, cols):
    out = array("d", bytes(8 * cols))
    for r in range(rows):
        base = r * cols
        for j in range(cols):
            out[j] += a[base + j]
    return out


def reduce_sum(a):
    total = 0.0
    for x in a:
        total += x
    return total


def _sigmoid(x):
    # split on sign so exp never overflows
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def act_forward(kind, a, alpha):
    if kind == ACT_IDENTITY:
        return array("d", a)
    if kind == ACT_LEAKY_RELU:
        return array("d", [x if x > 0.0 else alpha * x for x in a])
    if kind == ACT_SIGMOID:
        return array("d", [_sigmoid(x) for x in a])
    if kind == ACT_TANH:
        return array("d", [math.tanh(x) for x in a])
    raise ValueError(f"unknown activation code {kind}")


def act_backward(kind, pre, post, gout, alpha):
    if kind == ACT_IDENTITY:
        return array("d", gout)
    if kind == ACT_LEAKY_RELU:
        return array("d", [g if x > 0.0 else alpha * g
                           for x, g in zip(pre, gout)])
    if kind == ACT_SIGMOID:
        return array("d", [g * s * (1.0 - s) for s, g in zip(post, gout)])
    if kind == ACT_TANH:
        return array("d", [g * (1.0 - t * t) for t, g in zip(post, gout)])
    raise ValueError(f"unknown activation code {kind}")


def log_clamped(a, eps):
    hi = 1.0 - eps
    return array("d", [math.log(eps if p < eps else (hi if p > hi else p))
                       for p in a])


def log1m_clamped(a, eps):
    hi = 1.0 - eps
    return array("d", [math.log(1.0 - (eps if p < eps else (hi if p > hi else p)))
                       for p in a])


def dlog_clamped(a, eps, s):
    # derivative of log(clamp(p)): zero where the clamp is active
    hi = 1.0 - eps
    return array("d", [s / p if eps <= p <= hi else 0.0 for p in a])


def dlog1m_clamped(a, eps, s):
    hi = 1.0 - eps
    return array("d", [-s / (1.0 - p) if eps <= p <= hi else 0.0 for p in a])


def first_nonfinite(a):
    for i, x in enumerate(a):
        if not math.isfinite(x):
            return i
    return -1


def adam_update(theta, g, m, v, t, lr, beta1, beta2, eps):
    """One bias-corrected Adam step; returns new (theta, m, v) buffers."""
    n = len(theta)
    th2 = array("d", bytes(8 * n))
    m2 = array("d", bytes(8 * n))
    v2 = array("d", bytes(8 * n))
    c1 = 1.0 - beta1 ** t
    c2 = 1.0 - beta2 ** t
    for i in range(n):
        gi = g[i]
        mi = beta1 * m[i] + (1.0 - beta1) * gi
        vi = beta2 * v[i] + (1.0 - beta2) * gi * gi
        m2[i] = mi
        v2[i] = vi
        th2[i] = theta[i] - lr * (mi / c1) / (math.sqrt(vi / c2) + eps)
    return th2, m2, v2


def _splitmix_next(state):
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    z ^= z >> 31
    return state, z


def fill_normal(state, n):
    """n standard normals via Box-Muller; returns (buffer, new rng state).

    Consumes exactly two 64-bit draws per pair; an odd n still consumes the
    full final pair so the state sequence is count-independent.
    """
    out = array("d", bytes(8 * n))
    i = 0
    while i < n:
        state, x = _splitmix_next(state)
        state, y = _splitmix_next(state)
        u1 = ((x >> 11) + 1) * _INV_2_53  # (0, 1]
        u2 = (y >> 11) * _INV_2_53        # [0, 1)
        r = math.sqrt(-2.0 * math.log(u1))
        ang = _TWO_PI * u2
        out[i] = r * math.cos(ang)
        if i + 1 < n:
            out[i + 1] = r * math.sin(ang)
        i += 2
    return out, state
