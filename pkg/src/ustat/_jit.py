"""numba loops for built-in kernels.

Each function returns ``(sum, max_abs)`` where ``sum`` is a Neumaier
compensated sum of the kernel values and ``max_abs`` the largest ``|h|``
encountered (used to enforce declared sup norms).
"""
import numpy as np

from ._accel import njit


@njit(nogil=True, cache=True)
def eval_builtin(code, param, lo, hi, buf):
    if code == 1:
        d = buf[0] - buf[1]
        v = 0.5 * d * d
    elif code == 2:
        v = buf[0] * buf[1]
    elif code == 3:
        v = buf[0]
    else:
        v = param
    if v < lo:
        v = lo
    elif v > hi:
        v = hi
    return v


@njit(nogil=True, cache=True)
def _neumaier(s, c, v):
    t = s + v
    if abs(s) >= abs(v):
        c += (s - t) + v
    else:
        c += (v - t) + s
    return t, c


@njit(nogil=True, cache=True)
def pair_sum(x, code, param, lo, hi):
    n = x.shape[0]
    buf = np.empty(2)
    s = 0.0
    c = 0.0
    top = 0.0
    for i in range(n - 1):
        buf[0] = x[i]
        for j in range(i + 1, n):
            buf[1] = x[j]
            v = eval_builtin(code, param, lo, hi, buf)
            a = abs(v)
            if a > top:
                top = a
            s, c = _neumaier(s, c, v)
    return s + c, top


@njit(nogil=True, cache=True)
def combination_sum(x, m, perms, code, param, lo, hi):
    """Sum over increasing index tuples in lexicographic order.

    ``perms`` is an ``(r, m)`` table of argument orderings applied to every
    tuple; pass the identity row alone for symmetric kernels and all ``m!``
    permutations for the ordered-tuple form.
    """
    n = x.shape[0]
    idx = np.arange(m)
    buf = np.empty(m)
    s = 0.0
    c = 0.0
    top = 0.0
    while True:
        for p in range(perms.shape[0]):
            for j in range(m):
                buf[j] = x[idx[perms[p, j]]]
            v = eval_builtin(code, param, lo, hi, buf)
            a = abs(v)
            if a > top:
                top = a
            s, c = _neumaier(s, c, v)
        i = m - 1
        while i >= 0 and idx[i] == n - m + i:
            i -= 1
        if i < 0:
            break
        idx[i] += 1
        for j in range(i + 1, m):
            idx[j] = idx[j - 1] + 1
    return s + c, top


@njit(nogil=True, cache=True)
def cross_sum(x, starts, sizes, chosen, perms, code, param, lo, hi):
    """Sum over the cross product of the blocks ``chosen`` (odometer order).

    Block ``b`` is ``x[starts[b]:starts[b] + sizes[b]]``.  For every
    element of the cross product each row of ``perms`` assigns the chosen
    blocks to argument positions.
    """
    m = chosen.shape[0]
    pos = np.zeros(m, dtype=np.int64)
    buf = np.empty(m)
    s = 0.0
    c = 0.0
    top = 0.0
    while True:
        for p in range(perms.shape[0]):
            for j in range(m):
                b = perms[p, j]
                buf[j] = x[starts[chosen[b]] + pos[b]]
            v = eval_builtin(code, param, lo, hi, buf)
            a = abs(v)
            if a > top:
                top = a
            s, c = _neumaier(s, c, v)
        i = m - 1
        while i >= 0:
            pos[i] += 1
            if pos[i] < sizes[chosen[i]]:
                break
            pos[i] = 0
            i -= 1
        if i < 0:
            break
    return s + c, top
