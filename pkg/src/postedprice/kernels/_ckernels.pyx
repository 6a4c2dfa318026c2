# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled float kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport INFINITY

cnp.import_array()


def vg_dp(caps, options, zero=0.0, max_states=None):
    cdef Py_ssize_t nb = len(caps)
    cdef Py_ssize_t nobj = len(options)
    cdef Py_ssize_t b, i, o, s, ns, size
    cdef cnp.int64_t[::1] cap = np.asarray(caps, dtype=np.int64)
    cdef cnp.int64_t[::1] stride = np.empty(nb, dtype=np.int64)

    size = 1
    for b in range(nb - 1, -1, -1):
        stride[b] = size
        size *= cap[b] + 1
    if max_states is not None and size > max_states:
        raise MemoryError("state budget exceeded")

    counts = [len(opts) for opts in options]
    cdef Py_ssize_t total = sum(counts)
    cdef cnp.int64_t[::1] offset = np.zeros(nobj + 1, dtype=np.int64)
    for i in range(nobj):
        offset[i + 1] = offset[i] + counts[i]
    cdef cnp.int64_t[:, ::1] delta = np.zeros((max(total, 1), max(nb, 1)), dtype=np.int64)
    cdef cnp.int64_t[::1] dcode = np.zeros(max(total, 1), dtype=np.int64)
    cdef double[::1] gain = np.zeros(max(total, 1), dtype=np.float64)
    o = 0
    for opts in options:
        for d, g in opts:
            for b in range(nb):
                delta[o, b] = d[b]
                dcode[o] += d[b] * stride[b]
            gain[o] = g
            o += 1

    cdef double[::1] cur = np.full(size, -INFINITY)
    cdef double[::1] nxt = np.empty(size)
    cdef cnp.int32_t[:, ::1] arg = np.full((max(nobj, 1), size), -1, dtype=np.int32)
    cdef cnp.int64_t[::1] used = np.zeros(max(nb, 1), dtype=np.int64)
    cdef double val, nv
    cdef bint ok
    cdef cnp.int64_t rem
    cur[0] = zero
    for i in range(nobj):
        nxt[:] = -INFINITY
        for s in range(size):
            val = cur[s]
            if val == -INFINITY:
                continue
            rem = s
            for b in range(nb):
                used[b] = rem // stride[b]
                rem -= used[b] * stride[b]
            for o in range(offset[i], offset[i + 1]):
                ok = True
                for b in range(nb):
                    if used[b] + delta[o, b] > cap[b]:
                        ok = False
                        break
                if not ok:
                    continue
                ns = s + dcode[o]
                nv = val + gain[o]
                if nv > nxt[ns]:
                    nxt[ns] = nv
                    arg[i, ns] = <cnp.int32_t>(o - offset[i])
        cur, nxt = nxt, cur

    cdef Py_ssize_t best_s = -1
    cdef double best = -INFINITY
    for s in range(size):
        if cur[s] > best:
            best = cur[s]
            best_s = s
    if best_s < 0:
        return None, [-1] * nobj
    picks = [0] * nobj
    s = best_s
    for i in range(nobj - 1, -1, -1):
        o = arg[i, s]
        picks[i] = o
        s -= dcode[offset[i] + o]
    return best, picks


def subset_dp(menus, int copies, zero=0.0, one=1.0):
    cdef Py_ssize_t n = len(menus)
    cdef Py_ssize_t size = 1 << n
    cdef Py_ssize_t L = max([len(m) for m in menus] + [1])
    cdef double[:, ::1] price = np.zeros((n, L))
    cdef double[:, ::1] tail = np.zeros((n, L))
    cdef cnp.int64_t[::1] count = np.zeros(n, dtype=np.int64)
    cdef Py_ssize_t i, j, k, oi, mask, rest
    for i, m in enumerate(menus):
        count[i] = len(m)
        for j, (v, t) in enumerate(m):
            price[i, j] = v
            tail[i, j] = t
    value_arr = np.zeros((size, copies + 1))
    buyer_arr = np.full((size, copies + 1), -1, dtype=np.int32)
    opt_arr = np.full((size, copies + 1), -1, dtype=np.int32)
    cdef double[:, ::1] value = value_arr
    cdef cnp.int32_t[:, ::1] pbuyer = buyer_arr
    cdef cnp.int32_t[:, ::1] popt = opt_arr
    cdef double best, a, b, val
    cdef bint have
    for mask in range(1, size):
        for k in range(1, copies + 1):
            have = False
            best = 0.0
            for i in range(n):
                if not (mask >> i) & 1:
                    continue
                rest = mask ^ (1 << i)
                a = value[rest, k - 1]
                b = value[rest, k]
                for oi in range(count[i] - 1, -1, -1):
                    val = b + tail[i, oi] * (price[i, oi] + a - b)
                    if not have or val > best:
                        best = val
                        have = True
                        pbuyer[mask, k] = <cnp.int32_t>i
                        popt[mask, k] = <cnp.int32_t>oi
            value[mask, k] = best
    return value_arr, buyer_arr, opt_arr
