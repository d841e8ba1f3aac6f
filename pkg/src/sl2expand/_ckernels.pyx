# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels. Same signatures and results as ``_kernels_py``."""

import numpy as np
cimport numpy as cnp

cnp.import_array()

BACKEND = "cython"

ctypedef cnp.int64_t i64
ctypedef cnp.int32_t i32


def pushforward(double[::1] mu, i64[:, ::1] right):
    cdef Py_ssize_t n = right.shape[0], k = right.shape[1], i, s
    out_arr = np.zeros(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double[::1] w = np.asarray(mu) / k
    for s in range(k):
        for i in range(n):
            out[right[i, s]] += w[i]
    return out_arr


def pushforward_counts(i64[::1] counts, i64[:, ::1] right):
    cdef Py_ssize_t n = right.shape[0], k = right.shape[1], i, s
    out_arr = np.zeros(n, dtype=np.int64)
    cdef i64[::1] out = out_arr
    for s in range(k):
        for i in range(n):
            out[right[i, s]] += counts[i]
    return out_arr


def table_mean(double[::1] f, i64[:, ::1] left):
    cdef Py_ssize_t n = left.shape[0], k = left.shape[1], i, s
    out_arr = np.empty(n, dtype=np.float64)
    cdef double[::1] out = out_arr
    cdef double acc
    for i in range(n):
        acc = f[left[i, 0]]
        for s in range(1, k):
            acc += f[left[i, s]]
        out[i] = acc / k
    return out_arr


def bfs_depths(i64[:, ::1] table, Py_ssize_t start):
    cdef Py_ssize_t n = table.shape[0], k = table.shape[1], head = 0, tail = 1, u, v, s
    depth_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] depth = depth_arr
    cdef i64[::1] queue = np.empty(n, dtype=np.int64)
    depth[start] = 0
    queue[0] = start
    while head < tail:
        u = queue[head]
        head += 1
        for s in range(k):
            v = table[u, s]
            if depth[v] < 0:
                depth[v] = depth[u] + 1
                queue[tail] = v
                tail += 1
    return depth_arr


def girth_bfs(i64[:, ::1] right, i64[::1] inv_letter, i64 max_length):
    cdef Py_ssize_t n = right.shape[0], k = right.shape[1]
    depth_arr = np.full(n, -1, dtype=np.int64)
    via_arr = np.full(n, -1, dtype=np.int64)
    cdef i64[::1] depth = depth_arr
    cdef i64[::1] via = via_arr
    cdef i64[::1] queue = np.empty(n, dtype=np.int64)
    cdef Py_ssize_t head = 0, tail = 1, level_end = 1, u, v, s
    cdef i64 back, cand, best = 0, d = 0
    depth[0] = 0
    queue[0] = 0
    if 1 > max_length:
        return 0, 0
    while head < tail:
        u = queue[head]
        head += 1
        back = inv_letter[via[u]] if via[u] >= 0 else -1
        for s in range(k):
            if s == back:
                continue
            v = right[u, s]
            if depth[v] < 0:
                depth[v] = d + 1
                via[v] = s
                queue[tail] = v
                tail += 1
            else:
                cand = d + depth[v] + 1
                if cand <= max_length and (best == 0 or cand < best):
                    best = cand
        if head == level_end:
            if best:
                return best, d
            if tail == head or 2 * (d + 1) + 1 > max_length:
                return best, d
            d += 1
            level_end = tail
    return best, d


def field_right_mul(i32[:, ::1] state, i32[:, ::1] gens, i64[::1] letters,
                    i32[::1] exp, i32[::1] log, i32[::1] zech, i64 q):
    cdef Py_ssize_t B = state.shape[0], i
    cdef i64 qm1 = q - 1
    cdef i32 a, b, c, d
    cdef i64 l
    for i in range(B):
        l = letters[i]
        a = state[i, 0]; b = state[i, 1]; c = state[i, 2]; d = state[i, 3]
        state[i, 0] = _add(_mul(a, gens[l, 0], exp, log, qm1), _mul(b, gens[l, 2], exp, log, qm1), exp, log, zech, qm1)
        state[i, 1] = _add(_mul(a, gens[l, 1], exp, log, qm1), _mul(b, gens[l, 3], exp, log, qm1), exp, log, zech, qm1)
        state[i, 2] = _add(_mul(c, gens[l, 0], exp, log, qm1), _mul(d, gens[l, 2], exp, log, qm1), exp, log, zech, qm1)
        state[i, 3] = _add(_mul(c, gens[l, 1], exp, log, qm1), _mul(d, gens[l, 3], exp, log, qm1), exp, log, zech, qm1)


cdef inline i32 _mul(i32 x, i32 y, i32[::1] exp, i32[::1] log, i64 qm1) nogil:
    if x == 0 or y == 0:
        return 0
    return exp[(<i64>log[x] + log[y]) % qm1]


cdef inline i32 _add(i32 x, i32 y, i32[::1] exp, i32[::1] log, i32[::1] zech, i64 qm1) nogil:
    cdef i64 lx, z
    if x == 0:
        return y
    if y == 0:
        return x
    lx = log[x]
    z = zech[((<i64>log[y] - lx) % qm1 + qm1) % qm1]
    if z < 0:
        return 0
    return exp[(lx + z) % qm1]


def poly_right_mul(cnp.int8_t[:, :, ::1] state, i64[:, :, ::1] gens, i64[::1] letters, i64 p, Py_ssize_t width):
    cdef Py_ssize_t B = state.shape[0], L = state.shape[2], D1 = gens.shape[2]
    cdef Py_ssize_t i, j, m, hi
    cdef i64 l, s0, s1, s2, s3
    cdef i64[:, ::1] acc = np.zeros((4, L), dtype=np.int64)
    cdef Py_ssize_t w = width if width < L else L
    for i in range(B):
        l = letters[i]
        acc[:, :] = 0
        for j in range(D1):
            s0 = gens[l, 0, j]; s1 = gens[l, 1, j]; s2 = gens[l, 2, j]; s3 = gens[l, 3, j]
            hi = w + j
            if hi > L:
                hi = L
            for m in range(j, hi):
                acc[0, m] += state[i, 0, m - j] * s0 + state[i, 1, m - j] * s2
                acc[1, m] += state[i, 0, m - j] * s1 + state[i, 1, m - j] * s3
                acc[2, m] += state[i, 2, m - j] * s0 + state[i, 3, m - j] * s2
                acc[3, m] += state[i, 2, m - j] * s1 + state[i, 3, m - j] * s3
        for j in range(4):
            for m in range(L):
                state[i, j, m] = <cnp.int8_t>(acc[j, m] % p)
