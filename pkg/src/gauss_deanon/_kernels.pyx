# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels. Mirrors _kernels_py exactly."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY

cnp.import_array()


cdef inline Py_ssize_t _find(Py_ssize_t[::1] parent, Py_ssize_t x) noexcept nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def threshold_components(cov, double threshold):
    cdef const double[:, ::1] c = np.ascontiguousarray(cov, dtype=np.float64)
    cdef Py_ssize_t n = c.shape[0]
    cdef Py_ssize_t i, j, ri, rj, count = 0
    cdef cnp.ndarray[cnp.int64_t, ndim=2] buf = np.empty((n * (n - 1) // 2 if n > 1 else 0, 2), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] e = buf
    cdef Py_ssize_t[::1] parent = np.arange(n, dtype=np.intp)
    cdef cnp.ndarray[cnp.int64_t, ndim=1] labels = np.empty(n, dtype=np.int64)

    with nogil:
        for i in range(n):
            for j in range(i + 1, n):
                if fabs(c[i, j]) >= threshold:
                    e[count, 0] = i
                    e[count, 1] = j
                    count += 1
                    ri = _find(parent, i)
                    rj = _find(parent, j)
                    if ri != rj:
                        if rj < ri:
                            ri, rj = rj, ri
                        parent[rj] = ri
    for i in range(n):
        labels[i] = _find(parent, i)
    return buf[:count].copy(), labels


cdef inline bint _next_permutation(Py_ssize_t[::1] p, Py_ssize_t s) noexcept nogil:
    cdef Py_ssize_t i = s - 2, j, lo, hi, t
    while i >= 0 and p[i] >= p[i + 1]:
        i -= 1
    if i < 0:
        return False
    j = s - 1
    while p[j] <= p[i]:
        j -= 1
    t = p[i]; p[i] = p[j]; p[j] = t
    lo = i + 1
    hi = s - 1
    while lo < hi:
        t = p[lo]; p[lo] = p[hi]; p[hi] = t
        lo += 1
        hi -= 1
    return True


def perm_distances(a_means, a_corr, b_means, b_corr):
    cdef const double[::1] am = np.ascontiguousarray(a_means, dtype=np.float64)
    cdef const double[:, ::1] ac = np.ascontiguousarray(a_corr, dtype=np.float64)
    cdef const double[:, ::1] bm = np.ascontiguousarray(b_means, dtype=np.float64)
    cdef const double[:, :, ::1] bc = np.ascontiguousarray(b_corr, dtype=np.float64)
    cdef Py_ssize_t s = am.shape[0]
    cdef Py_ssize_t k = bm.shape[0]
    cdef Py_ssize_t c, i, j, pi, pj, t
    cdef double d, x, bv
    cdef Py_ssize_t[::1] p = np.empty(s, dtype=np.intp)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] best_arr = np.full(k, np.inf)
    cdef cnp.ndarray[cnp.int64_t, ndim=2] perm_arr = np.zeros((k, s), dtype=np.int64)
    cdef double[::1] best = best_arr
    cdef cnp.int64_t[:, ::1] best_perm = perm_arr

    with nogil:
        for c in range(k):
            for i in range(s):
                p[i] = i
            while True:
                d = 0.0
                for i in range(s):
                    x = fabs(bm[c, p[i]] - am[i])
                    if x > d:
                        d = x
                    if d >= best[c]:
                        break
                if d < best[c]:
                    for i in range(s):
                        pi = p[i]
                        for j in range(i + 1, s):
                            pj = p[j]
                            if pi < pj:
                                bv = bc[c, pi, pj]
                            else:
                                bv = bc[c, pj, pi]
                            x = fabs(bv - ac[i, j])
                            if x > d:
                                d = x
                        if d >= best[c]:
                            break
                if d < best[c]:
                    best[c] = d
                    for i in range(s):
                        best_perm[c, i] = p[i]
                if not _next_permutation(p, s):
                    break
    return best_arr, perm_arr
