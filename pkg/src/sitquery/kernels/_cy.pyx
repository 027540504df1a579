# cython: boundscheck=False, wraparound=False, cdivision=True, language_level=3
"""Compiled kernels: pairwise dot products and the average-linkage merge loop.

Must stay semantically identical to sitquery.kernels.pyref, including
floating-point evaluation order (the build disables FP contraction so both
backends round the same way). Keep the two files in sync when touching either.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

cdef double INF = float("inf")


def pairwise_dots(double[:, :] a, double[:, :] b):
    """Dot products between the rows of a (n, d) and b (m, d), as an (n, m) array."""
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t m = b.shape[0]
    cdef Py_ssize_t d = a.shape[1]
    cdef Py_ssize_t i, j, k
    cdef double s
    out = np.empty((n, m), dtype=np.float64)
    cdef double[:, :] o = out
    for i in range(n):
        for j in range(m):
            s = 0.0
            for k in range(d):
                s += a[i, k] * b[j, k]
            o[i, j] = s
    return out


def linkage_average(double[:, :] dist):
    """Average-linkage agglomerative merge sequence over a full distance matrix.

    Returns n-1 merges as (label_a, label_b, distance) with label_a < label_b;
    original points are labeled 0..n-1 and the merge performed at step t creates
    label n+t. Cluster distances follow the Lance-Williams average-linkage
    update; the next merge is always the globally closest active pair, ties
    resolved by lowest slot index (deterministic for any input).
    """
    cdef Py_ssize_t n = dist.shape[0]
    if n < 2:
        return []

    D_arr = np.array(dist, dtype=np.float64, copy=True)
    cdef double[:, :] D = D_arr
    cdef Py_ssize_t i, j, u, step
    for i in range(n):
        D[i, i] = INF

    active_arr = np.ones(n, dtype=np.int8)
    label_arr = np.arange(n, dtype=np.int64)
    size_arr = np.ones(n, dtype=np.int64)
    nn_idx_arr = np.zeros(n, dtype=np.int64)
    nn_d_arr = np.full(n, INF, dtype=np.float64)
    cdef signed char[:] active = active_arr
    cdef long long[:] label = label_arr
    cdef long long[:] size = size_arr
    cdef long long[:] nn_idx = nn_idx_arr
    cdef double[:] nn_d = nn_d_arr

    cdef Py_ssize_t best_i, best_j, s_slot, t_slot
    cdef double best, d_new
    cdef long long la, lb, ns, nt, total

    for i in range(n):
        _rescan(D, active, nn_idx, nn_d, n, i)

    merges = []
    for step in range(n - 1):
        best_i = -1
        best = INF
        for i in range(n):
            if active[i] and nn_d[i] < best:
                best = nn_d[i]
                best_i = i
        best_j = nn_idx[best_i]

        la = label[best_i]
        lb = label[best_j]
        if la > lb:
            la, lb = lb, la
        merges.append((int(la), int(lb), float(best)))

        s_slot = best_i if best_i < best_j else best_j
        t_slot = best_j if best_i < best_j else best_i
        ns = size[s_slot]
        nt = size[t_slot]
        total = ns + nt
        for u in range(n):
            if active[u] and u != s_slot and u != t_slot:
                d_new = (ns * D[s_slot, u] + nt * D[t_slot, u]) / total
                D[s_slot, u] = d_new
                D[u, s_slot] = d_new
        active[t_slot] = 0
        size[s_slot] = total
        label[s_slot] = n + step

        _rescan(D, active, nn_idx, nn_d, n, s_slot)
        for u in range(n):
            if not active[u] or u == s_slot:
                continue
            if nn_idx[u] == s_slot or nn_idx[u] == t_slot:
                _rescan(D, active, nn_idx, nn_d, n, u)
            elif D[u, s_slot] < nn_d[u]:
                nn_idx[u] = s_slot
                nn_d[u] = D[u, s_slot]

    return merges


cdef inline void _rescan(
    double[:, :] D,
    signed char[:] active,
    long long[:] nn_idx,
    double[:] nn_d,
    Py_ssize_t n,
    Py_ssize_t i,
):
    cdef Py_ssize_t j, best_j = -1
    cdef double best = INF
    for j in range(n):
        if j != i and active[j] and D[i, j] < best:
            best = D[i, j]
            best_j = j
    nn_idx[i] = best_j
    nn_d[i] = best
