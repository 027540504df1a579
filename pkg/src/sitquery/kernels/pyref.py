"""Pure-Python kernels: the fallback when the compiled extension is absent.

Semantics match sitquery.kernels._cy operation for operation, including
floating-point evaluation order, so both backends produce identical results.
Keep the two files in sync when touching either.
"""

from __future__ import annotations

import numpy as np

INF = float("inf")


def pairwise_dots(a, b):
    """Dot products between the rows of a (n, d) and b (m, d), as an (n, m) array."""
    a_rows = [list(map(float, row)) for row in a]
    b_rows = [list(map(float, row)) for row in b]
    n = len(a_rows)
    m = len(b_rows)
    d = len(a_rows[0]) if a_rows else (len(b_rows[0]) if b_rows else 0)
    out = np.empty((n, m), dtype=np.float64)
    for i in range(n):
        ai = a_rows[i]
        for j in range(m):
            bj = b_rows[j]
            s = 0.0
            for k in range(d):
                s += ai[k] * bj[k]
            out[i, j] = s
    return out


def linkage_average(dist):
    """Average-linkage agglomerative merge sequence over a full distance matrix.

    Returns n-1 merges as (label_a, label_b, distance) with label_a < label_b;
    original points are labeled 0..n-1 and the merge performed at step t creates
    label n+t. Cluster distances follow the Lance-Williams average-linkage
    update; the next merge is always the globally closest active pair, ties
    resolved by lowest slot index (deterministic for any input).
    """
    n = len(dist)
    if n < 2:
        return []
    D = [list(map(float, row)) for row in dist]
    for i in range(n):
        D[i][i] = INF

    active = [True] * n
    label = list(range(n))
    size = [1] * n
    nn_idx = [0] * n
    nn_d = [INF] * n

    def rescan(i):
        best_j = -1
        best = INF
        row = D[i]
        for j in range(n):
            if j != i and active[j] and row[j] < best:
                best = row[j]
                best_j = j
        nn_idx[i] = best_j
        nn_d[i] = best

    for i in range(n):
        rescan(i)

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
        merges.append((la, lb, best))

        s = best_i if best_i < best_j else best_j
        t = best_j if best_i < best_j else best_i
        ns = size[s]
        nt = size[t]
        total = ns + nt
        for u in range(n):
            if active[u] and u != s and u != t:
                d_new = (ns * D[s][u] + nt * D[t][u]) / total
                D[s][u] = d_new
                D[u][s] = d_new
        active[t] = False
        size[s] = total
        label[s] = n + step

        rescan(s)
        for u in range(n):
            if not active[u] or u == s:
                continue
            if nn_idx[u] == s or nn_idx[u] == t:
                rescan(u)
            elif D[u][s] < nn_d[u]:
                nn_idx[u] = s
                nn_d[u] = D[u][s]

    return merges
