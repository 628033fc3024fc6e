"""Hot numeric kernels.

Each kernel has a single nopython-compatible definition; when numba is
available (and GRAPHNOTICE_NO_NUMBA is unset) the definitions are JIT
compiled, otherwise the plain-Python versions run as-is. Both paths produce
bitwise-identical results. `benchmarks/bench_kernels.py` compares them.
"""

from __future__ import annotations

import os

import numpy as np

USE_NUMBA = os.environ.get("GRAPHNOTICE_NO_NUMBA", "") == ""
if USE_NUMBA:
    try:
        from numba import njit
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if not USE_NUMBA:
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


@njit(cache=True)
def brandes_betweenness(indptr, indices, n):
    """Shortest-path betweenness via Brandes' accumulation, unnormalized.

    Each unordered pair is counted once (undirected convention: the
    accumulated dependencies are halved).
    """
    bc = np.zeros(n, dtype=np.float64)
    sigma = np.zeros(n, dtype=np.float64)
    dist = np.zeros(n, dtype=np.int64)
    delta = np.zeros(n, dtype=np.float64)
    order = np.zeros(n, dtype=np.int64)
    queue = np.zeros(n, dtype=np.int64)
    # Predecessor lists stored flat: each node's predecessors fit in its degree.
    pred = np.zeros(indices.shape[0], dtype=np.int64)
    pred_count = np.zeros(n, dtype=np.int64)
    for s in range(n):
        sigma[:] = 0.0
        dist[:] = -1
        delta[:] = 0.0
        pred_count[:] = 0
        sigma[s] = 1.0
        dist[s] = 0
        head = 0
        tail = 0
        queue[tail] = s
        tail += 1
        n_order = 0
        while head < tail:
            v = queue[head]
            head += 1
            order[n_order] = v
            n_order += 1
            for j in range(indptr[v], indptr[v + 1]):
                w = indices[j]
                if dist[w] < 0:
                    dist[w] = dist[v] + 1
                    queue[tail] = w
                    tail += 1
                if dist[w] == dist[v] + 1:
                    sigma[w] += sigma[v]
                    pred[indptr[w] + pred_count[w]] = v
                    pred_count[w] += 1
        for i in range(n_order - 1, -1, -1):
            w = order[i]
            coeff = (1.0 + delta[w]) / sigma[w]
            for j in range(pred_count[w]):
                v = pred[indptr[w] + j]
                delta[v] += sigma[v] * coeff
            if w != s:
                bc[w] += delta[w]
    return bc / 2.0


@njit(cache=True)
def triangle_edge_counts(indptr, indices, n):
    """tri[i] = number of edges among the neighbors of i (sorted CSR input)."""
    tri = np.zeros(n, dtype=np.int64)
    for u in range(n):
        for j in range(indptr[u], indptr[u + 1]):
            v = indices[j]
            if v <= u:
                continue
            # count common neighbors of edge (u, v); each contributes to tri
            # of the common neighbor's opposite endpoints
            a = indptr[u]
            b = indptr[v]
            while a < indptr[u + 1] and b < indptr[v + 1]:
                x = indices[a]
                y = indices[b]
                if x == y:
                    tri[x] += 1
                    a += 1
                    b += 1
                elif x < y:
                    a += 1
                else:
                    b += 1
    return tri


@njit(cache=True)
def ks_statistic_sorted(x, y):
    """Two-sample KS D for pre-sorted samples (right-continuous ECDFs)."""
    nx = x.shape[0]
    ny = y.shape[0]
    i = 0
    j = 0
    d = 0.0
    while i < nx and j < ny:
        if x[i] <= y[j]:
            t = x[i]
        else:
            t = y[j]
        while i < nx and x[i] <= t:
            i += 1
        while j < ny and y[j] <= t:
            j += 1
        diff = abs(i / nx - j / ny)
        if diff > d:
            d = diff
    return d
