"""Closed-form graph statistics: degrees, clustering, homophily, centrality, Katz."""

from __future__ import annotations

import numpy as np

from . import _kernels
from .graph import Graph


class KatzDivergenceError(RuntimeError):
    pass


def degrees(g: Graph) -> np.ndarray:
    return g.degree_vector().copy()


def clustering_coefficients(g: Graph) -> np.ndarray:
    """c_i = (#edges among N_i) / C(d_i, 2), with c_i = 0 when d_i < 2."""
    indptr, indices = g.csr_arrays()
    tri = _kernels.triangle_edge_counts(indptr, indices, g.n)
    d = g.degree_vector().astype(np.float64)
    denom = d * (d - 1.0) / 2.0
    out = np.zeros(g.n, dtype=np.float64)
    mask = denom > 0
    out[mask] = tri[mask] / denom[mask]
    return out


def homophily_aggregate(g: Graph) -> np.ndarray:
    """Row i = sum_{j in N_i} X_j / (sqrt(d_j) sqrt(d_i)); zero rows for d_i = 0."""
    if g.features is None:
        raise ValueError("node features required for homophily")
    d = g.degree_vector().astype(np.float64)
    inv_sqrt = np.zeros(g.n)
    nz = d > 0
    inv_sqrt[nz] = 1.0 / np.sqrt(d[nz])
    scaled = g.features * inv_sqrt[:, None]
    agg = np.zeros_like(g.features)
    for u, v in g.edges:
        agg[u] += scaled[v]
        agg[v] += scaled[u]
    return agg * inv_sqrt[:, None]


def node_homophily(g: Graph) -> np.ndarray:
    """Cosine similarity of each node's features to its normalized neighbor sum.

    Isolated nodes and zero-norm vectors (either side) score 0.
    """
    agg = homophily_aggregate(g)
    x = g.features
    nx = np.linalg.norm(x, axis=1)
    na = np.linalg.norm(agg, axis=1)
    denom = nx * na
    out = np.zeros(g.n, dtype=np.float64)
    ok = denom > 0
    out[ok] = np.einsum("ij,ij->i", x[ok], agg[ok]) / denom[ok]
    return out


def betweenness_centrality(g: Graph) -> np.ndarray:
    """Brandes betweenness, normalized by (n-1)(n-2)/2."""
    if g.n < 3:
        return np.zeros(g.n, dtype=np.float64)
    indptr, indices = g.csr_arrays()
    bc = _kernels.brandes_betweenness(indptr, indices, g.n)
    return bc / ((g.n - 1) * (g.n - 2) / 2.0)


def katz_similarity(g: Graph, beta: float, tolerance: float = 1e-8,
                    max_terms: int = 1000) -> np.ndarray:
    """Katz index sum_{l>=1} beta^l (A^l)_{uv}, truncated at `tolerance`.

    Raises KatzDivergenceError when increments grow for 3 consecutive terms.
    """
    a = g.dense_adjacency()
    term = beta * a
    total = term.copy()
    prev_norm = np.abs(term).max() if g.n else 0.0
    growth = 0
    for _ in range(max_terms - 1):
        term = beta * (a @ term)
        norm = np.abs(term).max()
        if norm < tolerance:
            break
        total += term
        if norm > prev_norm:
            growth += 1
            if growth >= 3:
                raise KatzDivergenceError(
                    f"Katz series diverging at beta={beta}; increments growing")
        else:
            growth = 0
        prev_norm = norm
    return total
