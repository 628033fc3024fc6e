"""Undirected simple graphs and original/attacked graph pairs."""

from __future__ import annotations

import numpy as np


class GraphError(ValueError):
    pass


def canonical_edge(u: int, v: int) -> tuple[int, int]:
    if u == v:
        raise GraphError(f"self-loop ({u},{v}) not allowed")
    return (u, v) if u < v else (v, u)


class Graph:
    """Undirected simple graph with optional node features and labels.

    Edges are stored as a frozenset of (u, v) pairs with u < v, 0-based.
    Instances are immutable after construction; derived quantities
    (adjacency sets, degree vector) are cached lazily.
    """

    def __init__(self, n, edges, features=None, labels=None):
        n = int(n)
        if n < 0:
            raise GraphError("negative node count")
        es = set()
        for u, v in edges:
            u, v = int(u), int(v)
            e = canonical_edge(u, v)
            if not (0 <= u < n and 0 <= v < n):
                raise GraphError(f"edge ({u},{v}) out of range for n={n}")
            if e in es:
                raise GraphError(f"duplicate edge ({u},{v})")
            es.add(e)
        self.n = n
        self.edges = frozenset(es)
        if features is not None:
            features = np.asarray(features, dtype=np.float64)
            if features.ndim != 2 or features.shape[0] != n:
                raise GraphError(f"feature matrix must be n x k with n={n}")
        self.features = features
        if labels is not None:
            labels = np.asarray(labels, dtype=np.int64)
            if labels.shape != (n,):
                raise GraphError("label vector length must equal n")
        self.labels = labels
        self._adj = None
        self._deg = None

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def adjacency_sets(self) -> list[set]:
        if self._adj is None:
            adj = [set() for _ in range(self.n)]
            for u, v in self.edges:
                adj[u].add(v)
                adj[v].add(u)
            self._adj = adj
        return self._adj

    def degree_vector(self) -> np.ndarray:
        if self._deg is None:
            deg = np.zeros(self.n, dtype=np.int64)
            for u, v in self.edges:
                deg[u] += 1
                deg[v] += 1
            self._deg = deg
        return self._deg

    def dense_adjacency(self) -> np.ndarray:
        a = np.zeros((self.n, self.n), dtype=np.float64)
        for u, v in self.edges:
            a[u, v] = 1.0
            a[v, u] = 1.0
        return a

    def has_edge(self, u: int, v: int) -> bool:
        return canonical_edge(u, v) in self.edges

    def sorted_edges(self) -> list[tuple[int, int]]:
        return sorted(self.edges)

    def with_edges(self, edges) -> "Graph":
        """Copy of this graph with a replaced edge set (features/labels kept)."""
        return Graph(self.n, edges, features=self.features, labels=self.labels)

    def csr_arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """(indptr, indices) of the symmetric adjacency, neighbors sorted."""
        adj = self.adjacency_sets()
        deg = self.degree_vector()
        indptr = np.zeros(self.n + 1, dtype=np.int64)
        np.cumsum(deg, out=indptr[1:])
        indices = np.empty(int(indptr[-1]), dtype=np.int64)
        for i in range(self.n):
            nb = sorted(adj[i])
            indices[indptr[i]:indptr[i + 1]] = nb
        return indptr, indices

    def __eq__(self, other):
        if not isinstance(other, Graph):
            return NotImplemented
        if self.n != other.n or self.edges != other.edges:
            return False
        if (self.features is None) != (other.features is None):
            return False
        if self.features is not None and not np.array_equal(self.features, other.features):
            return False
        if (self.labels is None) != (other.labels is None):
            return False
        if self.labels is not None and not np.array_equal(self.labels, other.labels):
            return False
        return True

    def __repr__(self):
        return f"Graph(n={self.n}, m={self.num_edges})"


class AttackPair:
    """An original graph G and its attacked counterpart on the same node set."""

    def __init__(self, original: Graph, attacked: Graph):
        if original.n != attacked.n:
            raise GraphError("original and attacked graphs must share the node set")
        self.original = original
        self.attacked = attacked


def edge_sets(pair: AttackPair):
    """Return (E, E_hat, E0, labels): E0 = E ∪ Ê sorted, label 1 iff e ∈ E.

    Edges deleted by the attack remain in E0 with a positive label.
    """
    e = pair.original.edges
    e_hat = pair.attacked.edges
    e0 = sorted(e | e_hat)
    labels = np.array([1 if pair_ in e else 0 for pair_ in e0], dtype=np.int64)
    return e, e_hat, e0, labels
