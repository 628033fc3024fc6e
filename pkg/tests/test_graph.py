import numpy as np
import pytest

from graphnotice.graph import AttackPair, Graph, GraphError, canonical_edge, edge_sets


def test_canonical_edge_orders_and_rejects_loops():
    assert canonical_edge(3, 1) == (1, 3)
    assert canonical_edge(1, 3) == (1, 3)
    with pytest.raises(GraphError):
        canonical_edge(2, 2)


def test_graph_rejects_duplicates_and_out_of_range():
    with pytest.raises(GraphError):
        Graph(3, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        Graph(3, [(0, 5)])
    with pytest.raises(GraphError):
        Graph(3, [(0, 0)])


def test_degree_sum_is_twice_edge_count(rng):
    from conftest import random_graph
    for i in range(20):
        g = random_graph(rng.substream(i), 12, 0.3)
        assert g.degree_vector().sum() == 2 * g.num_edges


def test_feature_shape_enforced():
    with pytest.raises(GraphError):
        Graph(3, [], features=np.zeros((2, 4)))


def test_csr_arrays_consistent():
    g = Graph(4, [(0, 1), (1, 2), (0, 3)])
    indptr, indices = g.csr_arrays()
    assert indptr.tolist() == [0, 2, 4, 5, 6]
    assert indices[indptr[1]:indptr[2]].tolist() == [0, 2]


def test_edge_sets_identity():
    g = Graph(3, [(0, 1), (1, 2)])
    e, e_hat, e0, labels = edge_sets(AttackPair(g, g))
    assert e0 == [(0, 1), (1, 2)]
    assert labels.tolist() == [1, 1]


def test_edge_sets_insertions():
    g = Graph(4, [(0, 1)])
    g_hat = g.with_edges([(0, 1), (1, 2), (2, 3)])
    _, _, e0, labels = edge_sets(AttackPair(g, g_hat))
    assert len(e0) == 3
    assert labels.sum() == 1
    assert (labels == 0).sum() == 2


def test_edge_sets_deleted_edge_stays_positive():
    g = Graph(3, [(0, 1), (1, 2)])
    g_hat = g.with_edges([(1, 2)])
    _, _, e0, labels = edge_sets(AttackPair(g, g_hat))
    assert (0, 1) in e0
    assert labels[e0.index((0, 1))] == 1


def test_node_set_mismatch_rejected():
    with pytest.raises(GraphError):
        AttackPair(Graph(3, []), Graph(4, []))
