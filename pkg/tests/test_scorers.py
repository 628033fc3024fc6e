import numpy as np
import pytest
from conftest import random_graph

from graphnotice import scorers
from graphnotice.graph import Graph
from graphnotice.rng import DeterministicRng
from graphnotice.scorers import (EnsembleEdgeScorer, ScorerConfig,
                                 build_knn_graph, cosine_score,
                                 gcn_link_scorer, property_logistic_score,
                                 sample_negative_pairs, svd_score,
                                 train_ensemble_scorer)

FAST = ScorerConfig(hidden_dim=8, epochs=15, k_nn=3, knn_rebuild_interval=5)


def test_knn_graph_examples():
    same = np.ones((3, 2))
    g = build_knn_graph(same, 1)
    assert g.edges <= {(0, 1), (0, 2), (1, 2)}
    assert (0, 1) in g.edges  # lowest-index tie-break for nodes 0 and 1
    ortho = np.eye(3)
    g = build_knn_graph(ortho, 1)
    assert (0, 1) in g.edges
    with pytest.raises(ValueError):
        build_knn_graph(same, 3)


def test_knn_graph_brute_force_line():
    pts = np.array([[1.0], [2.0], [3.0], [-4.0]])
    g = build_knn_graph(pts, 1)
    # cosine in 1-D is sign-based: 0,1,2 mutually at similarity 1, node 3 at
    # -1 to everyone; ties break to the lowest index, so every node picks its
    # lowest-index candidate
    assert g.edges == frozenset({(0, 1), (0, 2), (0, 3)})


def test_negative_sampling_contracts(rng):
    g = random_graph(rng, 10, 0.3)
    negs = sample_negative_pairs(g, 12, rng)
    assert len(negs) == 12
    assert len(set(negs)) == 12
    assert all(e not in g.edges for e in negs)
    full = Graph(3, [(0, 1), (1, 2), (0, 2)])
    with pytest.raises(ValueError):
        sample_negative_pairs(full, 1, rng)


def test_subscore_and_attention_invariants(rng):
    g = random_graph(rng.substream(0), 20, 0.2, feature_dim=6)
    model = EnsembleEdgeScorer(g, FAST, rng.substream(1))
    pairs = [(0, 1), (2, 5), (7, 9)]
    final, subs, weights = model.forward_pairs(pairs)
    for m in FAST.modules:
        assert np.all(subs[m].data >= 0) and np.all(subs[m].data <= 1)
    w = np.stack([weights[m].data for m in FAST.modules])
    assert np.allclose(w.sum(axis=0), 1.0, atol=1e-9)
    assert np.all(w >= 0)
    assert np.all(final.data >= 0) and np.all(final.data <= 1)


def test_mp_subscore_identical_features(rng):
    feats = np.ones((4, 3))
    g = Graph(4, [(0, 1), (1, 2)], features=feats)
    model = EnsembleEdgeScorer(g, FAST, rng)
    _, subs, _ = model.forward_pairs([(0, 1)])
    assert subs["P"].data[0] == pytest.approx(1.0)


def test_training_contracts_and_determinism(rng):
    g = random_graph(rng.substream(3), 25, 0.2, feature_dim=6)
    model, log = train_ensemble_scorer(g, FAST, DeterministicRng(9))
    n_pos = g.num_edges
    assert all(k == int(np.ceil(0.9 * n_pos)) for k in log.kept_positives)
    assert len(log.total_loss) == FAST.epochs
    assert log.total_loss[-1] < log.total_loss[0]
    model2, log2 = train_ensemble_scorer(g, FAST, DeterministicRng(9))
    pairs = g.sorted_edges()[:5]
    assert np.array_equal(model.score(pairs), model2.score(pairs))
    assert log.total_loss == log2.total_loss


def test_frozen_matches_live_scores(rng):
    g = random_graph(rng.substream(4), 20, 0.25, feature_dim=5)
    model, _ = train_ensemble_scorer(g, FAST, DeterministicRng(2))
    pairs = [(0, 1), (3, 9), (10, 15)]
    assert np.allclose(model.score(pairs), model.frozen().score(pairs),
                       atol=1e-12)


def test_gcn_link_scorer_single_module(rng):
    g = random_graph(rng.substream(5), 20, 0.25, feature_dim=5)
    model, _ = gcn_link_scorer(g, FAST, DeterministicRng(4))
    final, subs, weights = model.forward_pairs([(0, 1), (2, 3)])
    assert list(subs) == ["G"]
    assert np.all(weights["G"].data == 1.0)
    s = model.frozen().score([(0, 1), (2, 3)])
    assert np.all((0 <= s) & (s <= 1))


def test_svd_score_examples(rng):
    g = Graph(4, [(0, 1), (2, 3)])
    assert np.all(svd_score(g, 0, [(0, 1)]) == 0)
    # block-diagonal rank-2 adjacency reconstructed exactly at rank 2
    s = svd_score(g, 2, [(0, 1), (2, 3), (0, 2)])
    assert s[0] == pytest.approx(1.0, abs=1e-9)
    assert s[2] == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(ValueError):
        svd_score(g, 5, [(0, 1)])


def test_svd_rank1_matches_eigensolver():
    # triangle plus pendant: dominant eigenvalue is strictly largest in
    # magnitude, so the rank-1 SVD reconstruction equals the eigensolver's
    g = Graph(4, [(0, 1), (1, 2), (0, 2), (2, 3)])
    a = g.dense_adjacency()
    vals, vecs = np.linalg.eigh(a)
    i = np.argmax(np.abs(vals))
    recon = vals[i] * np.outer(vecs[:, i], vecs[:, i])
    pairs = [(u, v) for u in range(4) for v in range(u + 1, 4)]
    got = svd_score(g, 1, pairs)
    want = np.clip([recon[u, v] for u, v in pairs], 0, 1)
    assert np.allclose(got, want, atol=1e-6)


def test_cosine_score_examples():
    x = np.array([[1.0, 1.0], [1.0, 0.0], [1.0, 1.0], [0.0, 0.0]])
    s = cosine_score(x, [(0, 2), (0, 1), (0, 3)])
    assert s[0] == pytest.approx(1.0)
    assert s[1] == pytest.approx((np.sqrt(2) / 2 + 1) / 2)
    assert s[2] == pytest.approx(0.5)


def test_property_logistic_fallback_and_separable(rng):
    const = Graph(6, [(i, i + 1) for i in range(5)] + [(0, 5)],
                  features=np.eye(6))
    with pytest.warns(UserWarning):
        s = property_logistic_score(const, "degree", [(0, 2)], rng)
    assert np.all(s == 0.5)
    g = random_graph(rng.substream(1), 30, 0.2)
    s = property_logistic_score(g, "degree", g.sorted_edges(), rng.substream(2))
    assert np.all((0 < s) & (s < 1))


def test_scorer_outputs_finite_and_sized(rng):
    g = random_graph(rng.substream(6), 15, 0.3, feature_dim=4)
    pairs = [(0, 1), (2, 3), (4, 5), (6, 7)]
    for fn in (lambda: cosine_score(g.features, pairs),
               lambda: svd_score(g, 3, pairs),
               lambda: property_logistic_score(g, "clscoef", pairs,
                                               rng.substream(7))):
        s = fn()
        assert s.shape == (4,)
        assert np.all(np.isfinite(s))
