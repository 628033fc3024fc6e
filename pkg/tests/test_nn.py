import numpy as np
import pytest
from conftest import finite_difference_check, random_graph

from graphnotice import nn, tensor as T
from graphnotice.graph import Graph
from graphnotice.rng import DeterministicRng


def test_normalized_adjacency_examples():
    single = Graph(1, [])
    assert np.allclose(nn.normalized_adjacency(single).data, [[1.0]])
    two = Graph(2, [(0, 1)])
    assert np.allclose(nn.normalized_adjacency(two).data, 0.5)
    k3 = Graph(3, [(0, 1), (1, 2), (0, 2)])
    assert np.allclose(nn.normalized_adjacency(k3).data.sum(axis=1), 1.0)


def test_normalized_adjacency_from_dense_matches_static(rng):
    g = random_graph(rng, 8, 0.4)
    a = T.Tensor(g.dense_adjacency())
    assert np.allclose(nn.normalized_adjacency_from_dense(a).data,
                       nn.normalized_adjacency(g).data)


def test_gcn_zero_weights_zero_logits(rng):
    g = random_graph(rng, 6, 0.4, feature_dim=4)
    cfg = nn.GcnConfig(layers=2, hidden_dim=8)
    params = nn.init_gcn_params(cfg, 4, 3, rng)
    for w in params.weights:
        w.data[:] = 0.0
    _, logits = nn.gcn_forward(nn.normalized_adjacency(g), T.Tensor(g.features),
                               params)
    assert np.all(logits.data == 0)


def test_gcn_single_node_is_linear(rng):
    g = Graph(1, [], features=rng.normal(size=(1, 4)))
    cfg = nn.GcnConfig(layers=1)
    params = nn.init_gcn_params(cfg, 4, 2, rng)
    _, logits = nn.gcn_forward(nn.normalized_adjacency(g), T.Tensor(g.features),
                               params)
    expect = g.features @ params.weights[0].data + params.biases[0].data
    assert np.allclose(logits.data, expect)


def test_gcn_gradient_wrt_weights_and_adjacency(rng):
    g = random_graph(rng, 6, 0.4, feature_dim=3)
    labels = np.array([0, 1, 0, 1, 0, 1])
    cfg = nn.GcnConfig(layers=2, hidden_dim=5)
    params = nn.init_gcn_params(cfg, 3, 2, rng)
    a0 = g.dense_adjacency()

    def build(ts):
        a_hat = nn.normalized_adjacency_from_dense(ts[0])
        local = nn.GcnParams(weights=[ts[1], ts[2]],
                             biases=[T.Tensor(params.biases[0].data),
                                     T.Tensor(params.biases[1].data)])
        _, logits = nn.gcn_forward(a_hat, T.Tensor(g.features), local)
        return T.cross_entropy_logits(logits, labels)

    finite_difference_check(build, [a0, params.weights[0].data.copy(),
                                    params.weights[1].data.copy()])


def test_dropout_deterministic_given_seed(rng):
    g = random_graph(rng, 6, 0.4, feature_dim=3)
    cfg = nn.GcnConfig(layers=2, hidden_dim=5, dropout_rate=0.5)
    params = nn.init_gcn_params(cfg, 3, 2, rng.substream(0))
    out = []
    for _ in range(2):
        _, logits = nn.gcn_forward(nn.normalized_adjacency(g),
                                   T.Tensor(g.features), params,
                                   dropout_rate=0.5,
                                   rng=DeterministicRng(5))
        out.append(logits.data.copy())
    assert np.array_equal(out[0], out[1])


def test_checkpoint_roundtrip_byte_exact(tmp_path, rng):
    arrays = {"w0": rng.normal(size=(3, 4)), "b0": rng.normal(size=(1, 4))}
    p1 = tmp_path / "a.ckpt"
    p2 = tmp_path / "b.ckpt"
    nn.save_params(p1, arrays)
    loaded = nn.load_params(p1)
    nn.save_params(p2, loaded)
    assert p1.read_bytes() == p2.read_bytes()
    for k in arrays:
        assert np.array_equal(arrays[k], loaded[k])


def test_checkpoint_bad_magic(tmp_path):
    p = tmp_path / "bad.ckpt"
    p.write_bytes(b"NOTMAGIC")
    with pytest.raises(ValueError):
        nn.load_params(p)


def test_gcn_config_validation():
    with pytest.raises(ValueError):
        nn.GcnConfig(layers=0)
    with pytest.raises(ValueError):
        nn.GcnConfig(dropout_rate=1.0)
