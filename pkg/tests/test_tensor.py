import math

import numpy as np
import pytest
from conftest import finite_difference_check

from graphnotice import tensor as T
from graphnotice.rng import DeterministicRng


def test_relu_softmax_values():
    assert T.relu(T.Tensor([-1.0, 2.0])).data.tolist() == [0.0, 2.0]
    sm = T.softmax_rows(T.Tensor([[0.0, 0.0]]))
    assert np.allclose(sm.data, [[0.5, 0.5]])


def test_softmax_rows_sum_to_one(rng):
    logits = rng.normal(size=(6, 4))
    sm = T.softmax_rows(T.Tensor(logits))
    assert np.allclose(sm.data.sum(axis=1), 1.0, atol=1e-12)


def test_sigmoid_range(rng):
    s = T.sigmoid(T.Tensor(rng.normal(size=50) * 10))
    assert np.all(s.data > 0) and np.all(s.data < 1)


def test_bce_values():
    assert float(T.binary_cross_entropy(T.Tensor([1.0]), np.array([1.0])).data) \
        == pytest.approx(0.0, abs=1e-6)
    assert float(T.binary_cross_entropy(T.Tensor([0.5]), np.array([0.0])).data) \
        == pytest.approx(math.log(2), abs=1e-12)


def test_adam_single_step():
    w = T.Tensor(np.array([1.0]), requires_grad=True)
    opt = T.Adam([w], lr=0.1)
    loss = T.mul(w, w) * T.Tensor(np.array([0.5]))
    loss = T.tsum(loss)
    opt.zero_grad()
    loss.backward()
    opt.step()
    # Adam first step moves by lr * g/(sqrt(g^2)+eps) ~= lr
    assert float(w.data[0]) == pytest.approx(0.9, abs=1e-6)


def test_matmul_gradcheck(rng):
    a = rng.normal(size=(4, 5))
    b = rng.normal(size=(5, 3))
    finite_difference_check(
        lambda ts: T.tsum(T.mul(T.matmul(ts[0], ts[1]), T.matmul(ts[0], ts[1]))),
        [a, b], tol=1e-6)


@pytest.mark.parametrize("name,build", [
    ("add", lambda ts: T.tsum(T.add(ts[0], ts[1]))),
    ("sub", lambda ts: T.tsum(T.sub(ts[0], ts[1]))),
    ("mul", lambda ts: T.tsum(T.mul(ts[0], ts[1]))),
    ("relu", lambda ts: T.tsum(T.relu(ts[0]))),
    ("sigmoid", lambda ts: T.tsum(T.sigmoid(ts[0]))),
    ("softmax", lambda ts: T.tsum(T.mul(T.softmax_rows(ts[0]), ts[1]))),
    ("mean", lambda ts: T.mean(T.mul(ts[0], ts[1]))),
    ("maximum", lambda ts: T.tsum(T.maximum(ts[0], ts[1]))),
    ("power", lambda ts: T.tsum(T.power(T.sigmoid(ts[0]), -0.5))),
    ("log", lambda ts: T.tsum(T.log(T.sigmoid(ts[0])))),
    ("concat", lambda ts: T.tsum(T.concat([ts[0], ts[1]], axis=1))),
])
def test_op_gradchecks(name, build):
    rng = DeterministicRng(hash(name) % (2 ** 31))
    for i in range(5):
        sub = rng.substream(i)
        a = sub.normal(size=(3, 4)) + 0.05  # keep away from relu/max kinks
        b = sub.normal(size=(3, 4)) - 0.05
        finite_difference_check(build, [a, b])


def test_broadcast_gradcheck(rng):
    a = rng.normal(size=(4, 3))
    b = rng.normal(size=(1, 3))
    finite_difference_check(lambda ts: T.tsum(T.mul(T.add(ts[0], ts[1]), ts[0])),
                            [a, b])


def test_gather_and_pairs_gradcheck(rng):
    a = rng.normal(size=(5, 3))
    idx = np.array([0, 2, 2, 4])
    rows = np.array([0, 1, 1])
    cols = np.array([2, 0, 2])
    finite_difference_check(lambda ts: T.tsum(T.gather_rows(ts[0], idx)), [a])
    finite_difference_check(lambda ts: T.tsum(T.take_pairs(ts[0], rows, cols)),
                            [a])


def test_scatter_symmetric_gradcheck(rng):
    vec = rng.normal(size=4)
    rows = np.array([0, 0, 1, 2])
    cols = np.array([1, 2, 3, 3])
    weight = T.Tensor(rng.normal(size=(4, 4)))
    finite_difference_check(
        lambda ts: T.tsum(T.mul(T.scatter_symmetric(ts[0], rows, cols, 4),
                                weight)), [vec])


def test_cross_entropy_gradcheck(rng):
    logits = rng.normal(size=(6, 3))
    labels = np.array([0, 1, 2, 0, 1, 2])
    idx = np.array([0, 2, 4, 5])
    finite_difference_check(
        lambda ts: T.cross_entropy_logits(ts[0], labels, idx), [logits])


def test_bce_gradcheck(rng):
    raw = rng.normal(size=8)
    targets = (rng.random(8) > 0.5).astype(float)
    finite_difference_check(
        lambda ts: T.binary_cross_entropy(T.sigmoid(ts[0]), targets), [raw])


def test_backward_topological_once(rng):
    a = T.Tensor(rng.normal(size=(3, 3)), requires_grad=True)
    b = T.add(a, a)
    c = T.mul(b, b)
    out = T.tsum(c)
    out.backward()
    # d/da sum((2a)^2) = 8a
    assert np.allclose(a.grad, 8 * a.data)


def test_loss_decreases_on_tiny_task():
    rng = DeterministicRng(3)
    x = rng.normal(size=(10, 4))
    w = T.Tensor(rng.normal(size=(4, 2)) * 0.1, requires_grad=True)
    labels = np.array([0, 1] * 5)
    opt = T.Adam([w], lr=0.05)
    losses = []
    for _ in range(50):
        loss = T.cross_entropy_logits(T.matmul(T.Tensor(x), w), labels)
        opt.zero_grad()
        loss.backward()
        opt.step()
        losses.append(float(loss.data))
    assert np.mean(losses[-10:]) < np.mean(losses[:10])


def test_shape_mismatch_raises(rng):
    with pytest.raises(Exception):
        T.matmul(T.Tensor(rng.normal(size=(2, 3))),
                 T.Tensor(rng.normal(size=(2, 3))))
