import numpy as np
import pytest

from graphnotice import tensor as T
from graphnotice.graph import Graph
from graphnotice.rng import DeterministicRng


def random_graph(rng: DeterministicRng, n: int, p: float,
                 with_features: bool = True, feature_dim: int = 5) -> Graph:
    gen = rng.generator
    iu, ju = np.triu_indices(n, k=1)
    mask = gen.random(iu.size) < p
    edges = {(int(u), int(v)) for u, v in zip(iu[mask], ju[mask])}
    features = gen.normal(size=(n, feature_dim)) if with_features else None
    return Graph(n=n, edges=edges, features=features)


def finite_difference_check(build, params, h=1e-5, tol=1e-4):
    """Central finite differences vs analytic gradients.

    `build` maps a list of numpy arrays to a scalar Tensor; `params` is the
    list of starting arrays. Returns the max relative error observed.
    """
    tensors = [T.Tensor(p.copy(), requires_grad=True) for p in params]
    out = build(tensors)
    out.backward()
    worst = 0.0
    for k, tensor in enumerate(tensors):
        grad = tensor.grad
        if grad is None:  # parameter unused by this composite
            grad = np.zeros_like(tensor.data)
        it = np.nditer(tensor.data, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            plus = [p.copy() for p in params]
            minus = [p.copy() for p in params]
            plus[k][idx] += h
            minus[k][idx] -= h
            f_plus = float(build([T.Tensor(p) for p in plus]).data)
            f_minus = float(build([T.Tensor(p) for p in minus]).data)
            numeric = (f_plus - f_minus) / (2.0 * h)
            denom = max(abs(numeric), abs(grad[idx]), 1e-6)
            worst = max(worst, abs(numeric - grad[idx]) / denom)
    assert worst < tol, f"finite-difference mismatch {worst}"
    return worst


@pytest.fixture
def rng():
    return DeterministicRng(12345)
