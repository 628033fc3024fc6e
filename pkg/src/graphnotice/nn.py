"""GCN building blocks on top of the autodiff engine, plus checkpoint I/O."""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .graph import Graph
from .rng import DeterministicRng


@dataclass
class GcnConfig:
    layers: int = 2
    hidden_dim: int = 64
    dropout_rate: float = 0.0
    lr: float = 0.01
    epochs: int = 200

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if not (0.0 <= self.dropout_rate < 1.0):
            raise ValueError("dropout_rate must be in [0, 1)")


def normalized_adjacency(g: Graph) -> T.Tensor:
    """Constant tensor D~^{-1/2} (A + I) D~^{-1/2}."""
    a = g.dense_adjacency() + np.eye(g.n)
    d = a.sum(axis=1)
    inv_sqrt = 1.0 / np.sqrt(d)
    return T.Tensor(a * inv_sqrt[:, None] * inv_sqrt[None, :])


def normalized_adjacency_from_dense(a: T.Tensor) -> T.Tensor:
    """Differentiable D~^{-1/2} (A + I) D~^{-1/2} for a dense adjacency tensor."""
    n = a.data.shape[0]
    a_tilde = T.add(a, T.Tensor(np.eye(n)))
    d = T.tsum(a_tilde, axis=1, keepdims=True)
    inv_sqrt = T.power(d, -0.5)
    scaled = T.mul(a_tilde, inv_sqrt)              # row scaling (n,1) broadcast
    return T.mul(scaled, transpose_rowvec(inv_sqrt))


def transpose_rowvec(v: T.Tensor) -> T.Tensor:
    """(n,1) -> (1,n) with gradient passthrough."""
    data = v.data.T

    def backward(g):
        if v.requires_grad:
            v._accumulate(g.T)

    return T._make(data, (v,), backward)


def glorot(rng: DeterministicRng, fan_in: int, fan_out: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.generator.uniform(-limit, limit, size=(fan_in, fan_out))


@dataclass
class GcnParams:
    weights: list = field(default_factory=list)
    biases: list = field(default_factory=list)

    def tensors(self):
        return list(self.weights) + list(self.biases)


def init_gcn_params(cfg: GcnConfig, in_dim: int, out_dim: int,
                    rng: DeterministicRng) -> GcnParams:
    dims = [in_dim] + [cfg.hidden_dim] * (cfg.layers - 1) + [out_dim]
    params = GcnParams()
    for i in range(cfg.layers):
        params.weights.append(T.Tensor(glorot(rng, dims[i], dims[i + 1]),
                                       requires_grad=True))
        params.biases.append(T.Tensor(np.zeros((1, dims[i + 1])), requires_grad=True))
    return params


def gcn_forward(a_hat: T.Tensor, x: T.Tensor, params: GcnParams,
                dropout_rate: float = 0.0, rng: DeterministicRng | None = None):
    """H^{l+1} = relu(A_hat H^l W + b); final layer linear.

    Returns (last hidden embeddings, output of the final layer). For a
    1-layer net the embeddings are the inputs.
    """
    h = x
    n_layers = len(params.weights)
    emb = h
    for i in range(n_layers):
        h = T.add(T.matmul(T.matmul(a_hat, h), params.weights[i]), params.biases[i])
        if i < n_layers - 1:
            h = T.relu(h)
            if dropout_rate > 0.0:
                if rng is None:
                    raise ValueError("dropout requires an rng")
                mask = (rng.random(h.data.shape) >= dropout_rate) / (1.0 - dropout_rate)
                h = T.mul(h, T.Tensor(mask))
            emb = h
    return emb, h


_MAGIC = b"GNCKPT1\n"


def save_params(path, named_arrays: dict[str, np.ndarray]):
    """Versioned binary checkpoint; write -> read -> write is byte-identical."""
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<I", len(named_arrays)))
        for name in sorted(named_arrays):
            arr = np.ascontiguousarray(named_arrays[name], dtype=np.float64)
            nb = name.encode("utf-8")
            f.write(struct.pack("<I", len(nb)))
            f.write(nb)
            f.write(struct.pack("<I", arr.ndim))
            for d in arr.shape:
                f.write(struct.pack("<q", d))
            f.write(arr.tobytes())


def load_params(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as f:
        if f.read(len(_MAGIC)) != _MAGIC:
            raise ValueError("bad checkpoint magic")
        (count,) = struct.unpack("<I", f.read(4))
        out = {}
        for _ in range(count):
            (nlen,) = struct.unpack("<I", f.read(4))
            name = f.read(nlen).decode("utf-8")
            (ndim,) = struct.unpack("<I", f.read(4))
            shape = tuple(struct.unpack("<q", f.read(8))[0] for _ in range(ndim))
            size = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(f.read(size * 8), dtype=np.float64).reshape(shape)
            out[name] = arr.copy()
        return out
