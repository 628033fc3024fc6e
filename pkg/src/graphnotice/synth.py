"""Seeded synthetic benchmarks: a two-block stochastic block model with
class-correlated Gaussian features, and a rank-1 binary feature fixture."""

from __future__ import annotations

import numpy as np

from .graph import Graph
from .rng import DeterministicRng


def sbm_two_block(n: int = 300, p_in: float = 0.1, p_out: float = 0.01,
                  feature_dim: int = 16, feature_shift: float = 1.0,
                  rng: DeterministicRng | None = None):
    """Two equal blocks, within-block edge prob p_in, across p_out.

    Features are standard Gaussians shifted by +-feature_shift along a random
    unit direction per class. Returns (Graph, labels).
    """
    if rng is None:
        rng = DeterministicRng(0)
    labels = np.zeros(n, dtype=np.int64)
    labels[n // 2:] = 1
    gen = rng.substream(0).generator
    iu, ju = np.triu_indices(n, k=1)
    same = labels[iu] == labels[ju]
    prob = np.where(same, p_in, p_out)
    mask = gen.random(iu.size) < prob
    edges = {(int(u), int(v)) for u, v in zip(iu[mask], ju[mask])}
    fgen = rng.substream(1).generator
    direction = fgen.normal(size=feature_dim)
    direction /= np.linalg.norm(direction)
    x = fgen.normal(size=(n, feature_dim))
    x += np.where(labels[:, None] == 0, -feature_shift, feature_shift) * direction
    return Graph(n=n, edges=edges, features=x), labels


def rank1_binary_features(n: int = 200, k: int = 50, n_patterns: int = 4,
                          rng: DeterministicRng | None = None) -> np.ndarray:
    """Binary matrix built from a few shared on-patterns plus sparse noise.

    Each node copies one of n_patterns prototype rows and flips a little
    noise in, giving strong low-rank structure for a feature scorer to learn.
    """
    if rng is None:
        rng = DeterministicRng(0)
    gen = rng.generator
    prototypes = (gen.random((n_patterns, k)) < 0.3).astype(np.float64)
    assign = gen.integers(0, n_patterns, size=n)
    x = prototypes[assign]
    noise = gen.random((n, k)) < 0.02
    x = np.where(noise, 1.0 - x, x)
    return x
