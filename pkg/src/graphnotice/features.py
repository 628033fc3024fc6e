"""Feature-attack noticeability: co-occurrence scoring and the autoencoder
feature scorer, aggregated with the same AUROC convention as edge scoring."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import tensor as T
from .noticeability import auroc
from .rng import DeterministicRng
from .stattests import NoticeabilityReport

FEATURE_MEASURE_AUTOENCODER = "feature_autoencoder_auroc"
FEATURE_MEASURE_COOCCUR = "feature_cooccur_auroc"


def binarize_features(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x)
    binary = (x > 0).astype(np.float64)
    if not np.array_equal(binary, x):
        warnings.warn("non-binary features thresholded at > 0 for co-occurrence")
    return binary


class CoOccurrenceGraph:
    """Feature co-occurrence topology: features i, j are linked iff some node
    carries both."""

    def __init__(self, x_binary: np.ndarray):
        n, k = x_binary.shape
        self.k = k
        adj = [set() for _ in range(k)]
        for v in range(n):
            present = np.flatnonzero(x_binary[v] > 0)
            for a in range(present.size):
                for b in range(a + 1, present.size):
                    i, j = int(present[a]), int(present[b])
                    adj[i].add(j)
                    adj[j].add(i)
        self.adj = adj
        self.degree = np.array([len(s) for s in adj], dtype=np.int64)


def cooccur_score(x_hat: np.ndarray, entry: tuple[int, int]) -> float:
    """Random-walk co-occurrence noticeability of setting feature i on node v.

    On the co-occurrence graph of X' (the candidate entry removed):
    p(i|S_v) = (1/|S_v|) sum_{j in S_v} E_ij / d_j, sigma = (1/2) sum 1/d_j,
    score = (1 - p(i|S_v)) / (2 sigma). Higher = more noticeable.
    """
    v, i = entry
    x = binarize_features(x_hat)
    x_prime = x.copy()
    x_prime[v, i] = 0.0
    graph = CoOccurrenceGraph(x_prime)
    s_v = np.flatnonzero(x_prime[v] > 0)
    if s_v.size == 0:
        raise ValueError(f"node {v} has no other features present")
    deg = graph.degree[s_v]
    if np.any(deg == 0):
        raise ValueError("isolated feature in the co-occurrence graph")
    hits = np.array([1.0 if i in graph.adj[j] else 0.0 for j in s_v.tolist()])
    p = float((hits / deg).sum() / s_v.size)
    sigma = 0.5 * float((1.0 / deg).sum())
    return (1.0 - p) / (2.0 * sigma)


@dataclass
class AutoencoderConfig:
    hidden_dims: tuple = (128, 32)
    epochs: int = 200
    lr: float = 0.01
    keep_percent: float = 90.0
    negative_multiplier: float = 1.0


@dataclass
class FeatureScorerModel:
    weights: list
    biases: list
    cfg: AutoencoderConfig
    train_loss: list = field(default_factory=list)

    def score_matrix(self, x_hat: np.ndarray) -> np.ndarray:
        h = T.Tensor(np.asarray(x_hat, dtype=np.float64))
        n_layers = len(self.weights)
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            h = T.add(T.matmul(h, w), b)
            h = T.sigmoid(h) if i == n_layers - 1 else T.relu(h)
        return h.data.copy()


def train_feature_scorer(x_hat: np.ndarray, cfg: AutoencoderConfig,
                         rng: DeterministicRng) -> FeatureScorerModel:
    """Autoencoder scorer: nonzero entries are pseudo-positives (lowest-scored
    filtered out each epoch), sampled zero entries are negatives."""
    from .nn import glorot
    x = np.asarray(x_hat, dtype=np.float64)
    n, k = x.shape
    pos_rows, pos_cols = np.nonzero(x)
    if pos_rows.size == 0:
        raise ValueError("feature matrix has no nonzero entries")
    zero_rows, zero_cols = np.nonzero(x == 0)
    n_neg = min(int(round(cfg.negative_multiplier * pos_rows.size)), zero_rows.size)
    dims = [k] + list(cfg.hidden_dims) + list(reversed(cfg.hidden_dims[:-1])) + [k]
    init = rng.substream(0)
    weights = [T.Tensor(glorot(init.substream(i), dims[i], dims[i + 1]),
                        requires_grad=True) for i in range(len(dims) - 1)]
    biases = [T.Tensor(np.zeros((1, dims[i + 1])), requires_grad=True)
              for i in range(len(dims) - 1)]
    model = FeatureScorerModel(weights=weights, biases=biases, cfg=cfg)
    opt = T.Adam(weights + biases, lr=cfg.lr)
    n_keep = int(np.ceil(cfg.keep_percent / 100.0 * pos_rows.size))
    neg_rng = rng.substream(1)
    xt = T.Tensor(x)
    for epoch in range(cfg.epochs):
        pick = neg_rng.substream(epoch).choice(zero_rows.size, size=n_neg,
                                               replace=False)
        h = xt
        for i, (w, b) in enumerate(zip(weights, biases)):
            h = T.add(T.matmul(h, w), b)
            h = T.sigmoid(h) if i == len(weights) - 1 else T.relu(h)
        pos_scores = h.data[pos_rows, pos_cols]
        keep = np.lexsort((np.arange(pos_rows.size), -pos_scores))[:n_keep]
        keep = np.sort(keep)
        rows = np.concatenate([pos_rows[keep], zero_rows[pick]])
        cols = np.concatenate([pos_cols[keep], zero_cols[pick]])
        targets = np.concatenate([np.ones(n_keep), np.zeros(n_neg)])
        picked = T.take_pairs(h, rows, cols)
        loss = T.binary_cross_entropy(picked, targets)
        if not np.isfinite(loss.data):
            raise FloatingPointError(f"non-finite loss at epoch {epoch}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        model.train_loss.append(float(loss.data))
    return model


def random_feature_flips(x: np.ndarray, rate: float,
                         rng: DeterministicRng) -> np.ndarray:
    """Test plumbing: flip a uniform fraction of binary feature entries."""
    x = binarize_features(x)
    flat = x.reshape(-1).copy()
    count = int(round(rate * flat.size))
    idx = rng.choice(flat.size, size=count, replace=False)
    flat[idx] = 1.0 - flat[idx]
    return flat.reshape(x.shape)


def feature_measure(x: np.ndarray, x_hat: np.ndarray, scorer: str = "autoencoder",
                    cfg: AutoencoderConfig | None = None,
                    rng: DeterministicRng | None = None,
                    threshold: float = 0.6) -> NoticeabilityReport:
    """AUROC over the union support of X and X_hat, label 1 = nonzero in X.

    Co-occurrence scores are negated so that original entries score high,
    matching the autoencoder orientation.
    """
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise ValueError("feature matrices must share a shape")
    support = np.nonzero((x != 0) | (x_hat != 0))
    labels = (x[support] != 0).astype(np.int64)
    name = FEATURE_MEASURE_COOCCUR if scorer == "cooccur" \
        else FEATURE_MEASURE_AUTOENCODER
    if labels.min() == labels.max():
        return NoticeabilityReport(measure_name=name, statistic=float("nan"),
                                   p_value=None, noticeable_at_05=None,
                                   degenerate=True)
    if scorer == "cooccur":
        scores = np.array([-cooccur_score(x_hat, (int(v), int(i)))
                           for v, i in zip(*support)])
    elif scorer == "autoencoder":
        if rng is None:
            raise ValueError("autoencoder scorer needs an rng")
        model = train_feature_scorer(x_hat, cfg or AutoencoderConfig(), rng)
        scores = model.score_matrix(x_hat)[support]
    else:
        if not hasattr(scorer, "score_matrix"):
            raise ValueError(f"unknown feature scorer {scorer!r}")
        scores = scorer.score_matrix(x_hat)[support]
    value = auroc(labels, scores)
    return NoticeabilityReport(measure_name=name, statistic=value, p_value=None,
                               noticeable_at_05=value >= threshold)
