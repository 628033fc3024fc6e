"""Edge scorers: the attention-fused ensemble scorer and the baseline scorers.

The ensemble scorer combines three modules:
  - a GCN on the (possibly attacked) input graph,
  - a GCN on a kNN graph built from learned feature embeddings,
  - a feature-proximity module (affine-mapped cosine similarity),
with a per-pair softmax attention over the three sub-scores. It is trained
self-supervised: edges of the input graph are pseudo-positives (the lowest
scored ones filtered out each epoch), sampled non-edges are negatives.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from sklearn.linear_model import LogisticRegression

from . import gstats, nn, tensor as T
from .graph import Graph
from .rng import DeterministicRng


@dataclass
class ScorerConfig:
    hidden_dim: int = 64
    layers: int = 2
    k_nn: int = 20
    keep_percent: float = 90.0
    epochs: int = 200
    lr: float = 0.01
    lambda_sub: float = 1.0
    knn_rebuild_interval: int = 50
    modules: tuple = ("G", "S", "P")


@dataclass
class TrainLog:
    seed: int
    total_loss: list = field(default_factory=list)
    module_losses: list = field(default_factory=list)
    kept_positives: list = field(default_factory=list)


def cosine_similarity_matrix(x: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(x, axis=1)
    safe = np.where(norms > 0, norms, 1.0)
    unit = x / safe[:, None]
    sim = unit @ unit.T
    sim[norms == 0, :] = 0.0
    sim[:, norms == 0] = 0.0
    return sim


def build_knn_graph(embeddings: np.ndarray, k_nn: int) -> Graph:
    """Undirected union of each node's top-k cosine neighbors (ties by index)."""
    n = embeddings.shape[0]
    if k_nn >= n:
        raise ValueError(f"k_nn={k_nn} must be < n={n}")
    sim = cosine_similarity_matrix(embeddings)
    np.fill_diagonal(sim, -np.inf)
    edges = set()
    for i in range(n):
        # descending similarity, ascending index on ties
        order = np.lexsort((np.arange(n), -sim[i]))[:k_nn]
        for j in order.tolist():
            edges.add((i, j) if i < j else (j, i))
    return Graph(n, edges)


def _pairs_arrays(pairs):
    pairs = list(pairs)
    us = np.array([p[0] for p in pairs], dtype=np.int64)
    vs = np.array([p[1] for p in pairs], dtype=np.int64)
    return us, vs


def _bilinear_sigmoid(z: T.Tensor, b: T.Tensor, us, vs) -> T.Tensor:
    zu = T.gather_rows(z, us)
    zv = T.gather_rows(z, vs)
    return T.sigmoid(T.tsum(T.mul(zu, T.matmul(zv, b)), axis=1))


def _attention_logit(z: T.Tensor, w1, b1, w2, b2, us, vs) -> T.Tensor:
    zu = T.gather_rows(z, us)
    zv = T.gather_rows(z, vs)
    feat = T.concat([T.mul(T.add(zu, zv), 0.5), T.maximum(zu, zv)], axis=1)
    h = T.relu(T.add(T.matmul(feat, w1), b1))
    return T.add(T.matmul(h, w2), b2)


class EnsembleEdgeScorer:
    """Trainable three-module edge scorer with softmax attention fusion."""

    def __init__(self, g_hat: Graph, cfg: ScorerConfig, rng: DeterministicRng):
        if g_hat.features is None:
            raise ValueError("scorer requires node features")
        self.cfg = cfg
        self.graph = g_hat
        self.rng = rng
        k = g_hat.features.shape[1]
        h = cfg.hidden_dim
        init = rng.substream(0)
        gcn_cfg = nn.GcnConfig(layers=cfg.layers, hidden_dim=h)
        self.params = {}
        if "G" in cfg.modules:
            self.mg_gcn = nn.init_gcn_params(gcn_cfg, k, h, init.substream(0))
            self.mg_bilinear = T.Tensor(nn.glorot(init.substream(1), h, h),
                                        requires_grad=True)
        if "S" in cfg.modules:
            s = init.substream(2)
            self.ms_mlp_w = T.Tensor(nn.glorot(s.substream(0), k, h), requires_grad=True)
            self.ms_mlp_b = T.Tensor(np.zeros((1, h)), requires_grad=True)
            self.ms_gcn = nn.init_gcn_params(gcn_cfg, h, h, s.substream(1))
            self.ms_bilinear = T.Tensor(nn.glorot(s.substream(2), h, h),
                                        requires_grad=True)
            self.knn_graph = None
        if "P" in cfg.modules:
            self.mp_proj = T.Tensor(nn.glorot(init.substream(3), k, h),
                                    requires_grad=True)
        self.attention = {}
        if len(cfg.modules) > 1:
            for mi, m in enumerate(cfg.modules):
                s = init.substream(10 + mi)
                self.attention[m] = (
                    T.Tensor(nn.glorot(s.substream(0), 2 * h, h), requires_grad=True),
                    T.Tensor(np.zeros((1, h)), requires_grad=True),
                    T.Tensor(nn.glorot(s.substream(1), h, 1), requires_grad=True),
                    T.Tensor(np.zeros((1, 1)), requires_grad=True),
                )
        self._cos = cosine_similarity_matrix(g_hat.features)
        self._a_hat = nn.normalized_adjacency(g_hat)
        self._x = T.Tensor(g_hat.features)

    def trainable(self):
        out = []
        if "G" in self.cfg.modules:
            out += self.mg_gcn.tensors() + [self.mg_bilinear]
        if "S" in self.cfg.modules:
            out += [self.ms_mlp_w, self.ms_mlp_b] + self.ms_gcn.tensors() + \
                   [self.ms_bilinear]
        if "P" in self.cfg.modules:
            out += [self.mp_proj]
        for w1, b1, w2, b2 in self.attention.values():
            out += [w1, b1, w2, b2]
        return out

    def _feature_embedding(self) -> T.Tensor:
        return T.relu(T.add(T.matmul(self._x, self.ms_mlp_w), self.ms_mlp_b))

    def rebuild_knn(self):
        emb = self._feature_embedding().data
        self.knn_graph = build_knn_graph(emb, min(self.cfg.k_nn, self.graph.n - 1))
        self._a_hat_s = nn.normalized_adjacency(self.knn_graph)

    def forward_pairs(self, pairs):
        """Differentiable (final_scores, sub_scores, attention_weights) on pairs."""
        us, vs = _pairs_arrays(pairs)
        subs = {}
        embs = {}
        if "G" in self.cfg.modules:
            _, z_g = nn.gcn_forward(self._a_hat, self._x, self.mg_gcn)
            embs["G"] = z_g
            subs["G"] = _bilinear_sigmoid(z_g, self.mg_bilinear, us, vs)
        if "S" in self.cfg.modules:
            if self.knn_graph is None:
                self.rebuild_knn()
            emb = self._feature_embedding()
            _, z_s = nn.gcn_forward(self._a_hat_s, emb, self.ms_gcn)
            embs["S"] = z_s
            subs["S"] = _bilinear_sigmoid(z_s, self.ms_bilinear, us, vs)
        if "P" in self.cfg.modules:
            embs["P"] = T.matmul(self._x, self.mp_proj)
            subs["P"] = T.Tensor((self._cos[us, vs] + 1.0) / 2.0)
        if len(self.cfg.modules) == 1:
            m = self.cfg.modules[0]
            weights = {m: T.Tensor(np.ones(us.size))}
            return subs[m], subs, weights
        logits = T.concat([
            _attention_logit(embs[m], *self.attention[m], us, vs)
            for m in self.cfg.modules], axis=1)
        att = T.softmax_rows(logits)
        weights = {}
        total = None
        for mi, m in enumerate(self.cfg.modules):
            w = T.take_pairs(att, np.arange(us.size), np.full(us.size, mi))
            weights[m] = w
            contrib = T.mul(w, subs[m])
            total = contrib if total is None else T.add(total, contrib)
        return total, subs, weights

    def score(self, pairs) -> np.ndarray:
        """Final scores in [0,1] for arbitrary node pairs (no gradient)."""
        if not len(pairs):
            return np.zeros(0)
        final, _, _ = self.forward_pairs(pairs)
        return final.data.copy()

    def frozen(self) -> "FrozenScorer":
        """Snapshot with cached embeddings for cheap repeated pair scoring."""
        embs = {}
        bilinears = {}
        if "G" in self.cfg.modules:
            _, z = nn.gcn_forward(self._a_hat, self._x, self.mg_gcn)
            embs["G"] = z.data.copy()
            bilinears["G"] = self.mg_bilinear.data.copy()
        if "S" in self.cfg.modules:
            if self.knn_graph is None:
                self.rebuild_knn()
            emb = self._feature_embedding()
            _, z = nn.gcn_forward(self._a_hat_s, emb, self.ms_gcn)
            embs["S"] = z.data.copy()
            bilinears["S"] = self.ms_bilinear.data.copy()
        if "P" in self.cfg.modules:
            embs["P"] = self._x.data @ self.mp_proj.data
        attention = {m: tuple(t.data.copy() for t in ws)
                     for m, ws in self.attention.items()}
        return FrozenScorer(self.cfg.modules, embs, bilinears, attention, self._cos)


class FrozenScorer:
    """Pure-numpy scorer over cached module embeddings."""

    def __init__(self, modules, embs, bilinears, attention, cos):
        self.modules = modules
        self.embs = embs
        self.bilinears = bilinears
        self.attention = attention
        self.cos = cos

    def score(self, pairs) -> np.ndarray:
        if not len(pairs):
            return np.zeros(0)
        us, vs = _pairs_arrays(pairs)
        subs = {}
        logits = []
        for m in self.modules:
            z = self.embs[m]
            zu, zv = z[us], z[vs]
            if m == "P":
                subs[m] = (self.cos[us, vs] + 1.0) / 2.0
            else:
                raw = np.einsum("ij,ij->i", zu, zv @ self.bilinears[m])
                subs[m] = 1.0 / (1.0 + np.exp(-raw))
            if self.attention:
                w1, b1, w2, b2 = self.attention[m]
                feat = np.concatenate([(zu + zv) / 2.0, np.maximum(zu, zv)], axis=1)
                h = np.maximum(feat @ w1 + b1, 0.0)
                logits.append(h @ w2 + b2)
        if not self.attention:
            return subs[self.modules[0]]
        logit_mat = np.concatenate(logits, axis=1)
        logit_mat -= logit_mat.max(axis=1, keepdims=True)
        ex = np.exp(logit_mat)
        att = ex / ex.sum(axis=1, keepdims=True)
        total = np.zeros(us.size)
        for mi, m in enumerate(self.modules):
            total += att[:, mi] * subs[m]
        return total


def sample_negative_pairs(g: Graph, count: int, rng: DeterministicRng):
    """Uniform sample of `count` distinct non-edges of g."""
    n = g.n
    total_pairs = n * (n - 1) // 2
    n_non = total_pairs - g.num_edges
    if count > n_non:
        raise ValueError(f"requested {count} negatives, only {n_non} non-edges")
    edges = g.edges
    chosen = set()
    out = []
    gen = rng.generator
    # rejection sampling; dense fallback if the non-edge pool is tight
    if count > 0.5 * n_non:
        pool = [(u, v) for u in range(n) for v in range(u + 1, n)
                if (u, v) not in edges]
        idx = rng.choice(len(pool), size=count, replace=False)
        return [pool[i] for i in idx.tolist()]
    while len(out) < count:
        u = int(gen.integers(n))
        v = int(gen.integers(n))
        if u == v:
            continue
        e = (u, v) if u < v else (v, u)
        if e in edges or e in chosen:
            continue
        chosen.add(e)
        out.append(e)
    return out


def train_ensemble_scorer(g_hat: Graph, cfg: ScorerConfig,
                          rng: DeterministicRng) -> tuple[EnsembleEdgeScorer, TrainLog]:
    """Self-supervised training with per-epoch negative resampling and
    adaptive filtering of the lowest-scored pseudo-positives."""
    if g_hat.num_edges == 0:
        raise ValueError("attacked graph has no edges to train on")
    model = EnsembleEdgeScorer(g_hat, cfg, rng.substream(0))
    positives = g_hat.sorted_edges()
    n_pos = len(positives)
    n_keep = int(np.ceil(cfg.keep_percent / 100.0 * n_pos))
    opt = T.Adam(model.trainable(), lr=cfg.lr)
    neg_rng = rng.substream(1)
    log = TrainLog(seed=rng.seed)
    for epoch in range(cfg.epochs):
        if "S" in cfg.modules and cfg.knn_rebuild_interval > 0 \
                and epoch % cfg.knn_rebuild_interval == 0:
            model.rebuild_knn()
        negatives = sample_negative_pairs(g_hat, n_pos, neg_rng.substream(epoch))
        pairs = positives + negatives
        final, subs, _ = model.forward_pairs(pairs)
        pos_scores = final.data[:n_pos]
        keep = np.lexsort((np.arange(n_pos), -pos_scores))[:n_keep]
        sel = np.concatenate([np.sort(keep), np.arange(n_pos, n_pos + n_pos)])
        targets = np.concatenate([np.ones(n_keep), np.zeros(n_pos)])
        final_sel = T.gather_rows(final, sel)
        loss = T.binary_cross_entropy(final_sel, targets)
        module_losses = {}
        if cfg.lambda_sub > 0:
            for m in cfg.modules:
                sub_loss = T.binary_cross_entropy(T.gather_rows(subs[m], sel), targets)
                module_losses[m] = float(sub_loss.data)
                loss = T.add(loss, T.mul(sub_loss, cfg.lambda_sub))
        if not np.isfinite(loss.data):
            raise FloatingPointError(f"non-finite training loss at epoch {epoch}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        log.total_loss.append(float(loss.data))
        log.module_losses.append(module_losses)
        log.kept_positives.append(n_keep)
    return model, log


def gcn_link_scorer(g_hat: Graph, cfg: ScorerConfig,
                    rng: DeterministicRng) -> tuple[EnsembleEdgeScorer, TrainLog]:
    """Vanilla-GCN baseline: the ensemble restricted to its graph module."""
    solo = ScorerConfig(**{**cfg.__dict__, "modules": ("G",)})
    return train_ensemble_scorer(g_hat, solo, rng)


def svd_score(g_hat: Graph, rank: int, pairs) -> np.ndarray:
    """Low-rank adjacency reconstruction, clamped to [0,1]."""
    if rank > g_hat.n:
        raise ValueError(f"rank {rank} exceeds n={g_hat.n}")
    us, vs = _pairs_arrays(pairs)
    if rank == 0:
        return np.zeros(us.size)
    a = g_hat.dense_adjacency()
    u, s, vt = np.linalg.svd(a)
    recon = (u[:, :rank] * s[:rank]) @ vt[:rank]
    return np.clip(recon[us, vs], 0.0, 1.0)


def cosine_score(features: np.ndarray, pairs) -> np.ndarray:
    """(CosSim(X_u, X_v) + 1) / 2; zero-norm rows score 0.5."""
    us, vs = _pairs_arrays(pairs)
    sim = cosine_similarity_matrix(np.asarray(features, dtype=np.float64))
    return (sim[us, vs] + 1.0) / 2.0


PROPERTY_STATS = {
    "degree": lambda g: g.degree_vector().astype(np.float64),
    "clscoef": gstats.clustering_coefficients,
    "homophily": gstats.node_homophily,
}


def _pair_stat_features(stat: np.ndarray, us, vs) -> np.ndarray:
    a, b = stat[us], stat[vs]
    return np.stack([np.minimum(a, b), np.maximum(a, b), np.abs(a - b)], axis=1)


def property_logistic_score(g_hat: Graph, kind: str, pairs,
                            rng: DeterministicRng) -> np.ndarray:
    """Logistic regression on (min, max, |diff|) of an endpoint statistic,
    trained with the same edge/non-edge pseudo-labels as the learned scorer."""
    stat = PROPERTY_STATS[kind](g_hat)
    positives = g_hat.sorted_edges()
    negatives = sample_negative_pairs(g_hat, len(positives), rng.substream(0))
    tr_u, tr_v = _pairs_arrays(positives + negatives)
    feats = _pair_stat_features(stat, tr_u, tr_v)
    mu = feats.mean(axis=0)
    sd = feats.std(axis=0)
    if np.all(sd < 1e-12):
        warnings.warn(f"constant {kind} statistic; falling back to 0.5 scores")
        return np.full(len(list(pairs)), 0.5)
    sd = np.where(sd < 1e-12, 1.0, sd)
    y = np.concatenate([np.ones(len(positives)), np.zeros(len(negatives))])
    clf = LogisticRegression(max_iter=1000)
    clf.fit((feats - mu) / sd, y)
    us, vs = _pairs_arrays(pairs)
    q = (_pair_stat_features(stat, us, vs) - mu) / sd
    return clf.predict_proba(q)[:, 1]
