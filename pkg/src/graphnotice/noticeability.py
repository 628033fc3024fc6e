"""AUROC aggregation, the learned noticeability measure, and the uniform
measure interface consumed by the adaptive attack and the harness."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels, scorers, stattests
from .attacks import DELETE, INSERT
from .graph import AttackPair, Graph, canonical_edge, edge_sets
from .rng import DeterministicRng
from .scorers import ScorerConfig
from .stattests import MeasureKind, NoticeabilityReport

LEARNED_MEASURE = "learned_auroc"
DEFAULT_AUROC_THRESHOLD = 0.6


def auroc(labels, scores) -> float:
    """Area under the ROC curve, ties counted half (rank-sum formulation)."""
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.shape != scores.shape:
        raise ValueError("labels and scores must have equal length")
    pos = int((labels == 1).sum())
    neg = labels.size - pos
    if pos == 0 or neg == 0:
        raise ValueError("AUROC requires both classes")
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(scores.size, dtype=np.float64)
    sorted_scores = scores[order]
    i = 0
    while i < scores.size:
        j = i
        while j + 1 < scores.size and sorted_scores[j + 1] == sorted_scores[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank
        i = j + 1
    rank_sum = ranks[labels == 1].sum()
    return float((rank_sum - pos * (pos + 1) / 2.0) / (pos * neg))


def learned_measure(pair: AttackPair, scorer_cfg: ScorerConfig | None,
                    rng: DeterministicRng,
                    threshold: float = DEFAULT_AUROC_THRESHOLD,
                    scorer=None) -> NoticeabilityReport:
    """Train the edge scorer on the attacked graph, score E0 = E ∪ Ê, and
    report the AUROC with original edges labeled 1.

    A pre-built scorer (anything with .score(pairs)) can be supplied instead
    of training, e.g. a clairvoyant scorer in tests.
    """
    _, _, e0, labels = edge_sets(pair)
    if labels.min() == labels.max():
        return NoticeabilityReport(measure_name=LEARNED_MEASURE, statistic=float("nan"),
                                   p_value=None, noticeable_at_05=None, degenerate=True)
    if scorer is None:
        cfg = scorer_cfg or ScorerConfig()
        model, _ = scorers.train_ensemble_scorer(pair.attacked, cfg, rng)
        scorer = model.frozen()
    value = auroc(labels, scorer.score(e0))
    return NoticeabilityReport(measure_name=LEARNED_MEASURE, statistic=value,
                               p_value=None, noticeable_at_05=value >= threshold)


@dataclass
class MeasureHandle:
    """Named measure with a uniform evaluate(G, G_hat) -> report interface."""
    name: str
    scorer_cfg: ScorerConfig | None = None
    rng: DeterministicRng | None = None
    threshold: float = DEFAULT_AUROC_THRESHOLD
    retrain_interval: int = 1
    d_min: int = 2

    def evaluate(self, g: Graph, g_hat: Graph) -> NoticeabilityReport:
        pair = AttackPair(g, g_hat)
        if self.name == LEARNED_MEASURE:
            return learned_measure(pair, self.scorer_cfg, self.rng, self.threshold)
        return stattests.statistical_measure(MeasureKind(self.name), pair,
                                             d_min=self.d_min)


# ---------------------------------------------------------------------------
# Incremental evaluators used by the greedy adaptive attack. Each maintains
# the attacked graph's per-node statistics and answers "what would the
# measure be after this op" in (near-)constant work per candidate.
# ---------------------------------------------------------------------------


class _IncrementalKSBase:
    def begin(self, g: Graph):
        raise NotImplementedError

    def peek(self, op) -> float:
        raise NotImplementedError

    def push(self, op):
        raise NotImplementedError


def _op_edge(op):
    kind, u, v = op
    return kind, canonical_edge(u, v)


class IncrementalDegreeKS(_IncrementalKSBase):
    """KS D between degree distributions, via integer degree histograms."""

    def begin(self, g: Graph):
        self.n = g.n
        deg = g.degree_vector()
        self.deg = deg.copy()
        self.size = int(deg.max() if g.n else 0) + 3
        self.counts_x = np.bincount(deg, minlength=self.size).astype(np.float64)
        self.counts_y = self.counts_x.copy()

    def _grow(self, needed):
        if needed >= self.size:
            extra = needed - self.size + 3
            self.counts_x = np.concatenate([self.counts_x, np.zeros(extra)])
            self.counts_y = np.concatenate([self.counts_y, np.zeros(extra)])
            self.size += extra

    def _d_stat(self, counts_y):
        cx = np.cumsum(self.counts_x) / self.n
        cy = np.cumsum(counts_y) / self.n
        return float(np.abs(cx - cy).max())

    def _shift(self, op):
        kind, (u, v) = _op_edge(op)
        d = 1 if kind == INSERT else -1
        self._grow(max(self.deg[u], self.deg[v]) + 1)
        y = self.counts_y.copy()
        for node in (u, v):
            y[self.deg[node]] -= 1
            y[self.deg[node] + d] += 1
        return y, d, u, v

    def peek(self, op) -> float:
        y, _, _, _ = self._shift(op)
        return self._d_stat(y)

    def push(self, op):
        y, d, u, v = self._shift(op)
        self.counts_y = y
        self.deg[u] += d
        self.deg[v] += d

    def value(self) -> float:
        return self._d_stat(self.counts_y)


class IncrementalDegreeLR(_IncrementalKSBase):
    """LR statistic for pooled vs separate power-law fits on degrees."""

    def __init__(self, d_min: int = 2):
        self.d_min = d_min
        self.x_min = d_min - 0.5

    def _ll(self, m, s):
        if m == 0 or s <= 0:
            raise ValueError("degenerate power-law sample")
        alpha = 1.0 + m / s
        return m * math.log((alpha - 1.0) / self.x_min) - alpha * s

    def begin(self, g: Graph):
        deg = g.degree_vector()
        self.deg = deg.copy()
        retained = deg[deg >= self.d_min].astype(np.float64)
        self.m_x = retained.size
        self.s_x = float(np.log(retained / self.x_min).sum())
        self.ll_x = self._ll(self.m_x, self.s_x)
        self.m_y = self.m_x
        self.s_y = self.s_x

    def _shift(self, op):
        kind, (u, v) = _op_edge(op)
        d = 1 if kind == INSERT else -1
        m, s = self.m_y, self.s_y
        for node in (u, v):
            old = int(self.deg[node])
            new = old + d
            if old >= self.d_min:
                m -= 1
                s -= math.log(old / self.x_min)
            if new >= self.d_min:
                m += 1
                s += math.log(new / self.x_min)
        return m, s, d, u, v

    def _lam(self, m, s):
        ll_y = self._ll(m, s)
        ll_0 = self._ll(self.m_x + m, self.s_x + s)
        return max(0.0, 2.0 * (self.ll_x + ll_y - ll_0))

    def peek(self, op) -> float:
        m, s, _, _, _ = self._shift(op)
        return self._lam(m, s)

    def push(self, op):
        m, s, d, u, v = self._shift(op)
        self.m_y, self.s_y = m, s
        self.deg[u] += d
        self.deg[v] += d

    def value(self) -> float:
        return self._lam(self.m_y, self.s_y)


class IncrementalClsCoefKS(_IncrementalKSBase):
    """KS D between clustering coefficient distributions."""

    def begin(self, g: Graph):
        from . import gstats
        self.n = g.n
        self.adj = [set(s) for s in g.adjacency_sets()]
        self.deg = g.degree_vector().astype(np.int64)
        indptr, indices = g.csr_arrays()
        self.tri = _kernels.triangle_edge_counts(indptr, indices, g.n).astype(np.int64)
        self.c = gstats.clustering_coefficients(g)
        self.x_sorted = np.sort(self.c)

    @staticmethod
    def _coef(tri, deg):
        return 2.0 * tri / (deg * (deg - 1)) if deg >= 2 else 0.0

    def _updates(self, op):
        kind, (u, v) = _op_edge(op)
        sign = 1 if kind == INSERT else -1
        common = self.adj[u] & self.adj[v]
        upd = {}
        upd[u] = (self.tri[u] + sign * len(common), self.deg[u] + sign)
        upd[v] = (self.tri[v] + sign * len(common), self.deg[v] + sign)
        for w in common:
            upd[w] = (self.tri[w] + sign, self.deg[w])
        return upd, sign, u, v

    def peek(self, op) -> float:
        upd, _, _, _ = self._updates(op)
        y = self.c.copy()
        for node, (tri, deg) in upd.items():
            y[node] = self._coef(tri, deg)
        return float(_kernels.ks_statistic_sorted(self.x_sorted, np.sort(y)))

    def push(self, op):
        upd, sign, u, v = self._updates(op)
        for node, (tri, deg) in upd.items():
            self.tri[node] = tri
            self.deg[node] = deg
            self.c[node] = self._coef(tri, deg)
        if sign > 0:
            self.adj[u].add(v)
            self.adj[v].add(u)
        else:
            self.adj[u].discard(v)
            self.adj[v].discard(u)

    def value(self) -> float:
        return float(_kernels.ks_statistic_sorted(self.x_sorted, np.sort(self.c)))


class IncrementalHomophilyKS(_IncrementalKSBase):
    """KS D between per-node homophily distributions.

    Maintains agg_i = sum_{j in N_i} X_j / sqrt(d_j); the 1/sqrt(d_i) factor
    cancels in the cosine.
    """

    def begin(self, g: Graph):
        from . import gstats
        if g.features is None:
            raise ValueError("homophily measure requires features")
        self.x = g.features
        self.xnorm = np.linalg.norm(self.x, axis=1)
        self.adj = [set(s) for s in g.adjacency_sets()]
        self.deg = g.degree_vector().astype(np.int64)
        self.agg = np.zeros_like(self.x)
        w = np.zeros(g.n)
        nz = self.deg > 0
        w[nz] = 1.0 / np.sqrt(self.deg[nz])
        for u, v in g.edges:
            self.agg[u] += self.x[v] * w[v]
            self.agg[v] += self.x[u] * w[u]
        self.h = gstats.node_homophily(g)
        self.x_sorted = np.sort(self.h)

    def _cos(self, i, agg_row, deg_i):
        if deg_i == 0 or self.xnorm[i] == 0:
            return 0.0
        an = np.linalg.norm(agg_row)
        if an == 0:
            return 0.0
        return float(self.x[i] @ agg_row / (self.xnorm[i] * an))

    def _updates(self, op):
        kind, (u, v) = _op_edge(op)
        insert = kind == INSERT
        du, dv = int(self.deg[u]), int(self.deg[v])
        du_new = du + (1 if insert else -1)
        dv_new = dv + (1 if insert else -1)
        upd_agg = {}

        def bump(node, delta_row):
            if node not in upd_agg:
                upd_agg[node] = self.agg[node].copy()
            upd_agg[node] += delta_row

        wu_old = 1.0 / math.sqrt(du) if du > 0 else 0.0
        wv_old = 1.0 / math.sqrt(dv) if dv > 0 else 0.0
        wu_new = 1.0 / math.sqrt(du_new) if du_new > 0 else 0.0
        wv_new = 1.0 / math.sqrt(dv_new) if dv_new > 0 else 0.0
        for w in self.adj[u]:
            if w != v:
                bump(w, self.x[u] * (wu_new - wu_old))
        for w in self.adj[v]:
            if w != u:
                bump(w, self.x[v] * (wv_new - wv_old))
        if insert:
            bump(u, self.x[v] * wv_new)
            bump(v, self.x[u] * wu_new)
        else:
            bump(u, -self.x[v] * wv_old)
            bump(v, -self.x[u] * wu_old)
        new_deg = {u: du_new, v: dv_new}
        return upd_agg, new_deg, u, v, insert

    def peek(self, op) -> float:
        upd_agg, new_deg, _, _, _ = self._updates(op)
        y = self.h.copy()
        for node, row in upd_agg.items():
            y[node] = self._cos(node, row, new_deg.get(node, int(self.deg[node])))
        return float(_kernels.ks_statistic_sorted(self.x_sorted, np.sort(y)))

    def push(self, op):
        upd_agg, new_deg, u, v, insert = self._updates(op)
        for node, row in upd_agg.items():
            self.agg[node] = row
            self.h[node] = self._cos(node, row, new_deg.get(node, int(self.deg[node])))
        self.deg[u] = new_deg[u]
        self.deg[v] = new_deg[v]
        if insert:
            self.adj[u].add(v)
            self.adj[v].add(u)
        else:
            self.adj[u].discard(v)
            self.adj[v].discard(u)

    def value(self) -> float:
        return float(_kernels.ks_statistic_sorted(self.x_sorted, np.sort(self.h)))


class LearnedAdaptiveMeasure(_IncrementalKSBase):
    """AUROC measure inside a greedy loop: the scorer is retrained every
    `retrain_interval` pushes and candidates are scored with the frozen model
    in between."""

    def __init__(self, scorer_cfg: ScorerConfig, rng: DeterministicRng,
                 retrain_interval: int = 1):
        self.cfg = scorer_cfg
        self.rng = rng
        self.retrain_interval = max(1, int(retrain_interval)) \
            if retrain_interval != math.inf else math.inf
        self._pushes = 0

    def begin(self, g: Graph):
        self.g = g
        self.edges = set(g.edges)
        self.pos_pairs = g.sorted_edges()
        self.inserted = []
        self._retrain()

    def _current_graph(self):
        return self.g.with_edges(self.edges)

    def _retrain(self):
        g_hat = self._current_graph()
        model, _ = scorers.train_ensemble_scorer(
            g_hat, self.cfg, self.rng.substream(self._pushes))
        self.frozen = model.frozen()
        self.pos_scores = self.frozen.score(self.pos_pairs)
        self.neg_scores = list(self.frozen.score(self.inserted)) \
            if self.inserted else []
        self._cache = {}

    def _score(self, pair):
        if pair not in self._cache:
            self._cache[pair] = float(self.frozen.score([pair])[0])
        return self._cache[pair]

    def _auroc_with(self, extra_neg=None):
        negs = list(self.neg_scores)
        if extra_neg is not None:
            negs.append(extra_neg)
        if not negs:
            return 0.5  # degenerate single-class: neutral value for the loop
        scores = np.concatenate([self.pos_scores, np.asarray(negs)])
        labels = np.concatenate([np.ones(self.pos_scores.size),
                                 np.zeros(len(negs))])
        return auroc(labels, scores)

    def peek(self, op) -> float:
        kind, e = _op_edge(op)
        if kind == INSERT and e not in self.g.edges:
            return self._auroc_with(self._score(e))
        # deletes (and re-inserts of original edges) leave E0 and the frozen
        # scores unchanged
        return self._auroc_with()

    def push(self, op):
        kind, e = _op_edge(op)
        if kind == INSERT:
            self.edges.add(e)
            if e not in self.g.edges:
                self.inserted.append(e)
                self.neg_scores.append(self._score(e))
        else:
            self.edges.discard(e)
        self._pushes += 1
        if self.retrain_interval != math.inf and \
                self._pushes % self.retrain_interval == 0:
            self._retrain()

    def value(self) -> float:
        return self._auroc_with()


_INCREMENTAL = {
    MeasureKind.DEGREE_KS.value: IncrementalDegreeKS,
    MeasureKind.CLSCOEF_KS.value: IncrementalClsCoefKS,
    MeasureKind.HOMOPH_KS.value: IncrementalHomophilyKS,
}


def measure_for_adaptive(handle: MeasureHandle):
    """Incremental minimization target for the greedy adaptive attack.

    For statistical measures the value is the test statistic; for the learned
    measure it is the AUROC under a periodically retrained scorer.
    """
    if handle.name == LEARNED_MEASURE:
        if handle.rng is None:
            raise ValueError("learned measure needs an rng")
        return LearnedAdaptiveMeasure(handle.scorer_cfg or ScorerConfig(),
                                      handle.rng, handle.retrain_interval)
    if handle.name == MeasureKind.DEGREE_LR.value:
        return IncrementalDegreeLR(d_min=handle.d_min)
    return _INCREMENTAL[handle.name]()
