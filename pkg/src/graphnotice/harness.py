"""Experiment pipelines: clean training, trade-off curves, bypassable rate,
sensitivity probes, and edge-filtering defense."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import nn, tensor as T
from .attacks import INSERT, AttackTrace, SurrogateModel, apply_trace
from .graph import Graph
from .noticeability import MeasureHandle, measure_for_adaptive
from .rng import DeterministicRng


@dataclass
class Split:
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


def make_split(labels, fractions=(0.1, 0.1, 0.8),
               rng: DeterministicRng | None = None) -> Split:
    """Stratified train/val/test split; leftovers from rounding go to test."""
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise ValueError("split fractions must sum to 1")
    if rng is None:
        rng = DeterministicRng(0)
    labels = np.asarray(labels)
    train, val, test = [], [], []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        members = members[rng.permutation(members.size)]
        n_tr = int(round(fractions[0] * members.size))
        n_va = int(round(fractions[1] * members.size))
        train.extend(members[:n_tr].tolist())
        val.extend(members[n_tr:n_tr + n_va].tolist())
        test.extend(members[n_tr + n_va:].tolist())
    return Split(train_idx=np.sort(np.array(train, dtype=np.int64)),
                 val_idx=np.sort(np.array(val, dtype=np.int64)),
                 test_idx=np.sort(np.array(test, dtype=np.int64)))


def train_clean_gcn(g: Graph, labels, split: Split, cfg: nn.GcnConfig,
                    rng: DeterministicRng, max_epochs: int = 300,
                    patience: int = 30) -> SurrogateModel:
    """Train a GCN with early stopping on validation accuracy.

    Keeps the parameters of the best validation epoch. Deterministic given
    the rng seed.
    """
    labels = np.asarray(labels, dtype=np.int64)
    n_classes = int(labels.max()) + 1
    params = nn.init_gcn_params(cfg, g.features.shape[1], n_classes,
                                rng.substream(0))
    a_hat = nn.normalized_adjacency(g)
    x = T.Tensor(g.features)
    opt = T.Adam(params.tensors(), lr=cfg.lr)
    drop_rng = rng.substream(1)
    best_val = -1.0
    best = [p.data.copy() for p in params.tensors()]
    stale = 0
    for epoch in range(max_epochs):
        _, logits = nn.gcn_forward(a_hat, x, params, cfg.dropout_rate, drop_rng)
        loss = T.cross_entropy_logits(logits, labels, split.train_idx)
        if not np.isfinite(loss.data):
            raise FloatingPointError(f"training diverged at epoch {epoch}")
        opt.zero_grad()
        loss.backward()
        opt.step()
        _, eval_logits = nn.gcn_forward(a_hat, x, params)
        pred = eval_logits.data.argmax(axis=1)
        val_acc = float((pred[split.val_idx] == labels[split.val_idx]).mean())
        if val_acc > best_val:
            best_val = val_acc
            best = [p.data.copy() for p in params.tensors()]
            stale = 0
        else:
            stale += 1
            if stale >= patience:
                break
    for p, b in zip(params.tensors(), best):
        p.data = b
    return SurrogateModel(cfg=cfg, params=params, train_idx=split.train_idx,
                          val_idx=split.val_idx, test_idx=split.test_idx)


def accuracy(model: SurrogateModel, g_eval: Graph, labels,
             test_idx=None) -> float:
    labels = np.asarray(labels)
    idx = model.test_idx if test_idx is None else np.asarray(test_idx)
    if idx.size == 0:
        raise ValueError("empty evaluation index set")
    a_hat = nn.normalized_adjacency(g_eval)
    _, logits = nn.gcn_forward(a_hat, T.Tensor(g_eval.features), model.params)
    pred = logits.data.argmax(axis=1)
    return float((pred[idx] == labels[idx]).mean())


@dataclass
class TradeoffCurve:
    points: list  # [(t, accuracy, noticeability)] with t in [0, 1]
    measure_name: str
    trace_id: str = ""
    seed: int = 0

    def t_values(self):
        return np.array([p[0] for p in self.points])

    def noticeability(self):
        return np.array([np.nan if p[2] is None else p[2] for p in self.points])


@dataclass
class BypassReport:
    area_original: float
    area_adaptive: float
    bypassable_rate: float
    undefined: bool = False

    def to_dict(self):
        return {"area_original": self.area_original,
                "area_adaptive": self.area_adaptive,
                "bypassable_rate": self.bypassable_rate,
                "undefined": self.undefined}


def tradeoff_curve(g: Graph, trace: AttackTrace, measure_handle: MeasureHandle,
                   clean_model: SurrogateModel, labels,
                   split: Split | None = None) -> TradeoffCurve:
    """(t/|ops|, accuracy of the clean model on G_hat_t, U(G, G_hat_t)) for
    t = 0..|ops|.

    Statistical measures run through their incremental evaluators so that a
    full curve costs about as much as one greedy sweep.
    """
    labels = np.asarray(labels)
    test_idx = clean_model.test_idx if split is None else split.test_idx
    n_ops = len(trace.ops)
    points = []
    if n_ops == 0:
        acc = accuracy(clean_model, g, labels, test_idx)
        return TradeoffCurve(points=[(0.0, acc, None)],
                             measure_name=measure_handle.name,
                             trace_id=trace.method, seed=trace.seed)
    inc = measure_for_adaptive(measure_handle)
    incremental = hasattr(inc, "push")
    if incremental:
        inc.begin(g)
    current = g
    for t in range(n_ops + 1):
        if t > 0:
            current = apply_trace(g, trace, t)
            if incremental:
                inc.push(trace.ops[t - 1])
        acc = accuracy(clean_model, current, labels, test_idx)
        if incremental:
            u = float(inc.value())
        else:
            u = float(inc(g, current))
        points.append((t / n_ops, acc, u))
    return TradeoffCurve(points=points, measure_name=measure_handle.name,
                         trace_id=trace.method, seed=trace.seed)


def _curve_area(curve: TradeoffCurve) -> float:
    t = curve.t_values()
    u = curve.noticeability()
    u = np.where(np.isnan(u), 0.0, u)
    return float(np.trapezoid(u, t))


def bypassable_rate(original: TradeoffCurve,
                    adaptive: TradeoffCurve) -> BypassReport:
    """rate = 1 - area_adaptive / area_original over the schedule fraction t."""
    area_o = _curve_area(original)
    area_a = _curve_area(adaptive)
    if area_o <= 0.0:
        return BypassReport(area_original=area_o, area_adaptive=area_a,
                            bypassable_rate=float("nan"), undefined=True)
    return BypassReport(area_original=area_o, area_adaptive=area_a,
                        bypassable_rate=1.0 - area_a / area_o)


def sensitivity_probe(adaptive: TradeoffCurve, gamma_probe: float,
                      full_gamma: float) -> float:
    """Noticeability at t = gamma_probe / full_gamma, linearly interpolated."""
    if not (0.0 <= gamma_probe <= full_gamma):
        raise ValueError("need 0 <= gamma_probe <= full_gamma")
    t_star = gamma_probe / full_gamma
    t = adaptive.t_values()
    u = adaptive.noticeability()
    if t_star < t[0] or t_star > t[-1]:
        raise ValueError(f"probe point {t_star} outside curve range")
    return float(np.interp(t_star, t, u))


def filter_edges(g_hat: Graph, scores, count: int) -> Graph:
    """Drop the `count` lowest-scoring edges of G_hat (ties by pair order)."""
    edges = g_hat.sorted_edges()
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape[0] != len(edges):
        raise ValueError("need one score per edge of g_hat")
    if not (0 <= count <= len(edges)):
        raise ValueError(f"count {count} out of range for {len(edges)} edges")
    drop = set(np.lexsort((np.arange(len(edges)), scores))[:count].tolist())
    kept = {e for i, e in enumerate(edges) if i not in drop}
    return g_hat.with_edges(kept)


def clairvoyant_scores(g: Graph, g_hat: Graph) -> np.ndarray:
    """Oracle scorer for defense tests: 1 on original edges, 0 on inserts."""
    orig = g.edges
    return np.array([1.0 if e in orig else 0.0 for e in g_hat.sorted_edges()])


ATTACKED_STREAM = 0
FILTERED_STREAM = 1


def filtered_classification(g: Graph, g_hat: Graph, scores, count: int | None,
                            labels, split: Split, cfg: nn.GcnConfig,
                            rng: DeterministicRng):
    """Test accuracy of GCNs trained on G_hat and on the filtered G_hat.

    `count` defaults to the number of edges G_hat gained over G. The filtered
    model trains on substream FILTERED_STREAM so an exact-recovery comparison
    can retrain on G with the same stream.
    """
    if count is None:
        count = max(0, g_hat.num_edges - g.num_edges)
    filtered = filter_edges(g_hat, scores, count)
    m_att = train_clean_gcn(g_hat, labels, split, cfg,
                            rng.substream(ATTACKED_STREAM))
    m_fil = train_clean_gcn(filtered, labels, split, cfg,
                            rng.substream(FILTERED_STREAM))
    acc_attacked = accuracy(m_att, g_hat, labels, split.test_idx)
    acc_filtered = accuracy(m_fil, filtered, labels, split.test_idx)
    return acc_attacked, acc_filtered


def shuffled_trace(trace: AttackTrace, rng: DeterministicRng) -> AttackTrace:
    """Same op multiset in a random order (the non-adaptive baseline curve)."""
    ops = list(trace.ops)
    rng.shuffle(ops)
    return AttackTrace(ops=ops, method=f"shuffled-{trace.method}",
                       budget=trace.budget, seed=trace.seed)
