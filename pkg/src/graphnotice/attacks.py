"""Topological attack generators and the measure-minimizing greedy reordering."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import gstats, nn, tensor as T
from .graph import Graph, canonical_edge
from .rng import DeterministicRng

INSERT = "I"
DELETE = "D"


class BudgetError(ValueError):
    pass


class NotApplicableError(RuntimeError):
    """Raised when an attack cannot emit the requested number of operations."""


@dataclass
class AttackBudget:
    delta: int
    gamma: float = 0.0
    delta_c: int | None = None
    noticeability_cap: float = float("inf")

    def __post_init__(self):
        if self.delta_c is None:
            self.delta_c = self.delta
        if not (self.delta_c >= self.delta >= 0):
            raise BudgetError(f"need delta_c >= delta >= 0, got {self}")

    @staticmethod
    def from_gamma(g: Graph, gamma: float, candidate_multiplier: float = 1.0,
                   noticeability_cap: float = float("inf")) -> "AttackBudget":
        if not (0.0 <= gamma < 1.0):
            raise BudgetError("gamma must be in [0, 1)")
        delta = int(round(gamma * g.num_edges))
        return AttackBudget(delta=delta, gamma=gamma,
                            delta_c=int(round(candidate_multiplier * delta)),
                            noticeability_cap=noticeability_cap)


@dataclass
class AttackTrace:
    ops: list  # [(kind, u, v)] with kind in {"I", "D"}, u < v
    method: str
    budget: AttackBudget
    seed: int = 0

    def __len__(self):
        return len(self.ops)


@dataclass
class SurrogateModel:
    cfg: nn.GcnConfig
    params: nn.GcnParams
    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


def validate_trace(g: Graph, trace: AttackTrace, limit: int | None = None):
    """Check op preconditions: inserts on non-edges, deletes on edges, no repeats."""
    seen = set()
    edges = set(g.edges)
    cap = trace.budget.delta if limit is None else limit
    if len(trace.ops) > cap:
        raise BudgetError(f"trace has {len(trace.ops)} ops, budget {cap}")
    for kind, u, v in trace.ops:
        e = canonical_edge(u, v)
        if e in seen:
            raise BudgetError(f"pair {e} appears twice")
        seen.add(e)
        if kind == INSERT and e in edges:
            raise BudgetError(f"insert {e} targets an existing edge")
        if kind == DELETE and e not in edges:
            raise BudgetError(f"delete {e} targets a non-edge")
        if kind not in (INSERT, DELETE):
            raise BudgetError(f"unknown op kind {kind}")


def apply_trace(g: Graph, trace: AttackTrace, t: int | None = None) -> Graph:
    """Graph with the first t ops applied (t = len(ops) by default)."""
    if t is None:
        t = len(trace.ops)
    if not (0 <= t <= len(trace.ops)):
        raise ValueError(f"t={t} out of range for trace of length {len(trace.ops)}")
    edges = set(g.edges)
    for kind, u, v in trace.ops[:t]:
        e = canonical_edge(u, v)
        if kind == INSERT:
            edges.add(e)
        else:
            edges.discard(e)
    return g.with_edges(edges)


def _all_pairs(n: int):
    iu, ju = np.triu_indices(n, k=1)
    return iu, ju


def _non_edges(g: Graph) -> list[tuple[int, int]]:
    edges = g.edges
    return [(u, v) for u in range(g.n) for v in range(u + 1, g.n)
            if (u, v) not in edges]


def random_attack(g: Graph, budget: AttackBudget, rng: DeterministicRng,
                  delta: int | None = None) -> AttackTrace:
    """Insert `delta` distinct non-edges chosen uniformly at random."""
    delta = budget.delta if delta is None else delta
    pool = _non_edges(g)
    if delta > len(pool):
        raise BudgetError(f"budget {delta} exceeds {len(pool)} available non-edges")
    idx = rng.choice(len(pool), size=delta, replace=False)
    ops = [(INSERT, *pool[i]) for i in sorted(idx.tolist())]
    rng.shuffle(ops)
    return AttackTrace(ops=ops, method="random", budget=budget, seed=rng.seed)


def dice_attack(g: Graph, labels, budget: AttackBudget, rng: DeterministicRng,
                delta: int | None = None) -> AttackTrace:
    """Insert cross-class non-edges and delete same-class edges, interleaved.

    ceil(delta/2) inserts and floor(delta/2) deletes, insert first.
    """
    delta = budget.delta if delta is None else delta
    labels = np.asarray(labels)
    n_ins = (delta + 1) // 2
    n_del = delta // 2
    ins_pool = [(u, v) for (u, v) in _non_edges(g) if labels[u] != labels[v]]
    del_pool = [e for e in g.sorted_edges() if labels[e[0]] == labels[e[1]]]
    if n_ins > len(ins_pool):
        raise BudgetError(f"need {n_ins} cross-class non-edges, have {len(ins_pool)}")
    if n_del > len(del_pool):
        raise BudgetError(f"need {n_del} same-class edges, have {len(del_pool)}")
    ins_idx = rng.choice(len(ins_pool), size=n_ins, replace=False)
    del_idx = rng.choice(len(del_pool), size=n_del, replace=False)
    inserts = [(INSERT, *ins_pool[i]) for i in ins_idx.tolist()]
    deletes = [(DELETE, *del_pool[i]) for i in del_idx.tolist()]
    ops = []
    for i in range(delta):
        ops.append(inserts[i // 2] if i % 2 == 0 else deletes[i // 2])
    return AttackTrace(ops=ops, method="dice", budget=budget, seed=rng.seed)


def _project_budget(s: np.ndarray, delta: float) -> np.ndarray:
    """Euclidean projection onto {0 <= s <= 1, sum(s) <= delta} via bisection."""
    clipped = np.clip(s, 0.0, 1.0)
    if clipped.sum() <= delta:
        return clipped
    lo, hi = s.min() - 1.0, s.max()
    for _ in range(60):
        mu = 0.5 * (lo + hi)
        if np.clip(s - mu, 0.0, 1.0).sum() > delta:
            lo = mu
        else:
            hi = mu
    return np.clip(s - hi, 0.0, 1.0)


def pgd_attack(g: Graph, labels, budget: AttackBudget, surrogate: SurrogateModel,
               rng: DeterministicRng, steps: int = 200, lr: float = 0.1,
               delta: int | None = None) -> AttackTrace:
    """Projected gradient ascent on a relaxed edge-flip matrix.

    A' = A + (1 - 2A) o S with S in [0,1] on unordered pairs; each step takes a
    gradient ascent step on the surrogate's training cross-entropy, then
    projects S onto the budget simplex. The final attack takes the delta
    largest entries of S (ties broken by pair order).
    """
    delta = budget.delta if delta is None else delta
    labels = np.asarray(labels, dtype=np.int64)
    n = g.n
    iu, ju = _all_pairs(n)
    if delta > iu.size:
        raise BudgetError("budget exceeds the number of node pairs")
    a = g.dense_adjacency()
    flip_sign = (1.0 - 2.0 * a)[iu, ju]
    s = np.zeros(iu.size, dtype=np.float64)
    x = T.Tensor(g.features)
    for _ in range(steps):
        s_t = T.Tensor(s, requires_grad=True)
        s_mat = T.scatter_symmetric(T.mul(s_t, T.Tensor(flip_sign)), iu, ju, n)
        a_prime = T.add(T.Tensor(a), s_mat)
        a_hat = nn.normalized_adjacency_from_dense(a_prime)
        _, logits = nn.gcn_forward(a_hat, x, surrogate.params)
        loss = T.cross_entropy_logits(logits, labels, surrogate.train_idx)
        loss.backward()
        grad = s_t.grad
        if not np.all(np.isfinite(grad)):
            raise FloatingPointError("non-finite gradient in attack loop")
        s = _project_budget(s + lr * grad, float(delta))
    # stable top-delta selection: descending score, ascending pair order on ties
    order = np.lexsort((np.arange(s.size), -s))[:delta]
    order = np.sort(order)
    ops = []
    for i in order.tolist():
        u, v = int(iu[i]), int(ju[i])
        ops.append((DELETE, u, v) if a[u, v] > 0 else (INSERT, u, v))
    return AttackTrace(ops=ops, method="pgd", budget=budget, seed=rng.seed)


def structack(g: Graph, budget: AttackBudget, beta: float | None = None,
              delta: int | None = None) -> AttackTrace:
    """Connect low-centrality nodes along lowest-Katz-similarity pairs.

    Takes the 2*delta lowest-betweenness nodes (ties by index) and greedily
    inserts delta non-adjacent pairs in ascending Katz similarity, using each
    selected node at most once.
    """
    delta = budget.delta if delta is None else delta
    if delta == 0:
        return AttackTrace(ops=[], method="structack", budget=budget)
    bc = gstats.betweenness_centrality(g)
    order = np.lexsort((np.arange(g.n), bc))
    selected = np.sort(order[:min(2 * delta, g.n)])
    if beta is None:
        max_deg = max(1, int(g.degree_vector().max()))
        beta = 1.0 / (max_deg + 1)
    katz = gstats.katz_similarity(g, beta)
    cands = []
    for ai in range(selected.size):
        for bi in range(ai + 1, selected.size):
            u, v = int(selected[ai]), int(selected[bi])
            if not g.has_edge(u, v):
                cands.append((katz[u, v], u, v))
    cands.sort(key=lambda t: (t[0], t[1], t[2]))
    used = set()
    ops = []
    for _, u, v in cands:
        if len(ops) == delta:
            break
        if u in used or v in used:
            continue
        used.add(u)
        used.add(v)
        ops.append((INSERT, u, v))
    if len(ops) < delta:
        raise NotApplicableError(
            f"pairing pool supports only {len(ops)} of {delta} insertions")
    return AttackTrace(ops=ops, method="structack", budget=budget)


def adaptive_greedy(g: Graph, candidates: AttackTrace, budget: AttackBudget,
                    measure) -> AttackTrace:
    """Greedily pick delta ops from the candidate trace, minimizing `measure`.

    `measure` is either a callable U(g, g_hat) -> float evaluated on
    materialized graphs, or an incremental evaluator with begin/peek/push
    (see noticeability.measure_for_adaptive). Ties break by candidate order.
    """
    delta = budget.delta
    remaining = list(candidates.ops)
    if delta > len(remaining):
        raise BudgetError("budget exceeds candidate count")
    incremental = hasattr(measure, "peek")
    chosen = []
    if incremental:
        measure.begin(g)
        for _ in range(delta):
            best_i, best_val = 0, None
            for i, op in enumerate(remaining):
                val = measure.peek(op)
                if best_val is None or val < best_val:
                    best_i, best_val = i, val
            op = remaining.pop(best_i)
            measure.push(op)
            chosen.append(op)
    else:
        edges = set(g.edges)
        for _ in range(delta):
            best_i, best_val = 0, None
            for i, (kind, u, v) in enumerate(remaining):
                e = canonical_edge(u, v)
                trial = edges | {e} if kind == INSERT else edges - {e}
                val = measure(g, g.with_edges(trial))
                if best_val is None or val < best_val:
                    best_i, best_val = i, val
            kind, u, v = remaining.pop(best_i)
            e = canonical_edge(u, v)
            edges = edges | {e} if kind == INSERT else edges - {e}
            chosen.append((kind, u, v))
    return AttackTrace(ops=chosen, method=f"adaptive-{candidates.method}",
                       budget=budget, seed=candidates.seed)
