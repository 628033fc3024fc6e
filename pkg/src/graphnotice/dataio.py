"""Plain-text file formats: edge lists, feature CSVs, labels, attack traces,
score tables, curve CSVs, JSON reports, and key=value configs.

Every writer emits text its parser round-trips to an equal object, and the
formats are deterministic (sorted keys, canonical u < v, %.17g reals).
"""

from __future__ import annotations

import json

import numpy as np

from .attacks import AttackBudget, AttackTrace, DELETE, INSERT
from .graph import canonical_edge
from .harness import BypassReport, TradeoffCurve


class DataError(ValueError):
    """Malformed input file; message carries path and line context."""


def _real(x) -> str:
    return "%.17g" % float(x)


def _data_lines(path):
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            yield lineno, line


def parse_edge_list(path):
    """Lines `u v`, 0-based, `#` comments. Returns (n, edge set) with
    n = max index + 1; duplicates and self-loops are rejected."""
    edges = set()
    max_node = -1
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 2:
            raise DataError(f"{path}:{lineno}: expected `u v`, got {line!r}")
        try:
            u, v = int(parts[0]), int(parts[1])
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-integer endpoint in {line!r}")
        if u < 0 or v < 0:
            raise DataError(f"{path}:{lineno}: negative node index")
        if u == v:
            raise DataError(f"{path}:{lineno}: self-loop {u}")
        e = canonical_edge(u, v)
        if e in edges:
            raise DataError(f"{path}:{lineno}: duplicate edge {e}")
        edges.add(e)
        max_node = max(max_node, u, v)
    return max_node + 1, edges


def write_edge_list(path, edges):
    with open(path, "w", encoding="utf-8") as f:
        for u, v in sorted(canonical_edge(u, v) for u, v in edges):
            f.write(f"{u} {v}\n")


def parse_features_csv(path) -> np.ndarray:
    rows = []
    width = None
    for lineno, line in _data_lines(path):
        try:
            row = [float(tok) for tok in line.split(",")]
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-numeric feature value")
        if width is None:
            width = len(row)
        elif len(row) != width:
            raise DataError(f"{path}:{lineno}: ragged row, expected {width} "
                            f"columns, got {len(row)}")
        rows.append(row)
    if not rows:
        raise DataError(f"{path}: empty feature file")
    return np.array(rows, dtype=np.float64)


def write_features_csv(path, x: np.ndarray):
    with open(path, "w", encoding="utf-8") as f:
        for row in np.asarray(x, dtype=np.float64):
            f.write(",".join(_real(v) for v in row) + "\n")


def parse_labels(path) -> np.ndarray:
    labels = []
    for lineno, line in _data_lines(path):
        try:
            labels.append(int(line))
        except ValueError:
            raise DataError(f"{path}:{lineno}: non-integer label {line!r}")
    if not labels:
        raise DataError(f"{path}: empty label file")
    return np.array(labels, dtype=np.int64)


def write_labels(path, labels):
    with open(path, "w", encoding="utf-8") as f:
        for c in np.asarray(labels, dtype=np.int64):
            f.write(f"{int(c)}\n")


def write_trace(path, trace: AttackTrace):
    with open(path, "w", encoding="utf-8") as f:
        f.write(f"# method={trace.method} seed={trace.seed} "
                f"delta={trace.budget.delta}\n")
        for kind, u, v in trace.ops:
            f.write(f"{kind} {u} {v}\n")


def parse_trace(path) -> AttackTrace:
    method, seed, delta = "unknown", 0, None
    ops = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, raw in enumerate(f, start=1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for tok in line[1:].split():
                    if tok.startswith("method="):
                        method = tok[len("method="):]
                    elif tok.startswith("seed="):
                        seed = int(tok[len("seed="):])
                    elif tok.startswith("delta="):
                        delta = int(tok[len("delta="):])
                continue
            parts = line.split()
            if len(parts) != 3 or parts[0] not in (INSERT, DELETE):
                raise DataError(f"{path}:{lineno}: expected `I|D u v`, "
                                f"got {line!r}")
            u, v = int(parts[1]), int(parts[2])
            if u == v:
                raise DataError(f"{path}:{lineno}: self-loop op")
            ops.append((parts[0], *canonical_edge(u, v)))
    if delta is None:
        delta = len(ops)
    return AttackTrace(ops=ops, method=method,
                       budget=AttackBudget(delta=max(delta, len(ops))),
                       seed=seed)


def write_scores(path, pairs, scores):
    """Score table `u v score`, one row per pair, 17 significant digits."""
    scores = np.asarray(scores, dtype=np.float64)
    if len(pairs) != scores.shape[0]:
        raise ValueError("pairs and scores length mismatch")
    with open(path, "w", encoding="utf-8") as f:
        for (u, v), s in zip(pairs, scores):
            f.write(f"{u} {v} {_real(s)}\n")


def parse_scores(path):
    pairs, scores = [], []
    for lineno, line in _data_lines(path):
        parts = line.split()
        if len(parts) != 3:
            raise DataError(f"{path}:{lineno}: expected `u v score`")
        pairs.append(canonical_edge(int(parts[0]), int(parts[1])))
        scores.append(float(parts[2]))
    return pairs, np.array(scores, dtype=np.float64)


def write_curve_csv(path, curve: TradeoffCurve):
    with open(path, "w", encoding="utf-8") as f:
        f.write("t,accuracy,noticeability\n")
        for t, acc, u in curve.points:
            u_str = "" if u is None else _real(u)
            f.write(f"{_real(t)},{_real(acc)},{u_str}\n")


def parse_curve_csv(path, measure_name: str = "") -> TradeoffCurve:
    points = []
    with open(path, "r", encoding="utf-8") as f:
        header = f.readline().strip()
        if header != "t,accuracy,noticeability":
            raise DataError(f"{path}:1: bad curve header {header!r}")
        for lineno, raw in enumerate(f, start=2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise DataError(f"{path}:{lineno}: expected 3 columns")
            u = None if parts[2] == "" else float(parts[2])
            points.append((float(parts[0]), float(parts[1]), u))
    return TradeoffCurve(points=points, measure_name=measure_name)


def write_report(path, payload: dict):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def parse_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def parse_config(path, known_keys) -> dict:
    """key=value lines; `#` comments; unknown keys rejected."""
    out = {}
    for lineno, line in _data_lines(path):
        if "=" not in line:
            raise DataError(f"{path}:{lineno}: expected key=value, got {line!r}")
        key, _, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if key not in known_keys:
            raise DataError(f"{path}:{lineno}: unknown config key {key!r}")
        out[key] = value
    return out


def load_bundle(edge_path, feature_path=None, label_path=None):
    """Dataset bundle -> (Graph, labels or None), checking consistent n."""
    from .graph import Graph
    n, edges = parse_edge_list(edge_path)
    features = None
    if feature_path is not None:
        features = parse_features_csv(feature_path)
        if features.shape[0] < n:
            raise DataError(f"{feature_path}: {features.shape[0]} feature rows "
                            f"but the edge list references node {n - 1}")
        n = features.shape[0]
    labels = None
    if label_path is not None:
        labels = parse_labels(label_path)
        if labels.shape[0] != n:
            raise DataError(f"{label_path}: {labels.shape[0]} labels for "
                            f"{n} nodes")
    if features is None:
        features = np.eye(n)
    return Graph(n=n, edges=edges, features=features), labels
