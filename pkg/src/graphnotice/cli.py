"""Command-line entry point.

Subcommands: stats, attack, adaptive, measure, score, curve, bypass, filter,
featmeasure. Precedence for every tunable: built-in default < --config file
(key=value lines) < explicit command-line flag. Exit codes: 0 success,
1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import attacks, dataio, features as featmod, gstats, harness, nn, scorers
from .dataio import DataError
from .graph import AttackPair, GraphError, edge_sets
from .gstats import KatzDivergenceError
from .noticeability import (DEFAULT_AUROC_THRESHOLD, LEARNED_MEASURE,
                            MeasureHandle)
from .rng import DeterministicRng
from .scorers import ScorerConfig
from .stattests import MeasureKind


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


MEASURE_NAMES = [k.value for k in MeasureKind] + [LEARNED_MEASURE]

DEFAULTS = {
    "seed": 0,
    "method": "random",
    "gamma": 0.1,
    "candidate_multiplier": 4.0,
    "measure": MeasureKind.DEGREE_KS.value,
    "scorer": "ensemble",
    "count": -1,  # -1 means "number of inserted edges"
    "hidden_dim": 64,
    "layers": 2,
    "epochs": 200,
    "lr": 0.01,
    "k_nn": 20,
    "keep_percent": 90.0,
    "threshold": DEFAULT_AUROC_THRESHOLD,
    "train_frac": 0.1,
    "val_frac": 0.1,
    "pgd_steps": 200,
    "pgd_lr": 0.1,
    "retrain_interval": 1,
    "feature_scorer": "autoencoder",
    "d_min": 2,
    "svd_rank": 10,
    "property_kind": "degree",
    "emit": "attack",
}


def _merge_options(args) -> dict:
    opts = dict(DEFAULTS)
    if getattr(args, "config", None):
        raw = dataio.parse_config(args.config, set(DEFAULTS))
        for key, value in raw.items():
            opts[key] = type(DEFAULTS[key])(value)
    for key in DEFAULTS:
        cli_val = getattr(args, key, None)
        if cli_val is not None:
            opts[key] = cli_val
    return opts


def _add_common(p: _Parser, *, needs_graph=True):
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--out", default=".")
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--lr", type=float, default=None)
    p.add_argument("--hidden-dim", dest="hidden_dim", type=int, default=None)
    p.add_argument("--layers", type=int, default=None)
    p.add_argument("--k-nn", dest="k_nn", type=int, default=None)
    p.add_argument("--keep-percent", dest="keep_percent", type=float,
                   default=None)
    if needs_graph:
        p.add_argument("--edges", required=True)
        p.add_argument("--features", default=None)
        p.add_argument("--labels", default=None)


def build_parser() -> _Parser:
    parser = _Parser(prog="graphnotice")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("stats", help="graph statistics summary")
    _add_common(p)

    p = sub.add_parser("attack", help="emit an attack trace")
    _add_common(p)
    p.add_argument("--method", default=None,
                   choices=["random", "dice", "pgd", "structack"])
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--candidate-multiplier", dest="candidate_multiplier",
                   type=float, default=None)
    p.add_argument("--pgd-steps", dest="pgd_steps", type=int, default=None)
    p.add_argument("--pgd-lr", dest="pgd_lr", type=float, default=None)
    p.add_argument("--emit", default=None, choices=["attack", "candidates"],
                   help="emit the delta-sized attack or the delta_c-sized "
                        "candidate pool for the adaptive command")

    p = sub.add_parser("adaptive", help="greedy measure-minimizing reorder")
    _add_common(p)
    p.add_argument("--candidates", required=True)
    p.add_argument("--measure", default=None, choices=MEASURE_NAMES)
    p.add_argument("--gamma", type=float, default=None)
    p.add_argument("--retrain-interval", dest="retrain_interval", type=int,
                   default=None)

    p = sub.add_parser("measure", help="one-shot noticeability report")
    _add_common(p)
    p.add_argument("--attacked", required=True)
    p.add_argument("--measure", default=None, choices=MEASURE_NAMES)
    p.add_argument("--threshold", type=float, default=None)
    p.add_argument("--d-min", dest="d_min", type=int, default=None)

    p = sub.add_parser("score", help="emit an edge score table")
    _add_common(p)
    p.add_argument("--attacked", required=True)
    p.add_argument("--scorer", default=None,
                   choices=["ensemble", "gcn", "cosine", "svd", "property"])

    p = sub.add_parser("curve", help="emit a trade-off curve CSV")
    _add_common(p)
    p.add_argument("--trace", required=True)
    p.add_argument("--measure", default=None, choices=MEASURE_NAMES)

    p = sub.add_parser("bypass", help="compare two curves")
    _add_common(p, needs_graph=False)
    p.add_argument("--original", required=True)
    p.add_argument("--adaptive", required=True)

    p = sub.add_parser("filter", help="score-based edge filtering defense")
    _add_common(p)
    p.add_argument("--attacked", required=True)
    p.add_argument("--scores", required=True)
    p.add_argument("--count", type=int, default=None)

    p = sub.add_parser("featmeasure", help="feature-domain noticeability")
    _add_common(p, needs_graph=False)
    p.add_argument("--features", required=True)
    p.add_argument("--attacked-features", dest="attacked_features",
                   required=True)
    p.add_argument("--feature-scorer", dest="feature_scorer", default=None,
                   choices=["autoencoder", "cooccur"])
    p.add_argument("--threshold", type=float, default=None)
    return parser


def _load_graph(args):
    return dataio.load_bundle(args.edges, args.features, args.labels)


def _need_labels(labels, what):
    if labels is None:
        raise DataError(f"{what} requires --labels")
    return labels


def _gcn_cfg(opts) -> nn.GcnConfig:
    return nn.GcnConfig(layers=opts["layers"], hidden_dim=opts["hidden_dim"],
                        lr=opts["lr"], epochs=opts["epochs"])


def _scorer_cfg(opts) -> ScorerConfig:
    return ScorerConfig(hidden_dim=opts["hidden_dim"], layers=opts["layers"],
                        k_nn=opts["k_nn"], keep_percent=opts["keep_percent"],
                        epochs=opts["epochs"], lr=opts["lr"])


def _split_and_model(g, labels, opts, rng):
    fr = (opts["train_frac"], opts["val_frac"],
          1.0 - opts["train_frac"] - opts["val_frac"])
    split = harness.make_split(labels, fr, rng.substream(100))
    model = harness.train_clean_gcn(g, labels, split, _gcn_cfg(opts),
                                    rng.substream(101))
    return split, model


def _out_path(args, name):
    os.makedirs(args.out, exist_ok=True)
    return os.path.join(args.out, name)


def cmd_stats(args, opts):
    g, labels = _load_graph(args)
    payload = {
        "nodes": g.n,
        "edges": g.num_edges,
        "attributes": int(g.features.shape[1]),
        "mean_degree": float(g.degree_vector().mean()) if g.n else 0.0,
        "mean_clustering": float(gstats.clustering_coefficients(g).mean()),
        "mean_homophily": float(gstats.node_homophily(g).mean()),
    }
    if labels is not None:
        payload["classes"] = int(np.unique(labels).size)
    dataio.write_report(_out_path(args, "stats.json"), payload)
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_attack(args, opts):
    g, labels = _load_graph(args)
    rng = DeterministicRng(opts["seed"])
    budget = attacks.AttackBudget.from_gamma(g, opts["gamma"],
                                             opts["candidate_multiplier"])
    delta = budget.delta_c if opts["emit"] == "candidates" else budget.delta
    method = opts["method"]
    if method == "random":
        trace = attacks.random_attack(g, budget, rng.substream(0), delta=delta)
    elif method == "dice":
        labels = _need_labels(labels, "dice")
        trace = attacks.dice_attack(g, labels, budget, rng.substream(0),
                                    delta=delta)
    elif method == "structack":
        trace = attacks.structack(g, budget, delta=delta)
    else:
        labels = _need_labels(labels, "pgd")
        _, surrogate = _split_and_model(g, labels, opts, rng)
        trace = attacks.pgd_attack(g, labels, budget, surrogate,
                                   rng.substream(0), steps=opts["pgd_steps"],
                                   lr=opts["pgd_lr"], delta=delta)
    attacks.validate_trace(g, trace, limit=delta)
    path = _out_path(args, "trace.txt")
    dataio.write_trace(path, trace)
    print(f"wrote {len(trace.ops)} ops to {path}")
    return 0


def cmd_adaptive(args, opts):
    g, _ = _load_graph(args)
    rng = DeterministicRng(opts["seed"])
    candidates = dataio.parse_trace(args.candidates)
    attacks.validate_trace(g, candidates, limit=len(candidates.ops))
    delta = int(round(opts["gamma"] * g.num_edges))
    budget = attacks.AttackBudget(delta=delta, gamma=opts["gamma"],
                                  delta_c=len(candidates.ops))
    handle = MeasureHandle(name=opts["measure"], scorer_cfg=_scorer_cfg(opts),
                           rng=rng.substream(0), d_min=opts["d_min"],
                           retrain_interval=opts["retrain_interval"])
    from .noticeability import measure_for_adaptive
    trace = attacks.adaptive_greedy(g, candidates, budget,
                                    measure_for_adaptive(handle))
    path = _out_path(args, "adaptive_trace.txt")
    dataio.write_trace(path, trace)
    print(f"wrote {len(trace.ops)} ops to {path}")
    return 0


def cmd_measure(args, opts):
    g, _ = _load_graph(args)
    n_hat, edges_hat = dataio.parse_edge_list(args.attacked)
    if n_hat > g.n:
        raise DataError(f"{args.attacked}: node index {n_hat - 1} exceeds "
                        f"graph size {g.n}")
    g_hat = g.with_edges(edges_hat)
    rng = DeterministicRng(opts["seed"])
    handle = MeasureHandle(name=opts["measure"], scorer_cfg=_scorer_cfg(opts),
                           rng=rng.substream(0), threshold=opts["threshold"],
                           d_min=opts["d_min"])
    report = handle.evaluate(g, g_hat)
    dataio.write_report(_out_path(args, "report.json"), report.to_dict())
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def cmd_score(args, opts):
    g, labels = _load_graph(args)
    n_hat, edges_hat = dataio.parse_edge_list(args.attacked)
    g_hat = g.with_edges(edges_hat)
    rng = DeterministicRng(opts["seed"])
    _, _, e0, pair_labels = edge_sets(AttackPair(g, g_hat))
    name = opts["scorer"]
    if name == "ensemble":
        model, _ = scorers.train_ensemble_scorer(g_hat, _scorer_cfg(opts),
                                                 rng.substream(0))
        values = model.frozen().score(e0)
    elif name == "gcn":
        model, _ = scorers.gcn_link_scorer(g_hat, _scorer_cfg(opts),
                                           rng.substream(0))
        values = model.frozen().score(e0)
    elif name == "cosine":
        values = scorers.cosine_score(g_hat.features, e0)
    elif name == "svd":
        values = scorers.svd_score(g_hat, min(opts["svd_rank"], g_hat.n), e0)
    else:
        values = scorers.property_logistic_score(g_hat, opts["property_kind"],
                                                 e0, rng.substream(0))
    path = _out_path(args, "scores.txt")
    dataio.write_scores(path, e0, values)
    print(f"wrote {len(e0)} scores to {path}")
    return 0


def cmd_curve(args, opts):
    g, labels = _load_graph(args)
    labels = _need_labels(labels, "curve")
    rng = DeterministicRng(opts["seed"])
    trace = dataio.parse_trace(args.trace)
    attacks.validate_trace(g, trace, limit=len(trace.ops))
    split, model = _split_and_model(g, labels, opts, rng)
    handle = MeasureHandle(name=opts["measure"], scorer_cfg=_scorer_cfg(opts),
                           rng=rng.substream(0), d_min=opts["d_min"],
                           retrain_interval=opts["retrain_interval"])
    curve = harness.tradeoff_curve(g, trace, handle, model, labels, split)
    path = _out_path(args, "curve.csv")
    dataio.write_curve_csv(path, curve)
    print(f"wrote {len(curve.points)} points to {path}")
    return 0


def cmd_bypass(args, opts):
    original = dataio.parse_curve_csv(args.original)
    adaptive = dataio.parse_curve_csv(args.adaptive)
    report = harness.bypassable_rate(original, adaptive)
    dataio.write_report(_out_path(args, "bypass.json"), report.to_dict())
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


def cmd_filter(args, opts):
    g, labels = _load_graph(args)
    labels = _need_labels(labels, "filter")
    n_hat, edges_hat = dataio.parse_edge_list(args.attacked)
    g_hat = g.with_edges(edges_hat)
    pairs, values = dataio.parse_scores(args.scores)
    table = dict(zip(pairs, values))
    try:
        scores = np.array([table[e] for e in g_hat.sorted_edges()])
    except KeyError as exc:
        raise DataError(f"{args.scores}: missing score for edge {exc}")
    count = opts["count"]
    if count < 0:
        count = max(0, g_hat.num_edges - g.num_edges)
    rng = DeterministicRng(opts["seed"])
    fr = (opts["train_frac"], opts["val_frac"],
          1.0 - opts["train_frac"] - opts["val_frac"])
    split = harness.make_split(labels, fr, rng.substream(100))
    acc_att, acc_fil = harness.filtered_classification(
        g, g_hat, scores, count, labels, split, _gcn_cfg(opts),
        rng.substream(101))
    filtered = harness.filter_edges(g_hat, scores, count)
    dataio.write_edge_list(_out_path(args, "filtered_edges.txt"),
                           filtered.edges)
    payload = {"count": count, "acc_attacked": acc_att,
               "acc_filtered": acc_fil}
    dataio.write_report(_out_path(args, "filter.json"), payload)
    print(json.dumps(payload, sort_keys=True))
    return 0


def cmd_featmeasure(args, opts):
    x = dataio.parse_features_csv(args.features)
    x_hat = dataio.parse_features_csv(args.attacked_features)
    rng = DeterministicRng(opts["seed"])
    cfg = featmod.AutoencoderConfig(epochs=opts["epochs"],
                                    keep_percent=opts["keep_percent"],
                                    lr=opts["lr"])
    report = featmod.feature_measure(x, x_hat, opts["feature_scorer"], cfg,
                                     rng.substream(0), opts["threshold"])
    dataio.write_report(_out_path(args, "featreport.json"), report.to_dict())
    print(json.dumps(report.to_dict(), sort_keys=True))
    return 0


_COMMANDS = {
    "stats": cmd_stats,
    "attack": cmd_attack,
    "adaptive": cmd_adaptive,
    "measure": cmd_measure,
    "score": cmd_score,
    "curve": cmd_curve,
    "bypass": cmd_bypass,
    "filter": cmd_filter,
    "featmeasure": cmd_featmeasure,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command not in _COMMANDS:
            raise UsageError("missing or unknown subcommand")
        opts = _merge_options(args)
        return _COMMANDS[args.command](args, opts)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return 1
    except (DataError, GraphError, FileNotFoundError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2
    except (FloatingPointError, KatzDivergenceError,
            attacks.NotApplicableError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
