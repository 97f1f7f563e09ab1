"""End-to-end orchestration: label queries, split, report feature scores,
train per-length routers, evaluate the four policies, and write the
report/curve/misprediction files. Also hosts the blend-parameter sweep."""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import corpus as corpus_mod
from .corpus import build_index, load_index, read_corpus_file
from .evaluation import evaluate_policy, misprediction_costs, proportion_curve
from .featselect import score_features, write_score_table
from .features import FEATURE_NAMES, write_feature_file
from .neural import save_net
from .selector import (SelectorModel, label_queries, read_qrels_file,
                       read_queries_file, split_train_test, train_selector)

POLICIES = ("tpNo", "tpAll", "tpS", "oracle")

REPORT_COLUMNS = ("ranker", "qlen", "policy", "num_queries", "map", "mean_ndcg",
                  "p@1", "p@3", "p@10", "tp_q", "throughput_qps")
# throughput_qps is a measured wall-clock value; every other column is
# deterministic under (config, seed)
MEASURED_COLUMNS = ("throughput_qps",)


def report_dir_for(config):
    return os.environ.get("TPSELECT_REPORT_DIR") or config.report_dir or "."


def load_or_build_index(config):
    if config.index_path and os.path.exists(config.index_path):
        return load_index(config.index_path)
    documents = read_corpus_file(config.corpus_path)
    index = build_index(documents, config.use_stemming)
    if config.index_path:
        corpus_mod.save_index(index, config.index_path)
    return index


def load_queries_as_terms(config):
    """Parsed queries as (query_id, normalized term list)."""
    raw = read_queries_file(config.queries_path)
    return [(qid, corpus_mod.normalize(text, config.use_stemming)) for qid, text in raw]


def _ranker_kwargs(config):
    return dict(bm25_params=config.bm25_params(), blend=config.blend_params(),
                mrf_params=config.mrf_params())


def label_stage(index, config, ranker_kind=None):
    queries = load_queries_as_terms(config)
    qrels = read_qrels_file(config.qrels_path)
    return label_queries(index, queries, qrels,
                         ranker_kind or config.ranker_kind, **_ranker_kwargs(config))


def feature_selection_stage(labeled, out_path, seed=0):
    matrix = [lq.features.vector() for lq in labeled]
    labels = [lq.label for lq in labeled]
    table = score_features(matrix, labels, FEATURE_NAMES, seed=seed)
    write_score_table(table, out_path)
    return table


@dataclass
class PipelineResult:
    ranker_kind: str
    reports: dict = field(default_factory=dict)      # (policy, qlen) -> PolicyReport
    files: list = field(default_factory=list)
    num_labeled: int = 0
    num_positive: int = 0
    test_size: int = 0


def _format_cell(value):
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_report(rows, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(REPORT_COLUMNS) + "\n")
        for row in rows:
            fh.write("\t".join(_format_cell(row[c]) for c in REPORT_COLUMNS) + "\n")


def run_pipeline(config, ranker_kind=None, index=None):
    """label -> split -> feature-score report -> per-length training ->
    four-policy evaluation on the test split. Writes all report files and
    model files; deterministic given (config, seed) except throughput."""
    ranker_kind = ranker_kind or config.ranker_kind
    out_dir = report_dir_for(config)
    os.makedirs(out_dir, exist_ok=True)
    if config.model_dir:
        os.makedirs(config.model_dir, exist_ok=True)

    if index is None:
        index = load_or_build_index(config)
    qrels = read_qrels_file(config.qrels_path)

    labeled = label_stage(index, config, ranker_kind)
    if not labeled:
        raise RuntimeError("label stage produced no labeled queries")

    train_set, test_set = split_train_test(labeled, config.train_fraction, config.seed)

    result = PipelineResult(ranker_kind=ranker_kind)
    result.num_labeled = len(labeled)
    result.num_positive = sum(lq.label for lq in labeled)
    result.test_size = len(test_set)

    labeled_path = os.path.join(out_dir, f"{ranker_kind}_labeled.tsv")
    write_feature_file([lq.features for lq in labeled], labeled_path)
    result.files.append(labeled_path)

    featscores_path = os.path.join(out_dir, f"{ranker_kind}_feature_scores.tsv")
    feature_selection_stage(train_set, featscores_path, seed=config.seed)
    result.files.append(featscores_path)

    model = train_selector(
        train_set, ranker_kind,
        lengths=config.lengths,
        learning_rate=config.learning_rate,
        max_iterations=config.max_iterations,
        pos_class_weight=config.pos_class_weight,
        seed=config.seed,
        threshold=config.threshold,
        hidden_overrides={ln: config.hidden_nodes[(ranker_kind, ln)] for ln in config.lengths},
        momentum_overrides={ln: config.momentum[(ranker_kind, ln)] for ln in config.lengths},
    )
    if config.model_dir:
        for length, net in model.nets.items():
            net_path = os.path.join(config.model_dir, f"{ranker_kind}_len{length}.net")
            save_net(net, net_path)
            result.files.append(net_path)

    test_queries = [(lq.query_id, lq.terms) for lq in test_set]
    test_labels = {lq.query_id: lq.label for lq in test_set}
    kwargs = _ranker_kwargs(config)

    rows = []
    groups = [("all", test_queries)]
    for length in config.lengths:
        groups.append((str(length), [(lq.query_id, lq.terms)
                                     for lq in test_set if lq.length == length]))
    for policy in POLICIES:
        for name, group in groups:
            if not group:
                continue
            report = evaluate_policy(index, group, qrels, ranker_kind, policy,
                                     model=model, labels=test_labels, **kwargs)
            result.reports[(policy, name)] = report
            rows.append({
                "ranker": ranker_kind, "qlen": name, "policy": policy,
                "num_queries": report.num_queries, "map": report.map,
                "mean_ndcg": report.mean_ndcg,
                "p@1": report.p_at[1], "p@3": report.p_at[3], "p@10": report.p_at[10],
                "tp_q": report.tp_query_count,
                "throughput_qps": report.throughput_qps,
            })

    report_path = os.path.join(out_dir, f"{ranker_kind}_report.tsv")
    write_report(rows, report_path)
    result.files.append(report_path)

    # benefit-sorted proportion curve over the test split
    pairs = [(lq.ap_base, lq.ap_tp) for lq in test_set]
    curve = proportion_curve(pairs)
    curve_path = os.path.join(out_dir, f"{ranker_kind}_curve.tsv")
    with open(curve_path, "w", encoding="utf-8") as fh:
        fh.write("proportion\tmap\n")
        for proportion, map_value in curve:
            fh.write(f"{proportion!r}\t{map_value!r}\n")
    result.files.append(curve_path)

    predictions = {}
    for lq in test_set:
        decision, _ = model.route(index, lq.terms)
        predictions[lq.query_id] = 1 if decision == "TP" else 0
    costs = misprediction_costs(
        [(lq.query_id, lq.label, lq.ap_base, lq.ap_tp) for lq in test_set],
        predictions,
    )
    cost_path = os.path.join(out_dir, f"{ranker_kind}_misprediction.tsv")
    with open(cost_path, "w", encoding="utf-8") as fh:
        fh.write("true_label\tpredicted_label\tmean_ap_delta\n")
        for (true, pred), delta in sorted(costs.items()):
            fh.write(f"{true}\t{pred}\t{delta!r}\n")
    result.files.append(cost_path)

    return result


def sweep_blend(config, index=None, grid=None, ranker_kind=None):
    """MAP over the blend grid (epsilon for exp, beta for bm25tp) under the
    tpAll policy; returns (best value, {value: map}), ties to the smaller
    parameter."""
    ranker_kind = ranker_kind or config.ranker_kind
    if ranker_kind == "mrf":
        raise ValueError("the blend sweep applies to exp and bm25tp only")
    if index is None:
        index = load_or_build_index(config)
    queries = load_queries_as_terms(config)
    qrels = read_qrels_file(config.qrels_path)
    # restrict to judged queries so AP is defined
    queries = [(qid, terms) for qid, terms in queries
               if any(g >= 1 for g in qrels.get(qid, {}).values())]
    grid = tuple(grid) if grid else config.sweep_grid
    if not grid:
        raise ValueError("sweep grid must be non-empty")

    table = {}
    best_value = None
    best_map = -np.inf
    for value in sorted(grid):
        blend = config.blend_params()
        if ranker_kind == "exp":
            blend.epsilon = value
        else:
            blend.beta = value
        report = evaluate_policy(index, queries, qrels, ranker_kind, "tpAll",
                                 bm25_params=config.bm25_params(), blend=blend,
                                 mrf_params=config.mrf_params())
        table[value] = report.map
        if report.map > best_map:
            best_map = report.map
            best_value = value
    return best_value, table
