"""Ranking metrics (AP, P@k, NDCG), policy evaluation (tpNo / tpAll /
tpS / oracle), the benefit-sorted proportion curve, and misprediction
cost accounting.

Binary relevance (grade >= 1) drives AP and P@k; NDCG uses the graded
values with exponential gain and a log2(i+1) discount.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from .rankers import score_query

AP_DEPTH = 1000
NDCG_CUTOFF = 10
PRECISION_KS = (1, 3, 10)


def average_precision(ranked_doc_ids, relevant, depth=AP_DEPTH):
    """Mean precision at the ranks of retrieved relevant docs, divided by
    the total number of relevant docs (missing ones count as zero)."""
    if not relevant:
        raise ValueError("relevant set must be non-empty")
    hits = 0
    total = 0.0
    for rank, doc_id in enumerate(ranked_doc_ids[:depth], start=1):
        if doc_id in relevant:
            hits += 1
            total += hits / rank
    return total / len(relevant)


def precision_at_k(ranked_doc_ids, relevant, k):
    """|relevant in top-k| / k; short lists still divide by k."""
    if k < 1:
        raise ValueError("k must be at least 1")
    return sum(1 for d in ranked_doc_ids[:k] if d in relevant) / k


def ndcg(ranked_doc_ids, relevance, cutoff=NDCG_CUTOFF):
    """(2^rel - 1) / log2(i+1) gain, normalized by the ideal ordering;
    0 when every grade is zero."""
    def dcg(grades):
        return sum((2 ** g - 1) / math.log2(i + 1)
                   for i, g in enumerate(grades[:cutoff], start=1))

    ideal = dcg(sorted(relevance.values(), reverse=True))
    if ideal == 0:
        return 0.0
    return dcg([relevance.get(d, 0) for d in ranked_doc_ids]) / ideal


@dataclass
class PolicyReport:
    policy: str
    num_queries: int
    map: float
    mean_ndcg: float
    p_at: dict[int, float]
    tp_query_count: int
    throughput_qps: float
    per_query_ap: dict[str, float] = field(default_factory=dict)


def binary_relevant(graded):
    return {d for d, g in graded.items() if g >= 1}


def evaluate_policy(index, queries, qrels, ranker_kind, policy, *,
                    bm25_params=None, blend=None, mrf_params=None,
                    model=None, labels=None, ap_depth=AP_DEPTH,
                    ndcg_cutoff=NDCG_CUTOFF):
    """Score every query under the policy's ranker choice and aggregate.

    queries: list of (query_id, terms). qrels: query_id -> {doc_id: grade}.
    policy: "tpNo" | "tpAll" | "tpS" (needs model) | "oracle" (needs labels,
    query_id -> 0/1). Throughput covers scoring plus routing, not metric
    computation or index load.
    """
    if policy == "tpS" and model is None:
        raise ValueError("tpS policy needs a selector model")
    if policy == "oracle" and labels is None:
        raise ValueError("oracle policy needs labels")

    decisions = {}
    started = time.perf_counter()
    rankings = {}
    for query_id, terms in queries:
        if policy == "tpNo":
            use_tp = False
        elif policy == "tpAll":
            use_tp = True
        elif policy == "oracle":
            use_tp = labels[query_id] == 1
        else:
            decision, _ = model.route(index, terms)
            use_tp = decision == "TP"
        decisions[query_id] = use_tp
        rankings[query_id] = score_query(
            index, terms, ranker_kind, use_tp,
            bm25_params=bm25_params, blend=blend, mrf_params=mrf_params,
            query_id=query_id,
        )
    elapsed = time.perf_counter() - started

    aps = {}
    ndcgs = []
    p_at = {k: [] for k in PRECISION_KS}
    for query_id, _ in queries:
        graded = qrels[query_id]
        relevant = binary_relevant(graded)
        doc_ids = rankings[query_id].doc_ids()
        aps[query_id] = average_precision(doc_ids, relevant, ap_depth)
        ndcgs.append(ndcg(doc_ids, graded, ndcg_cutoff))
        for k in PRECISION_KS:
            p_at[k].append(precision_at_k(doc_ids, relevant, k))

    n = len(queries)
    return PolicyReport(
        policy=policy,
        num_queries=n,
        map=sum(aps.values()) / n if n else 0.0,
        mean_ndcg=sum(ndcgs) / n if n else 0.0,
        p_at={k: (sum(v) / n if n else 0.0) for k, v in p_at.items()},
        tp_query_count=sum(decisions.values()),
        throughput_qps=n / elapsed if elapsed > 0 else 0.0,
        per_query_ap=aps,
    )


def proportion_curve(ap_pairs):
    """MAP as TP is applied to the m most-benefited queries, m = 0..n.

    ap_pairs: list of (ap_base, ap_tp). Returns [(proportion, map)] with
    proportions m/n ascending.
    """
    if not ap_pairs:
        raise ValueError("need at least one query")
    ordered = sorted(ap_pairs, key=lambda p: p[1] - p[0], reverse=True)
    n = len(ordered)
    total = sum(base for base, _ in ordered)
    curve = [(0.0, total / n)]
    for m, (base, tp) in enumerate(ordered, start=1):
        total += tp - base
        curve.append((m / n, total / n))
    return curve


def misprediction_costs(labeled, predictions):
    """Mean (achieved AP - best-possible AP) per (true label, predicted
    label) cell; diagonal cells are 0 by construction.

    labeled: list of (query_id, label, ap_base, ap_tp).
    predictions: query_id -> predicted 0/1.
    """
    cells = {(t, p): [] for t in (0, 1) for p in (0, 1)}
    for query_id, label, ap_base, ap_tp in labeled:
        pred = predictions[query_id]
        best = max(ap_base, ap_tp) if label == 1 else ap_base
        achieved = ap_tp if pred == 1 else ap_base
        cells[(label, pred)].append(achieved - best)
    return {
        cell: (sum(vals) / len(vals) if vals else 0.0)
        for cell, vals in cells.items()
    }
