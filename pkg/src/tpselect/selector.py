"""Benefit labeling, per-query-length classifier training, and TP/BASE
routing. Queries of length 3-5 get their own networks; anything outside
the configured range routes to BASE."""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass, field

from .evaluation import average_precision, binary_relevant
from .features import FEATURE_MASKS, extract_features
from .neural import NetConfig, forward, train
from .rankers import dedup_terms, score_query

logger = logging.getLogger(__name__)

QUERY_LENGTHS = (3, 4, 5)

# Per-(ranker, length) hidden-node counts and momentum coefficients.
HIDDEN_NODES = {
    ("exp", 3): 43, ("exp", 4): 58, ("exp", 5): 47,
    ("mrf", 3): 45, ("mrf", 4): 39, ("mrf", 5): 47,
    ("bm25tp", 3): 52, ("bm25tp", 4): 10, ("bm25tp", 5): 20,
}
MOMENTUM = {
    ("exp", 3): 1.0, ("exp", 4): 0.85, ("exp", 5): 0.85,
    ("mrf", 3): 0.35, ("mrf", 4): 0.9, ("mrf", 5): 0.85,
    ("bm25tp", 3): 0.95, ("bm25tp", 4): 0.25, ("bm25tp", 5): 0.75,
}


@dataclass
class LabeledQuery:
    query_id: str
    terms: list[str]
    length: int
    features: object  # QueryFeatures
    ap_base: float
    ap_tp: float

    @property
    def label(self):
        return 1 if self.ap_tp > self.ap_base else 0


@dataclass
class SelectorModel:
    ranker_kind: str
    nets: dict[int, object]  # length -> NeuralNet
    feature_mask: tuple[str, ...]
    threshold: float = 0.5

    def route(self, index, query_terms):
        """(decision, probability); BASE with probability None for query
        lengths without a trained net."""
        terms = dedup_terms(query_terms)
        net = self.nets.get(len(terms))
        if net is None:
            return "BASE", None
        qf = extract_features(index, terms, names=self.feature_mask)
        prob = forward(net, qf.vector(self.feature_mask))
        return ("TP" if prob >= self.threshold else "BASE"), prob


def label_queries(index, queries, qrels, ranker_kind, *, bm25_params=None,
                  blend=None, mrf_params=None, ap_depth=1000):
    """Compare TP vs baseline AP per query; label 1 iff TP strictly wins.

    Queries without judged-relevant documents are excluded (AP undefined).
    """
    labeled = []
    for query_id, terms in queries:
        relevant = binary_relevant(qrels.get(query_id, {}))
        if not relevant:
            logger.info("query %s excluded: no judged-relevant documents", query_id)
            continue
        terms = dedup_terms(terms)
        base = score_query(index, terms, ranker_kind, False, bm25_params=bm25_params,
                           blend=blend, mrf_params=mrf_params, query_id=query_id)
        tp = score_query(index, terms, ranker_kind, True, bm25_params=bm25_params,
                         blend=blend, mrf_params=mrf_params, query_id=query_id)
        qf = extract_features(index, terms, query_id)
        labeled.append(LabeledQuery(
            query_id=query_id,
            terms=list(terms),
            length=len(terms),
            features=qf,
            ap_base=average_precision(base.doc_ids(), relevant, ap_depth),
            ap_tp=average_precision(tp.doc_ids(), relevant, ap_depth),
        ))
        qf.label = labeled[-1].label
    return labeled


def split_train_test(labeled, train_fraction=0.7, seed=0):
    """Stratified split by (length, label); deterministic under seed."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    strata = {}
    for lq in labeled:
        strata.setdefault((lq.length, lq.label), []).append(lq)

    rng = random.Random(seed)
    train, test = [], []
    for key in sorted(strata):
        group = strata[key]
        if len(group) < 2:
            logger.warning("stratum %s has %d queries; split may be empty on one side",
                           key, len(group))
        order = list(group)
        rng.shuffle(order)
        cut = int(train_fraction * len(order))
        train.extend(order[:cut])
        test.extend(order[cut:])
    train.sort(key=lambda lq: lq.query_id)
    test.sort(key=lambda lq: lq.query_id)
    return train, test


def train_selector(train_set, ranker_kind, *, lengths=QUERY_LENGTHS,
                   learning_rate=0.01, max_iterations=1000,
                   pos_class_weight=2.0, seed=0, threshold=0.5,
                   hidden_overrides=None, momentum_overrides=None):
    """One net per configured query length, using the ranker's feature mask
    and the per-(ranker, length) hidden-node/momentum defaults."""
    mask = FEATURE_MASKS[ranker_kind]
    nets = {}
    for length in lengths:
        group = [lq for lq in train_set if lq.length == length]
        labels = {lq.label for lq in group}
        if labels != {0, 1}:
            missing = "1" if 1 not in labels else "0"
            raise ValueError(
                f"length-{length} training set lacks label-{missing} queries"
            )
        hidden = (hidden_overrides or {}).get(length, HIDDEN_NODES[(ranker_kind, length)])
        momentum = (momentum_overrides or {}).get(length, MOMENTUM[(ranker_kind, length)])
        config = NetConfig(
            num_inputs=len(mask),
            num_hidden=hidden,
            learning_rate=learning_rate,
            max_iterations=max_iterations,
            momentum=momentum,
            pos_class_weight=pos_class_weight,
            seed=seed + length,
        )
        samples = [(lq.features.vector(mask), lq.label) for lq in group]
        nets[length], _ = train(config, samples)
    return SelectorModel(ranker_kind=ranker_kind, nets=nets,
                         feature_mask=tuple(mask), threshold=threshold)


def read_queries_file(path):
    """`query_id<TAB>query text` lines."""
    queries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                query_id, text = line.split("\t", 1)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: expected 'query_id<TAB>text'") from exc
            queries.append((query_id, text))
    return queries


def read_qrels_file(path):
    """TREC qrels: `query_id 0 doc_id relevance`."""
    qrels = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.split()
            if not parts:
                continue
            if len(parts) != 4:
                raise ValueError(f"{path}:{lineno}: expected 4 fields")
            query_id, _, doc_id, rel = parts
            qrels.setdefault(query_id, {})[int(doc_id)] = int(rel)
    return qrels
