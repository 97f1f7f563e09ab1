"""Ranking functions: BM25, BM25TP (proximity accumulator), EXP (min-dist
blend), and a sequential-dependence MRF ranker.

All rankers score the conjunctive candidate set (documents containing every
query term) so the four methods are directly comparable. Duplicate query
terms are collapsed before scoring. Natural logarithm throughout.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from .corpus import intersect

logger = logging.getLogger(__name__)


@dataclass
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75

    def __post_init__(self):
        if self.k1 <= 0:
            raise ValueError("k1 must be positive")
        if not 0.0 <= self.b <= 1.0:
            raise ValueError("b must lie in [0, 1]")


@dataclass
class BlendParams:
    epsilon: float = 0.5  # EXP blend weight
    beta: float = 0.5     # BM25TP blend weight
    alpha: float = 0.3    # EXP log-floor constant

    def __post_init__(self):
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if not 0.0 <= self.beta <= 1.0:
            raise ValueError("beta must lie in [0, 1]")
        if self.alpha <= 0:
            raise ValueError("alpha must be positive")


@dataclass
class MrfParams:
    lambda_t: float = 0.85
    lambda_o: float = 0.10
    lambda_u: float = 0.05
    window_size: int = 8
    mu: float = 2500.0

    def __post_init__(self):
        if abs(self.lambda_t + self.lambda_o + self.lambda_u - 1.0) > 1e-12:
            raise ValueError("lambda weights must sum to 1")
        if min(self.lambda_t, self.lambda_o, self.lambda_u) < 0:
            raise ValueError("lambda weights must be non-negative")
        if self.window_size < 2:
            raise ValueError("window_size must be at least 2")
        if self.mu <= 0:
            raise ValueError("mu must be positive")


@dataclass
class RankedList:
    query_id: str
    entries: list[tuple[int, float]] = field(default_factory=list)

    def doc_ids(self):
        return [doc_id for doc_id, _ in self.entries]


def _ranked(query_id, scores):
    """Sort (doc_id -> score) descending by score, ties by ascending doc_id."""
    entries = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return RankedList(query_id, entries)


def dedup_terms(terms):
    """Distinct terms in first-occurrence order."""
    seen = []
    for t in terms:
        if t not in seen:
            seen.append(t)
    return seen


def idf(index, term):
    """ln(1 + (N - df + 0.5) / (df + 0.5)); always positive for N >= 1."""
    n = index.doc_count
    if n == 0:
        return 0.0
    plist = index.postings.get(term)
    df = plist.document_frequency if plist is not None else 0
    return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def _bm25_norm(index, doc_id, params):
    avg = index.avg_doc_length
    if avg == 0:
        return params.k1
    return params.k1 * (1.0 - params.b + params.b * index.doc_lengths[doc_id] / avg)


def _bm25_score_doc(index, doc_id, terms, params):
    total = 0.0
    for term in terms:
        posting = index.postings[term].get(doc_id)
        f = posting.frequency if posting is not None else 0
        if f == 0:
            continue
        total += idf(index, term) * f * (params.k1 + 1.0) / (f + _bm25_norm(index, doc_id, params))
    return total


def score_bm25(index, query_terms, params=None, query_id=""):
    params = params or Bm25Params()
    terms = dedup_terms(query_terms)
    if not terms:
        raise ValueError("query must contain at least one term")
    candidates = intersect(index, terms)
    return _ranked(query_id, {d: _bm25_score_doc(index, d, terms, params) for d in candidates})


def dist(index, doc_id, occurrence_pos, term_s, term_t=None):
    """Positional difference between an occurrence of t and the closest
    preceding occurrence of s (adjacent terms -> 1); None if no occurrence
    of s precedes."""
    if term_t is not None and term_s == term_t:
        raise ValueError("dist requires two distinct terms")
    plist = index.postings.get(term_s)
    posting = plist.get(doc_id) if plist is not None else None
    if posting is None:
        return None
    best = None
    for p in posting.positions:
        if p < occurrence_pos:
            best = p
        else:
            break
    if best is None:
        return None
    return occurrence_pos - best


def tpi(index, doc_id, term_t, term_s):
    """Sum of dist^-2 over occurrences of t with a preceding s."""
    if term_t == term_s:
        raise ValueError("tpi requires two distinct terms")
    plist = index.postings.get(term_t)
    posting = plist.get(doc_id) if plist is not None else None
    if posting is None:
        return 0.0
    total = 0.0
    for pos in posting.positions:
        d = dist(index, doc_id, pos, term_s)
        if d is not None:
            total += d ** -2
    return total


def _acc(index, doc_id, term, other_terms):
    w = idf(index, term)
    return sum(w * tpi(index, doc_id, term, s) for s in other_terms)


def tp_saturation(acc, term_idf, norm, k1):
    """Per-term proximity contribution: the accumulator run through the
    BM25-style saturation with the idf weight capped at 1. Non-decreasing
    in acc for acc >= 0."""
    if acc == 0.0:
        return 0.0
    return min(1.0, term_idf) * acc * (k1 + 1.0) / (acc + norm)


def _tp_acc_score_doc(index, doc_id, terms, params):
    total = 0.0
    norm = _bm25_norm(index, doc_id, params)
    for term in terms:
        others = [s for s in terms if s != term]
        acc = _acc(index, doc_id, term, others)
        total += tp_saturation(acc, idf(index, term), norm, params.k1)
    return total


def score_bm25tp(index, query_terms, bm25_params=None, blend=None, query_id=""):
    """beta * S_TP_acc + (1 - beta) * S_BM25 over the conjunctive candidates.

    Single-term queries carry no proximity evidence; they fall back to
    pure BM25 with a logged warning.
    """
    bm25_params = bm25_params or Bm25Params()
    blend = blend or BlendParams()
    terms = dedup_terms(query_terms)
    if len(terms) < 2:
        logger.warning("BM25TP on single-term query %r: falling back to BM25", query_id)
        return score_bm25(index, terms, bm25_params, query_id)
    candidates = intersect(index, terms)
    scores = {}
    for d in candidates:
        base = _bm25_score_doc(index, d, terms, bm25_params)
        tp = _tp_acc_score_doc(index, d, terms, bm25_params)
        scores[d] = blend.beta * tp + (1.0 - blend.beta) * base
    return _ranked(query_id, scores)


def min_dist(index, doc_id, query_terms):
    """Minimum absolute positional gap over occurrence pairs of distinct
    query terms in the document; inf if fewer than two distinct terms occur."""
    terms = dedup_terms(query_terms)
    present = []
    for t in terms:
        plist = index.postings.get(t)
        posting = plist.get(doc_id) if plist is not None else None
        if posting is not None:
            present.append(posting.positions)
    if len(present) < 2:
        return math.inf
    best = math.inf
    for i in range(len(present)):
        for j in range(i + 1, len(present)):
            # both lists sorted: two-pointer minimum gap
            a, b = present[i], present[j]
            ai = bi = 0
            while ai < len(a) and bi < len(b):
                gap = abs(a[ai] - b[bi])
                if gap < best:
                    best = gap
                if a[ai] < b[bi]:
                    ai += 1
                else:
                    bi += 1
    return best


def score_exp(index, query_terms, bm25_params=None, blend=None, query_id=""):
    """epsilon * log(alpha + exp(-min_dist)) + (1 - epsilon) * S_BM25."""
    bm25_params = bm25_params or Bm25Params()
    blend = blend or BlendParams()
    terms = dedup_terms(query_terms)
    if len(terms) < 2:
        logger.warning("EXP on single-term query %r: falling back to BM25", query_id)
        return score_bm25(index, terms, bm25_params, query_id)
    candidates = intersect(index, terms)
    scores = {}
    for d in candidates:
        base = _bm25_score_doc(index, d, terms, bm25_params)
        md = min_dist(index, d, terms)
        tp = math.log(blend.alpha + (0.0 if math.isinf(md) else math.exp(-md)))
        scores[d] = blend.epsilon * tp + (1.0 - blend.epsilon) * base
    return _ranked(query_id, scores)


# ---------------------------------------------------------------------------
# Sequential-dependence MRF
# ---------------------------------------------------------------------------


def _ordered_count(pos_a, pos_b):
    """Occurrences of term a immediately followed by term b."""
    set_b = set(pos_b)
    return sum(1 for p in pos_a if p + 1 in set_b)


def _window_count(pos_a, pos_b, window_size):
    """Occurrence pairs (one of each term) within window_size tokens,
    either order: |p_a - p_b| <= window_size - 1."""
    count = 0
    for pa in pos_a:
        for pb in pos_b:
            if abs(pa - pb) <= window_size - 1:
                count += 1
    return count


def _positions(index, term, doc_id):
    plist = index.postings.get(term)
    posting = plist.get(doc_id) if plist is not None else None
    return posting.positions if posting is not None else []


def _collection_pair_counts(index, term_a, term_b, window_size):
    """Collection-wide ordered-adjacency and window co-occurrence counts."""
    ordered = 0
    window = 0
    for doc_id in intersect(index, [term_a, term_b]):
        pos_a = _positions(index, term_a, doc_id)
        pos_b = _positions(index, term_b, doc_id)
        ordered += _ordered_count(pos_a, pos_b)
        window += _window_count(pos_a, pos_b, window_size)
    return ordered, window


def _dirichlet_log(count, doc_len, collection_count, collection_len, mu):
    # Zero collection count would push the smoothed probability to zero;
    # floor it at 0.5 so scores stay finite.
    cf = collection_count if collection_count > 0 else 0.5
    return math.log((count + mu * cf / collection_len) / (doc_len + mu))


def mrf_features(index, doc_id, query_terms, params=None):
    """Log Dirichlet-smoothed feature values for one document.

    Returns (f_t per term, f_o per adjacent pair, f_u per adjacent pair),
    keyed by term and (term, term) pair respectively.
    """
    params = params or MrfParams()
    terms = dedup_terms(query_terms)
    doc_len = index.doc_lengths[doc_id]
    coll_len = index.collection_length
    f_t = {}
    for t in terms:
        count = len(_positions(index, t, doc_id))
        f_t[t] = _dirichlet_log(count, doc_len, index.collection_frequency(t), coll_len, params.mu)
    f_o = {}
    f_u = {}
    for a, b in zip(terms, terms[1:]):
        pos_a = _positions(index, a, doc_id)
        pos_b = _positions(index, b, doc_id)
        coll_o, coll_u = _collection_pair_counts(index, a, b, params.window_size)
        f_o[(a, b)] = _dirichlet_log(_ordered_count(pos_a, pos_b), doc_len, coll_o, coll_len, params.mu)
        f_u[(a, b)] = _dirichlet_log(
            _window_count(pos_a, pos_b, params.window_size), doc_len, coll_u, coll_len, params.mu
        )
    return f_t, f_o, f_u


def score_mrf(index, query_terms, params=None, query_id=""):
    """lambda_t * sum f_t + lambda_o * sum f_o + lambda_u * sum f_u over
    adjacent query-term bigrams; reduces to the term-only score when
    lambda_o = lambda_u = 0."""
    params = params or MrfParams()
    terms = dedup_terms(query_terms)
    if not terms:
        raise ValueError("query must contain at least one term")
    candidates = intersect(index, terms)
    need_pairs = params.lambda_o > 0 or params.lambda_u > 0

    # Collection pair statistics are per query, not per document.
    pair_stats = {}
    if need_pairs:
        for a, b in zip(terms, terms[1:]):
            pair_stats[(a, b)] = _collection_pair_counts(index, a, b, params.window_size)
    coll_freq = {t: index.collection_frequency(t) for t in terms}
    coll_len = index.collection_length

    scores = {}
    for d in candidates:
        doc_len = index.doc_lengths[d]
        score = 0.0
        for t in terms:
            count = len(_positions(index, t, d))
            score += params.lambda_t * _dirichlet_log(count, doc_len, coll_freq[t], coll_len, params.mu)
        if need_pairs:
            for (a, b), (coll_o, coll_u) in pair_stats.items():
                pos_a = _positions(index, a, d)
                pos_b = _positions(index, b, d)
                score += params.lambda_o * _dirichlet_log(
                    _ordered_count(pos_a, pos_b), doc_len, coll_o, coll_len, params.mu
                )
                score += params.lambda_u * _dirichlet_log(
                    _window_count(pos_a, pos_b, params.window_size), doc_len, coll_u, coll_len, params.mu
                )
        scores[d] = score
    return _ranked(query_id, scores)


def score_mrf_base(index, query_terms, params=None, query_id=""):
    """Term-only MRF score (the non-proximity baseline)."""
    params = params or MrfParams()
    base = MrfParams(1.0, 0.0, 0.0, params.window_size, params.mu)
    return score_mrf(index, query_terms, base, query_id)


RANKER_KINDS = ("exp", "mrf", "bm25tp")


def score_query(index, query_terms, ranker_kind, use_tp, bm25_params=None,
                blend=None, mrf_params=None, query_id=""):
    """Dispatch to the TP or baseline ranker for the given kind."""
    if ranker_kind not in RANKER_KINDS:
        raise ValueError(f"unknown ranker kind {ranker_kind!r}")
    if ranker_kind == "mrf":
        if use_tp:
            return score_mrf(index, query_terms, mrf_params, query_id)
        return score_mrf_base(index, query_terms, mrf_params, query_id)
    if use_tp:
        if ranker_kind == "exp":
            return score_exp(index, query_terms, bm25_params, blend, query_id)
        return score_bm25tp(index, query_terms, bm25_params, blend, query_id)
    return score_bm25(index, query_terms, bm25_params, query_id)


def write_trec_run(ranked_lists, path, tag="tpselect"):
    """TREC run format: query_id Q0 doc_id rank score tag."""
    with open(path, "w", encoding="utf-8") as fh:
        for rl in ranked_lists:
            for rank, (doc_id, score) in enumerate(rl.entries, start=1):
                fh.write(f"{rl.query_id} Q0 {doc_id} {rank} {score:.6f} {tag}\n")
