"""Bundled synthetic corpus for desk-scale experiments.

Construction: every document is 160 tokens and contains each of its
query's terms exactly 6 times, so all five documents designed for a query
tie exactly under bag-of-words scoring (same tf, same length, same idf)
and the baseline ranking is pure doc_id order. Proximity then decides:

  * "benefits" queries: the two relevant documents carry the terms as
    adjacent phrases but get the LARGEST doc_ids, so the baseline ranks
    the three scattered distractors first and proximity scoring recovers
    the relevant documents.
  * "hurt" queries: the relevant documents are scattered but get the
    SMALLEST doc_ids (baseline is perfect); the distractors carry
    adjacent phrases, so proximity scoring demotes the relevant ones.

Query terms for the two groups come from disjoint vocabulary bands placed
early vs late inside documents, which makes the general-position features
predictive of proximity benefit. Scattered occurrences keep every
cross-term gap at 8+ tokens so window-8 and inverse-square-distance
evidence stays negligible.
"""

from __future__ import annotations

import random

DOC_LEN = 160
REPS = 6
GAP = 8


def _band(prefix, size):
    return [f"{prefix}{i:02d}" for i in range(size)]


def _fill(rng, length, filler):
    return [rng.choice(filler) for _ in range(length)]


def _place_adjacent(tokens, terms, start):
    for rep in range(REPS):
        base = start + rep * (len(terms) + GAP)
        for i, term in enumerate(terms):
            tokens[base + i] = term


def _place_scattered(tokens, terms, start):
    # same-term occurrences form a block; blocks of different terms sit
    # GAP tokens apart so no cross-term pair is closer than GAP
    for i, term in enumerate(terms):
        base = start + i * (REPS + GAP)
        for rep in range(REPS):
            tokens[base + rep] = term


def _make_doc(rng, terms, adjacent, early, filler):
    tokens = _fill(rng, DOC_LEN, filler)
    span = REPS * (len(terms) + GAP) if adjacent else len(terms) * (REPS + GAP)
    jitter = rng.randint(0, 3)
    start = 2 + jitter if early else DOC_LEN - span - 2 - jitter
    if adjacent:
        _place_adjacent(tokens, terms, start)
    else:
        _place_scattered(tokens, terms, start)
    return " ".join(tokens)


def make_synthetic(seed=7, queries_per_length=24):
    """Returns (documents, queries, qrels): documents as (doc_id, text),
    queries as (query_id, text), qrels as query_id -> {doc_id: grade}."""
    rng = random.Random(seed)
    early_band = _band("apex", 48)
    late_band = _band("omega", 48)
    filler = [f"pad{i:03d}" for i in range(150)]

    documents = []
    queries = []
    qrels = {}
    doc_id = 1
    for length in (3, 4, 5):
        for j in range(queries_per_length):
            benefits = j % 2 == 0
            band = early_band if benefits else late_band
            terms = rng.sample(band, length)
            query_id = f"q{length}_{j:02d}"
            queries.append((query_id, " ".join(terms)))

            # relevant docs: adjacent iff the query should benefit from TP
            rel = [_make_doc(rng, terms, adjacent=benefits, early=benefits, filler=filler)
                   for _ in range(2)]
            dis = [_make_doc(rng, terms, adjacent=not benefits, early=benefits, filler=filler)
                   for _ in range(3)]
            if benefits:
                ordered = dis + rel  # distractors get the smaller doc_ids
                grades = [0, 0, 0, 2, 1]
            else:
                ordered = rel + dis  # relevant docs come first under ties
                grades = [2, 1, 0, 0, 0]

            judgments = {}
            for text, grade in zip(ordered, grades):
                documents.append((doc_id, text))
                judgments[doc_id] = grade
                doc_id += 1
            qrels[query_id] = judgments
    return documents, queries, qrels


def write_synthetic(corpus_path, queries_path, qrels_path, seed=7, queries_per_length=24):
    documents, queries, qrels = make_synthetic(seed, queries_per_length)
    with open(corpus_path, "w", encoding="utf-8") as fh:
        for doc_id, text in documents:
            fh.write(f"{doc_id}\t{text}\n")
    with open(queries_path, "w", encoding="utf-8") as fh:
        for query_id, text in queries:
            fh.write(f"{query_id}\t{text}\n")
    with open(qrels_path, "w", encoding="utf-8") as fh:
        for query_id, judgments in qrels.items():
            for doc_id, grade in judgments.items():
                fh.write(f"{query_id} 0 {doc_id} {grade}\n")
