"""Per-query feature vectors: idf statistics, general-position statistics,
and the conjunctive result-set size."""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import intersect
from .rankers import dedup_terms, idf

FEATURE_NAMES = (
    "n_relevant_docs",
    "idf_mean", "idf_min", "idf_max", "idf_sum",
    "idf_sum_sq", "idf_asc_sq_sum", "idf_desc_sq_sum",
    "pos_mean", "pos_min", "pos_max", "pos_sum",
    "pos_sum_sq", "pos_asc_sq_sum", "pos_desc_sq_sum",
)

# Per-ranker feature subsets; the names chosen by the importance filters.
FEATURE_MASKS = {
    "exp": ("pos_max", "pos_min", "pos_sum", "pos_mean"),
    "mrf": ("idf_sum", "idf_max", "pos_min"),
    "bm25tp": ("idf_min", "idf_sum_sq", "idf_desc_sq_sum", "pos_sum"),
}

UNSET = -1  # label sentinel


@dataclass
class QueryFeatures:
    query_id: str
    query_length: int
    values: dict[str, float]
    label: int = UNSET

    def vector(self, mask=None):
        names = mask if mask is not None else FEATURE_NAMES
        return [self.values[name] for name in names]


def general_pos(index, term):
    """Mean over documents containing the term of the term's mean
    within-document position; 0 for absent terms.

    A per-term corpus statistic, so it is memoized on the index; routing
    would otherwise rescan the term's postings on every query."""
    cache = getattr(index, "_general_pos_cache", None)
    if cache is None:
        cache = {}
        index._general_pos_cache = cache
    if term in cache:
        return cache[term]
    plist = index.postings.get(term)
    if plist is None or not plist.entries:
        value = 0.0
    else:
        total = 0.0
        for posting in plist.entries:
            total += sum(posting.positions) / len(posting.positions)
        value = total / len(plist.entries)
    cache[term] = value
    return value


def _stats(values):
    n = len(values)
    mean = sum(values) / n
    sum_sq = sum(v * v for v in values)
    asc = 0.0
    desc = 0.0
    for a, b in zip(values, values[1:]):
        if a < b:
            asc += (b - a) ** 2
        elif a > b:
            desc += (a - b) ** 2
    return {
        "mean": mean, "min": min(values), "max": max(values),
        "sum": sum(values), "sum_sq": sum_sq,
        "asc_sq_sum": asc, "desc_sq_sum": desc,
    }


def extract_features(index, query_terms, query_id="", names=None):
    """All features by default; pass `names` to compute only the feature
    families a mask needs (routing skips the result-set intersection)."""
    terms = dedup_terms(query_terms)
    if not terms:
        raise ValueError("cannot extract features from an empty query")

    wanted = FEATURE_NAMES if names is None else tuple(names)
    values = {}
    if "n_relevant_docs" in wanted:
        values["n_relevant_docs"] = float(len(intersect(index, terms)))
    groups = []
    if any(n.startswith("idf_") for n in wanted):
        groups.append(("idf", [idf(index, t) for t in terms]))
    if any(n.startswith("pos_") for n in wanted):
        groups.append(("pos", [general_pos(index, t) for t in terms]))
    for prefix, series in groups:
        for key, val in _stats(series).items():
            values[f"{prefix}_{key}"] = val
    return QueryFeatures(query_id=query_id, query_length=len(terms), values=values)


def write_feature_file(features, path):
    """`query_id<TAB>label<TAB>f1,f2,...` with a header naming the features."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("query_id\tlabel\t" + ",".join(FEATURE_NAMES) + "\n")
        for qf in features:
            vec = ",".join(repr(v) for v in qf.vector())
            fh.write(f"{qf.query_id}\t{qf.label}\t{vec}\n")


def read_feature_file(path):
    features = []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().rstrip("\n").split("\t")
        if len(header) != 3:
            raise ValueError(f"{path}: malformed feature file header")
        names = header[2].split(",")
        for line in fh:
            line = line.rstrip("\n")
            if not line:
                continue
            query_id, label, raw = line.split("\t")
            vals = [float(v) for v in raw.split(",")]
            if len(vals) != len(names):
                raise ValueError(f"{path}: wrong number of feature values for {query_id}")
            features.append(QueryFeatures(
                query_id=query_id,
                query_length=0,
                values=dict(zip(names, vals)),
                label=int(label),
            ))
    return features
