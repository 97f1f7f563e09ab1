"""Feature-importance filters: rank-sum z, z-score separation, chi-squared
over binned values, and classic Relief, combined by Borda rank averaging."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

INFINITY = math.inf


def ranksum_score(values_label0, values_label1):
    """Absolute z of the Wilcoxon rank-sum test (midrank ties, normal
    approximation, no continuity correction)."""
    a = np.asarray(values_label0, dtype=float)
    b = np.asarray(values_label1, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("both groups must be non-empty")
    combined = np.concatenate([a, b])
    order = np.argsort(combined, kind="stable")
    ranks = np.empty(combined.size, dtype=float)
    i = 0
    while i < combined.size:
        j = i
        while j + 1 < combined.size and combined[order[j + 1]] == combined[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # midrank
        i = j + 1
    n0, n1 = a.size, b.size
    n = n0 + n1
    rank_sum0 = ranks[:n0].sum()
    mean = n0 * (n + 1) / 2.0
    # tie-corrected variance
    _, counts = np.unique(combined, return_counts=True)
    tie_term = ((counts ** 3 - counts).sum()) / (n * (n - 1)) if n > 1 else 0.0
    var = n0 * n1 / 12.0 * (n + 1 - tie_term)
    if var == 0:
        return 0.0
    return abs((rank_sum0 - mean) / math.sqrt(var))


def zscore_sep(values_label0, values_label1):
    """|mean1 - mean0| / sqrt(var0/n0 + var1/n1), sample variances."""
    a = np.asarray(values_label0, dtype=float)
    b = np.asarray(values_label1, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("both groups need at least two samples")
    diff = abs(b.mean() - a.mean())
    denom = a.var(ddof=1) / a.size + b.var(ddof=1) / b.size
    if denom == 0:
        return 0.0 if diff == 0 else INFINITY
    return diff / math.sqrt(denom)


def chi2_score(feature_values, labels, num_bins=10):
    """Chi-squared statistic of equal-width-binned values against the binary
    label; bins with zero expected count are merged into their neighbor."""
    x = np.asarray(feature_values, dtype=float)
    y = np.asarray(labels, dtype=int)
    if len(set(y.tolist())) < 2:
        raise ValueError("need both labels present")
    lo, hi = x.min(), x.max()
    if lo == hi:
        return 0.0
    edges = np.linspace(lo, hi, num_bins + 1)
    bins = np.clip(np.digitize(x, edges[1:-1]), 0, num_bins - 1)
    counts = np.zeros((num_bins, 2), dtype=float)
    for bi, yi in zip(bins, y):
        counts[bi, 1 if yi else 0] += 1
    # drop empty rows (zero expected count) by merging into the table
    counts = counts[counts.sum(axis=1) > 0]
    n = counts.sum()
    row = counts.sum(axis=1, keepdims=True)
    col = counts.sum(axis=0, keepdims=True)
    expected = row @ col / n
    return float(((counts - expected) ** 2 / expected).sum())


def relief_score(samples, labels, num_iterations=None, seed=0):
    """Classic Relief weights for binary-labeled samples.

    Features must be pre-scaled to [0, 1]. When num_iterations covers the
    whole sample (or is None) every instance is visited once, making the
    result sampling-free; otherwise instances are drawn with a seeded RNG.
    """
    x = np.asarray(samples, dtype=float)
    y = np.asarray(labels, dtype=int)
    if x.ndim != 2:
        raise ValueError("samples must be a 2-d array")
    n, num_features = x.shape
    if not ((y == 0).any() and (y == 1).any()):
        raise ValueError("both classes must be present")

    if num_iterations is None or num_iterations >= n:
        picks = list(range(n))
    else:
        rng = np.random.default_rng(seed)
        picks = list(rng.integers(0, n, size=num_iterations))

    weights = np.zeros(num_features)
    for i in picks:
        dists = np.sqrt(((x - x[i]) ** 2).sum(axis=1))
        dists[i] = np.inf
        same = np.where(y == y[i])[0]
        other = np.where(y != y[i])[0]
        same = same[same != i]
        if same.size == 0:
            continue
        hit = same[np.argmin(dists[same])]
        miss = other[np.argmin(dists[other])]
        weights += (x[i] - x[miss]) ** 2 - (x[i] - x[hit]) ** 2
    return weights / len(picks)


@dataclass
class FeatureScoreTable:
    feature_names: list[str]
    ranksum_z: dict[str, float]
    zscore: dict[str, float]
    chi2: dict[str, float]
    relief: dict[str, float]


def score_features(features, labels, feature_names, num_bins=10, seed=0):
    """Run all four filters over a samples-by-features matrix."""
    x = np.asarray(features, dtype=float)
    y = np.asarray(labels, dtype=int)
    g0 = x[y == 0]
    g1 = x[y == 1]

    # Relief wants features scaled to [0, 1].
    lo = x.min(axis=0)
    span = x.max(axis=0) - lo
    span[span == 0] = 1.0
    relief = relief_score((x - lo) / span, y, seed=seed)

    return FeatureScoreTable(
        feature_names=list(feature_names),
        ranksum_z={f: ranksum_score(g0[:, i], g1[:, i]) for i, f in enumerate(feature_names)},
        zscore={f: zscore_sep(g0[:, i], g1[:, i]) for i, f in enumerate(feature_names)},
        chi2={f: chi2_score(x[:, i], y, num_bins) for i, f in enumerate(feature_names)},
        relief={f: float(relief[i]) for i, f in enumerate(feature_names)},
    )


def combined_ranking(table):
    """Features ordered by mean rank position across the four filters
    (Borda); ties broken by feature name."""
    names = table.feature_names
    borda = {f: 0.0 for f in names}
    for scores in (table.ranksum_z, table.zscore, table.chi2, table.relief):
        # rank 1 = best (highest score); ties share the mean rank
        ordered = sorted(names, key=lambda f: (-scores[f], f))
        pos = 0
        while pos < len(ordered):
            end = pos
            while end + 1 < len(ordered) and scores[ordered[end + 1]] == scores[ordered[pos]]:
                end += 1
            mean_rank = (pos + end) / 2.0 + 1.0
            for f in ordered[pos : end + 1]:
                borda[f] += mean_rank
            pos = end + 1
    return sorted(names, key=lambda f: (borda[f], f))


def write_score_table(table, path):
    ordering = combined_ranking(table)
    rank_of = {f: i + 1 for i, f in enumerate(ordering)}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("feature\tranksum_z\tzscore_sep\tchi2\trelief_weight\tcombined_rank\n")
        for f in table.feature_names:
            fh.write(
                f"{f}\t{table.ranksum_z[f]!r}\t{table.zscore[f]!r}"
                f"\t{table.chi2[f]!r}\t{table.relief[f]!r}\t{rank_of[f]}\n"
            )
