"""Selective term-proximity ranking: positional indexing, BM25/TP rankers,
query-feature extraction, and a neural router deciding per query whether
proximity scoring is worth its cost."""

__version__ = "0.1.0"
