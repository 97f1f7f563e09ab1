"""Tokenization and the positional inverted index.

Positions are 1-based token offsets. Stopwords are kept: proximity
distances depend on raw token gaps.
"""

from __future__ import annotations

import io
import re
import struct
from dataclasses import dataclass, field

from .stemming import PorterStemmer

_TOKEN_SPLIT = re.compile(r"[^0-9a-z]+")
_stemmer = PorterStemmer()

MAGIC = b"PXIX"
FORMAT_VERSION = 1


class IndexFormatError(Exception):
    """Raised when an index file is corrupt or has the wrong version."""

    def __init__(self, message, offset):
        super().__init__(f"{message} (at offset {offset})")
        self.offset = offset


def normalize(raw_text, use_stemming=True):
    """Lowercase, split on non-alphanumerics, optionally Porter-stem."""
    tokens = [t for t in _TOKEN_SPLIT.split(raw_text.lower()) if t]
    if use_stemming:
        tokens = [_stemmer.stem(t) for t in tokens]
    return tokens


@dataclass
class Posting:
    doc_id: int
    positions: list[int]  # sorted, strictly increasing, 1-based

    @property
    def frequency(self):
        return len(self.positions)


@dataclass
class PostingList:
    term: str
    entries: list[Posting] = field(default_factory=list)

    @property
    def document_frequency(self):
        return len(self.entries)

    def doc_ids(self):
        return [p.doc_id for p in self.entries]

    def get(self, doc_id):
        """Posting for doc_id, or None. Entries are sorted by doc_id."""
        lo, hi = 0, len(self.entries)
        while lo < hi:
            mid = (lo + hi) // 2
            if self.entries[mid].doc_id < doc_id:
                lo = mid + 1
            else:
                hi = mid
        if lo < len(self.entries) and self.entries[lo].doc_id == doc_id:
            return self.entries[lo]
        return None


@dataclass
class PositionalIndex:
    postings: dict[str, PostingList] = field(default_factory=dict)
    doc_lengths: dict[int, int] = field(default_factory=dict)

    @property
    def doc_count(self):
        return len(self.doc_lengths)

    @property
    def avg_doc_length(self):
        if not self.doc_lengths:
            return 0.0
        return sum(self.doc_lengths.values()) / len(self.doc_lengths)

    @property
    def collection_length(self):
        return sum(self.doc_lengths.values())

    def collection_frequency(self, term):
        plist = self.postings.get(term)
        if plist is None:
            return 0
        return sum(p.frequency for p in plist.entries)


def build_index(documents, use_stemming=True):
    """Build a PositionalIndex from (doc_id, raw_text) pairs.

    Rejects duplicate doc_ids. Deterministic: postings keep documents in
    ascending doc_id order regardless of input order.
    """
    doc_lengths = {}
    tokenized = []
    for doc_id, raw_text in documents:
        if doc_id in doc_lengths:
            raise ValueError(f"duplicate doc_id {doc_id}")
        tokens = normalize(raw_text, use_stemming)
        doc_lengths[doc_id] = len(tokens)
        tokenized.append((doc_id, tokens))

    postings = {}
    for doc_id, tokens in sorted(tokenized):
        per_term = {}
        for pos, term in enumerate(tokens, start=1):
            per_term.setdefault(term, []).append(pos)
        for term, positions in per_term.items():
            plist = postings.get(term)
            if plist is None:
                plist = postings[term] = PostingList(term)
            plist.entries.append(Posting(doc_id, positions))

    return PositionalIndex(postings=postings, doc_lengths=doc_lengths)


def intersect(index, terms):
    """Sorted doc_ids containing every term (conjunctive semantics).

    Any term missing from the index empties the result.
    """
    lists = []
    for term in set(terms):
        plist = index.postings.get(term)
        if plist is None:
            return []
        lists.append(plist.doc_ids())
    if not lists:
        return []
    lists.sort(key=len)
    result = lists[0]
    for other in lists[1:]:
        result = _intersect_sorted(result, other)
        if not result:
            break
    return result


def _intersect_sorted(a, b):
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            out.append(a[i])
            i += 1
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    return out


# ---------------------------------------------------------------------------
# Binary persistence: magic, version, then varint-encoded sections with
# delta-coded doc_ids and positions.
# ---------------------------------------------------------------------------


def _write_varint(buf, value):
    if value < 0:
        raise ValueError("varints are unsigned")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            buf.write(bytes([byte | 0x80]))
        else:
            buf.write(bytes([byte]))
            return


def _read_varint(stream):
    shift = 0
    result = 0
    while True:
        raw = stream.read(1)
        if not raw:
            raise IndexFormatError("unexpected end of file", stream.tell())
        byte = raw[0]
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result
        shift += 7
        if shift > 63:
            raise IndexFormatError("varint too long", stream.tell())


def save_index(index, path):
    buf = io.BytesIO()
    buf.write(MAGIC)
    buf.write(struct.pack("<H", FORMAT_VERSION))

    _write_varint(buf, index.doc_count)
    prev_id = 0
    for doc_id in sorted(index.doc_lengths):
        _write_varint(buf, doc_id - prev_id)
        _write_varint(buf, index.doc_lengths[doc_id])
        prev_id = doc_id

    _write_varint(buf, len(index.postings))
    for term in sorted(index.postings):
        plist = index.postings[term]
        raw = term.encode("utf-8")
        _write_varint(buf, len(raw))
        buf.write(raw)
        _write_varint(buf, len(plist.entries))
        prev_id = 0
        for posting in plist.entries:
            _write_varint(buf, posting.doc_id - prev_id)
            prev_id = posting.doc_id
            _write_varint(buf, posting.frequency)
            prev_pos = 0
            for pos in posting.positions:
                _write_varint(buf, pos - prev_pos)
                prev_pos = pos

    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_index(path):
    with open(path, "rb") as fh:
        stream = io.BytesIO(fh.read())

    magic = stream.read(4)
    if magic != MAGIC:
        raise IndexFormatError("bad magic bytes", 0)
    raw = stream.read(2)
    if len(raw) != 2:
        raise IndexFormatError("unexpected end of file", stream.tell())
    (version,) = struct.unpack("<H", raw)
    if version != FORMAT_VERSION:
        raise IndexFormatError(f"unsupported format version {version}", 4)

    doc_count = _read_varint(stream)
    doc_lengths = {}
    doc_id = 0
    for _ in range(doc_count):
        doc_id += _read_varint(stream)
        doc_lengths[doc_id] = _read_varint(stream)

    num_terms = _read_varint(stream)
    postings = {}
    for _ in range(num_terms):
        term_len = _read_varint(stream)
        raw = stream.read(term_len)
        if len(raw) != term_len:
            raise IndexFormatError("unexpected end of file", stream.tell())
        term = raw.decode("utf-8")
        num_entries = _read_varint(stream)
        entries = []
        doc_id = 0
        for _ in range(num_entries):
            doc_id += _read_varint(stream)
            if doc_id not in doc_lengths:
                raise IndexFormatError(
                    f"posting references unknown doc_id {doc_id}", stream.tell()
                )
            freq = _read_varint(stream)
            positions = []
            pos = 0
            for _ in range(freq):
                pos += _read_varint(stream)
                positions.append(pos)
            entries.append(Posting(doc_id, positions))
        postings[term] = PostingList(term, entries)

    trailing = stream.read(1)
    if trailing:
        raise IndexFormatError("trailing bytes after index data", stream.tell() - 1)

    return PositionalIndex(postings=postings, doc_lengths=doc_lengths)


def read_corpus_file(path):
    """Read `doc_id<TAB>text` lines; blank lines are skipped."""
    documents = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            try:
                doc_id, text = line.split("\t", 1)
                documents.append((int(doc_id), text))
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: expected 'doc_id<TAB>text'") from exc
    return documents
