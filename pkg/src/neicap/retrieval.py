"""Tokenization and an Okapi BM25 index over whole documents.

The index is immutable after build; scoring and top-k retrieval are pure, so
concurrent readers are safe. Defaults are k1=1.2, b=0.75 with the
plus-one-inside-log IDF variant, which keeps every score non-negative:

    idf(t)  = ln(1 + (N - df + 0.5) / (df + 0.5))
    score   = sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len/avg_len))

No stemming or stopword removal happens at index time; overlap features apply
their own stopword policy so the two stay independently testable.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import RetrievalError
from .manifest import Corpus

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase and split on any non-alphanumeric run; digits are kept."""
    return _TOKEN_RE.findall(text.lower())


@dataclass
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75


@dataclass
class Bm25Index:
    doc_count: int
    avg_doc_len: float
    doc_lengths: dict[str, int]
    postings: dict[str, dict[str, int]]
    params: Bm25Params
    # Row-indexed views for the scoring kernel, built once at construction.
    _doc_ids: list[str] = field(default_factory=list, repr=False)
    _row_of: dict[str, int] = field(default_factory=dict, repr=False)
    _len_norm: np.ndarray | None = field(default=None, repr=False)
    _term_rows: dict[str, tuple[np.ndarray, np.ndarray]] = field(
        default_factory=dict, repr=False
    )

    def idf(self, term: str) -> float:
        df = len(self.postings.get(term, ()))
        if df == 0:
            return 0.0
        n = self.doc_count
        return math.log(1.0 + (n - df + 0.5) / (df + 0.5))


def build_index(
    corpus: Corpus | Mapping[str, str], params: Bm25Params | None = None
) -> Bm25Index:
    """Index a corpus (document sentences joined) or a doc_id -> text mapping."""
    params = params or Bm25Params()
    if isinstance(corpus, Corpus):
        texts = {doc_id: doc.text() for doc_id, doc in corpus.documents.items()}
    else:
        texts = dict(corpus)
    if not texts:
        raise RetrievalError("cannot build an index over an empty corpus")
    doc_ids = sorted(texts)
    doc_lengths: dict[str, int] = {}
    postings: dict[str, dict[str, int]] = {}
    for doc_id in doc_ids:
        tokens = tokenize(texts[doc_id])
        doc_lengths[doc_id] = len(tokens)
        for tok in tokens:
            bucket = postings.setdefault(tok, {})
            bucket[doc_id] = bucket.get(doc_id, 0) + 1
    avg = sum(doc_lengths.values()) / len(doc_ids)
    index = Bm25Index(
        doc_count=len(doc_ids),
        avg_doc_len=avg,
        doc_lengths=doc_lengths,
        postings=postings,
        params=params,
    )
    index._doc_ids = doc_ids
    index._row_of = {d: i for i, d in enumerate(doc_ids)}
    lengths = np.array([doc_lengths[d] for d in doc_ids], dtype=np.float64)
    index._len_norm = params.k1 * (1.0 - params.b + params.b * lengths / avg)
    for term in postings:
        items = sorted(postings[term].items())
        rows = np.array([index._row_of[d] for d, _ in items], dtype=np.int64)
        tfs = np.array([tf for _, tf in items], dtype=np.float64)
        index._term_rows[term] = (rows, tfs)
    return index


def bm25_score(index: Bm25Index, query: Sequence[str], doc_id: str) -> float:
    """Score one document for a token-list query; unknown doc_id is an error."""
    if doc_id not in index.doc_lengths:
        raise RetrievalError(f"unknown doc_id {doc_id!r}")
    k1, b = index.params.k1, index.params.b
    length = index.doc_lengths[doc_id]
    norm = k1 * (1.0 - b + b * length / index.avg_doc_len)
    score = 0.0
    for term in query:
        bucket = index.postings.get(term)
        if not bucket:
            continue
        tf = bucket.get(doc_id, 0)
        if tf == 0:
            continue
        score += index.idf(term) * tf * (k1 + 1.0) / (tf + norm)
    return score


def score_all(index: Bm25Index, query: Sequence[str]) -> np.ndarray:
    """Scores for every document, in sorted doc_id order (kernel-accelerated)."""
    scores = np.zeros(index.doc_count)
    k1 = index.params.k1
    for term in query:
        entry = index._term_rows.get(term)
        if entry is None:
            continue
        rows, tfs = entry
        _kernels.bm25_accumulate(
            scores, rows, tfs, index._len_norm, index.idf(term), k1
        )
    return scores


def retrieve_top_k(
    index: Bm25Index,
    query: Sequence[str],
    k: int,
    exclude: Iterable[str] = (),
) -> list[tuple[str, float]]:
    """Top-k (doc_id, score) in descending score, ties broken by ascending doc_id."""
    if k < 1:
        raise RetrievalError("k must be >= 1")
    excluded = set(exclude)
    scores = score_all(index, query)
    ranked = [
        (doc_id, float(scores[row]))
        for row, doc_id in enumerate(index._doc_ids)
        if doc_id not in excluded
    ]
    ranked.sort(key=lambda item: (-item[1], item[0]))
    return ranked[:k]


# ---------------------------------------------------------------------------
# text dump/load, used for test fixtures
# ---------------------------------------------------------------------------


def dump_index(index: Bm25Index, path) -> None:
    """Write the index as documented text: a header, doc lengths, then tf triples."""
    lines = [f"#bm25\tk1={index.params.k1!r}\tb={index.params.b!r}"]
    for doc_id in sorted(index.doc_lengths):
        lines.append(f"#doc\t{doc_id}\t{index.doc_lengths[doc_id]}")
    for term in sorted(index.postings):
        for doc_id in sorted(index.postings[term]):
            lines.append(f"{term}\t{doc_id}\t{index.postings[term][doc_id]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_index(path) -> Bm25Index:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("#bm25"):
        raise RetrievalError("not an index dump (missing #bm25 header)")
    _, k1_part, b_part = lines[0].split("\t")
    params = Bm25Params(k1=float(k1_part[3:]), b=float(b_part[2:]))
    doc_lengths: dict[str, int] = {}
    postings: dict[str, dict[str, int]] = {}
    for line in lines[1:]:
        if line.startswith("#doc\t"):
            _, doc_id, length = line.split("\t")
            doc_lengths[doc_id] = int(length)
        elif line.strip():
            term, doc_id, tf = line.split("\t")
            postings.setdefault(term, {})[doc_id] = int(tf)
    if not doc_lengths:
        raise RetrievalError("index dump has no documents")
    avg = sum(doc_lengths.values()) / len(doc_lengths)
    index = Bm25Index(
        doc_count=len(doc_lengths),
        avg_doc_len=avg,
        doc_lengths=doc_lengths,
        postings=postings,
        params=params,
    )
    doc_ids = sorted(doc_lengths)
    index._doc_ids = doc_ids
    index._row_of = {d: i for i, d in enumerate(doc_ids)}
    lengths = np.array([doc_lengths[d] for d in doc_ids], dtype=np.float64)
    index._len_norm = params.k1 * (1.0 - params.b + params.b * lengths / avg)
    for term in postings:
        items = sorted(postings[term].items())
        rows = np.array([index._row_of[d] for d, _ in items], dtype=np.int64)
        tfs = np.array([tf for _, tf in items], dtype=np.float64)
        index._term_rows[term] = (rows, tfs)
    return index
