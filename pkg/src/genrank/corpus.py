"""Corpus ingestion: tokenization, Porter stemming and collection statistics."""

from __future__ import annotations

import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
from nltk.stem.porter import PorterStemmer
from scipy import sparse

logger = logging.getLogger(__name__)

_SPLIT = re.compile(r"[^0-9a-z]+")
_STEMMER = PorterStemmer(mode=PorterStemmer.ORIGINAL_ALGORITHM)


class CorpusFormatError(ValueError):
    """Raised when a corpus, query or qrels file cannot be parsed."""


@lru_cache(maxsize=200_000)
def stem(word: str) -> str:
    # words of one or two letters are left alone, as in the reference implementation
    if len(word) <= 2:
        return word
    return _STEMMER.stem(word, to_lowercase=False)


def tokenize(raw_text: str) -> list[str]:
    """Lowercase, split on non-alphanumerics and Porter-stem each piece.

    No stopwords are removed.
    """
    return [stem(piece) for piece in _SPLIT.split(raw_text.lower()) if piece]


def count(term: str, tokens: Sequence[str]) -> int:
    return sum(1 for t in tokens if t == term)


@dataclass(frozen=True)
class Document:
    id: int
    external_name: str
    tokens: tuple[str, ...]
    counts: Counter = field(compare=False, repr=False, default=None)

    def __post_init__(self):
        if self.counts is None:
            object.__setattr__(self, "counts", Counter(self.tokens))

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def n_types(self) -> int:
        return len(self.counts)


@dataclass(frozen=True)
class Query:
    qid: str
    tokens: tuple[str, ...]


class Corpus:
    """Immutable id-indexed document collection with collection-level counts.

    Documents are numbered ``0..n-1`` in the order given; that order is the
    tie-breaking key everywhere downstream.
    """

    def __init__(self, documents: Iterable[Document]):
        self.documents: tuple[Document, ...] = tuple(documents)
        for i, doc in enumerate(self.documents):
            if doc.id != i:
                raise ValueError(f"document ids must be 0..n-1, got {doc.id} at {i}")
        self._by_name = {}
        for doc in self.documents:
            if doc.external_name in self._by_name:
                raise CorpusFormatError(f"duplicate document name {doc.external_name!r}")
            self._by_name[doc.external_name] = doc
        cc: Counter = Counter()
        df: Counter = Counter()
        for doc in self.documents:
            cc.update(doc.counts)
            df.update(doc.counts.keys())
        self.collection_counts: dict[str, int] = dict(cc)
        self.doc_freq: dict[str, int] = dict(df)
        self.total_tokens = sum(len(d) for d in self.documents)
        self.vocabulary = frozenset(self.collection_counts)

    @classmethod
    def from_texts(cls, items: Iterable[tuple[str, str]]) -> "Corpus":
        """Build from ``(name, raw_text)`` pairs, dropping empty documents."""
        docs = []
        for name, text in items:
            tokens = tokenize(text)
            if not tokens:
                logger.warning("document %r is empty after tokenization; skipped", name)
                continue
            docs.append(Document(len(docs), name, tuple(tokens)))
        return cls(docs)

    def __len__(self) -> int:
        return len(self.documents)

    def __getitem__(self, doc_id: int) -> Document:
        return self.documents[doc_id]

    def by_name(self, name: str) -> Document:
        return self._by_name[name]

    @cached_property
    def term_index(self) -> dict[str, int]:
        return {t: i for i, t in enumerate(sorted(self.vocabulary))}

    @cached_property
    def collection_probs(self) -> np.ndarray:
        """Corpus MLE indexed by ``term_index``."""
        probs = np.zeros(len(self.term_index))
        for t, i in self.term_index.items():
            probs[i] = self.collection_counts[t]
        return probs / self.total_tokens

    @cached_property
    def term_matrix(self) -> sparse.csr_matrix:
        """Document-by-term count matrix (rows are doc ids)."""
        index = self.term_index
        rows, cols, vals = [], [], []
        for doc in self.documents:
            for t, c in doc.counts.items():
                rows.append(doc.id)
                cols.append(index[t])
                vals.append(c)
        return sparse.csr_matrix(
            (np.asarray(vals, dtype=float), (rows, cols)),
            shape=(len(self.documents), len(index)),
        )

    @cached_property
    def doc_lengths(self) -> np.ndarray:
        return np.array([len(d) for d in self.documents], dtype=float)

    def collection_prob(self, term: str) -> float:
        return self.collection_counts.get(term, 0) / self.total_tokens


def _read_jsonl(path: Path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusFormatError(f"{path}:{lineno}: invalid JSON ({exc.msg})") from None
            if (
                not isinstance(rec, dict)
                or not isinstance(rec.get("name"), str)
                or not isinstance(rec.get("text"), str)
            ):
                raise CorpusFormatError(
                    f"{path}:{lineno}: expected an object with string 'name' and 'text'"
                )
            yield rec["name"], rec["text"]


_DOC = re.compile(r"<doc>(.*?)</doc>", re.I | re.S)
_DOCNO = re.compile(r"<docno>(.*?)</docno>", re.I | re.S)
_TEXT = re.compile(r"<text>(.*?)</text>", re.I | re.S)
_OPEN_DOC = re.compile(r"<doc>", re.I)


def _read_trec(path: Path):
    raw = Path(path).read_text(encoding="utf-8")
    n_open = len(_OPEN_DOC.findall(raw))
    blocks = list(_DOC.finditer(raw))
    if n_open != len(blocks):
        raise CorpusFormatError(f"{path}: unbalanced <DOC> tags")
    for m in blocks:
        body = m.group(1)
        docno = _DOCNO.findall(body)
        if len(docno) != 1 or not docno[0].strip():
            raise CorpusFormatError(
                f"{path}: offset {m.start()}: DOC block needs exactly one non-empty DOCNO"
            )
        text = " ".join(_TEXT.findall(body))
        yield docno[0].strip(), text


def load_corpus(path, fmt: str = "jsonl") -> Corpus:
    """Load a corpus in ``jsonl`` or ``trec-sgml`` format."""
    path = Path(path)
    if fmt == "jsonl":
        records = _read_jsonl(path)
    elif fmt == "trec-sgml":
        records = _read_trec(path)
    else:
        raise ValueError(f"unknown corpus format {fmt!r}")
    return Corpus.from_texts(records)


def load_queries(path) -> list[Query]:
    """Read ``qid<TAB>text`` lines; queries that tokenize to nothing are rejected."""
    queries = []
    seen = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            qid, sep, text = line.partition("\t")
            if not sep or not qid:
                raise CorpusFormatError(f"{path}:{lineno}: expected 'qid<TAB>text'")
            if qid in seen:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate qid {qid!r}")
            seen.add(qid)
            tokens = tokenize(text)
            if not tokens:
                raise CorpusFormatError(f"{path}:{lineno}: query {qid!r} is empty")
            queries.append(Query(qid, tuple(tokens)))
    return queries
