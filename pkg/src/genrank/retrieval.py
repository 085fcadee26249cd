"""Initial query-likelihood retrieval and Dirichlet ``mu`` tuning."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .corpus import Corpus, Query
from .evaluation import Qrels, avg_prec, evaluate
from .lm import in_vocabulary, log_gen_matrix

logger = logging.getLogger(__name__)

DEFAULT_MU_GRID = (250.0, 500.0, 1000.0, 2000.0, 3000.0, 5000.0)
DEFAULT_DINIT = 50


@dataclass(frozen=True)
class Entry:
    doc_id: int
    name: str
    score: float


@dataclass(frozen=True)
class RankedList:
    """Ranked documents for one query; scores are log-domain."""

    qid: str
    entries: tuple[Entry, ...]
    cutoff: int | None = None

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    @property
    def doc_ids(self) -> list[int]:
        return [e.doc_id for e in self.entries]

    @property
    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    @property
    def scores(self) -> list[float]:
        return [e.score for e in self.entries]

    def score_of(self) -> dict[int, float]:
        return {e.doc_id: e.score for e in self.entries}

    def truncate(self, k: int) -> "RankedList":
        return RankedList(self.qid, self.entries[:k], k)

    @classmethod
    def from_pairs(cls, qid: str, pairs: Iterable[tuple[int, str]]) -> "RankedList":
        """Unscored list in the given order (score = -rank)."""
        return cls(qid, tuple(Entry(i, name, -float(r)) for r, (i, name) in enumerate(pairs, 1)))


def rank_order(scores: np.ndarray, doc_ids: np.ndarray) -> np.ndarray:
    """Indices sorting by descending score, then ascending doc id."""
    return np.lexsort((doc_ids, -scores))


def query_scores(query: Query, corpus: Corpus, mu: float) -> np.ndarray | None:
    """``log gen_prob(d, q)`` for every document, or None if the query is all OOV."""
    if not in_vocabulary(query.tokens, corpus):
        return None
    return log_gen_matrix([query.tokens], range(len(corpus)), corpus, mu)[0]


def initial_rank(query: Query, corpus: Corpus, mu: float, k: int) -> RankedList:
    if mu <= 0:
        raise ValueError("mu must be positive")
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = query_scores(query, corpus, mu)
    if scores is None:
        logger.warning("query %s has no in-vocabulary terms; empty ranking", query.qid)
        return RankedList(query.qid, (), k)
    ids = np.arange(len(corpus))
    order = rank_order(scores, ids)[:k]
    docs = corpus.documents
    return RankedList(
        query.qid,
        tuple(Entry(int(i), docs[i].external_name, float(scores[i])) for i in order),
        k,
    )


def _judged(queries: Sequence[Query], qrels: Qrels) -> list[Query]:
    kept = [q for q in queries if qrels.n_relevant(q.qid) > 0]
    if not kept:
        raise ValueError("no query has any relevant judgment")
    if len(kept) < len(queries):
        logger.warning("%d queries without relevant documents excluded", len(queries) - len(kept))
    return kept


def _grid_search(queries, corpus, qrels, grid, depth, score_fn):
    if not grid:
        raise ValueError("mu grid must be nonempty")
    judged = _judged(queries, qrels)
    best_mu, best_mean, best_values = None, -math.inf, None
    for mu in sorted(grid):
        values = {q.qid: score_fn(initial_rank(q, corpus, mu, depth)) for q in judged}
        mean = float(np.mean(list(values.values())))
        if mean > best_mean:
            best_mu, best_mean, best_values = mu, mean, values
    return best_mu, best_values


def tune_mu(
    queries: Sequence[Query],
    corpus: Corpus,
    qrels: Qrels,
    grid: Sequence[float] = DEFAULT_MU_GRID,
    depth: int = 1000,
) -> float:
    """Grid value maximizing mean non-interpolated AP at ``depth``; ties go to the smaller mu."""
    mu, _ = _grid_search(queries, corpus, qrels, grid, depth, lambda r: avg_prec(r, qrels, depth))
    return mu


def optimized_baseline(
    queries: Sequence[Query],
    corpus: Corpus,
    qrels: Qrels,
    metric: str,
    grid: Sequence[float] = DEFAULT_MU_GRID,
    depth: int = 1000,
) -> tuple[float, dict[str, float]]:
    """Full-corpus ranking with mu tuned directly on ``metric``."""
    return _grid_search(queries, corpus, qrels, grid, depth, lambda r: evaluate(r, qrels, metric))


def format_run(ranked: RankedList, tag: str) -> str:
    return "".join(
        f"{ranked.qid} Q0 {e.name} {rank} {e.score:.10g} {tag}\n"
        for rank, e in enumerate(ranked.entries, 1)
    )


def write_run(path, rankings: Iterable[RankedList], tag: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for ranked in rankings:
            fh.write(format_run(ranked, tag))
