"""TREC-style effectiveness metrics, re-ranking upper bound and Wilcoxon tests."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np
from scipy.stats import norm, rankdata

from .corpus import CorpusFormatError

logger = logging.getLogger(__name__)

EXACT_MAX_N = 25
MIN_WILCOXON_N = 5


class Qrels:
    """Relevance judgments keyed by ``(qid, docname)``; grade >= 1 is relevant."""

    def __init__(self, judgments: Mapping[tuple[str, str], int], threshold: int = 1):
        self.judgments = dict(judgments)
        self.threshold = threshold
        self._relevant: dict[str, set[str]] = {}
        for (qid, name), grade in self.judgments.items():
            if grade < 0:
                raise ValueError(f"negative grade for {(qid, name)}")
            bucket = self._relevant.setdefault(qid, set())
            if grade >= threshold:
                bucket.add(name)

    def __len__(self) -> int:
        return len(self.judgments)

    @property
    def qids(self) -> list[str]:
        return sorted(self._relevant)

    def relevant(self, qid: str) -> set[str]:
        return self._relevant.get(qid, set())

    def n_relevant(self, qid: str) -> int:
        return len(self.relevant(qid))

    def is_relevant(self, qid: str, name: str) -> bool:
        return name in self.relevant(qid)


def load_qrels(path) -> Qrels:
    judgments = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            parts = line.split()
            if len(parts) != 4:
                raise CorpusFormatError(f"{path}:{lineno}: expected 'qid iter docname grade'")
            qid, _, name, grade = parts
            try:
                g = int(grade)
            except ValueError:
                raise CorpusFormatError(f"{path}:{lineno}: grade {grade!r} is not an integer") from None
            if g < 0:
                raise CorpusFormatError(f"{path}:{lineno}: negative grade")
            if (qid, name) in judgments:
                raise CorpusFormatError(f"{path}:{lineno}: duplicate judgment for {qid} {name}")
            judgments[(qid, name)] = g
    return Qrels(judgments)


def _flags(ranked, qrels: Qrels) -> list[bool]:
    rel = qrels.relevant(ranked.qid)
    return [name in rel for name in ranked.names]


def prec_at_k(ranked, qrels: Qrels, k: int) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    return sum(_flags(ranked, qrels)[:k]) / k


def mrr(ranked, qrels: Qrels) -> float:
    """Reciprocal rank of the first relevant document (0 when none)."""
    for rank, hit in enumerate(_flags(ranked, qrels), 1):
        if hit:
            return 1.0 / rank
    return 0.0


def avg_prec(ranked, qrels: Qrels, depth: int = 1000) -> float:
    """Non-interpolated average precision over the top ``depth`` ranks.

    Relevant documents never retrieved contribute zero. Returns NaN when the
    query has no relevant documents.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    n_rel = qrels.n_relevant(ranked.qid)
    if n_rel == 0:
        logger.warning("query %s has no relevant documents; average precision undefined", ranked.qid)
        return math.nan
    hits = 0
    total = 0.0
    for rank, hit in enumerate(_flags(ranked, qrels)[:depth], 1):
        if hit:
            hits += 1
            total += hits / rank
    return total / n_rel


METRICS: dict[str, Callable] = {
    "prec@5": lambda r, q: prec_at_k(r, q, 5),
    "prec@10": lambda r, q: prec_at_k(r, q, 10),
    "mrr": mrr,
    "map": lambda r, q: avg_prec(r, q, 1000),
}
REPORT_METRICS = ("prec@5", "prec@10", "mrr")


def evaluate(ranked, qrels: Qrels, metric: str) -> float:
    try:
        fn = METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}") from None
    return fn(ranked, qrels)


def upper_bound_order(ranked, qrels: Qrels) -> list[tuple[int, str]]:
    rel = qrels.relevant(ranked.qid)
    pairs = list(zip(ranked.doc_ids, ranked.names))
    return sorted(pairs, key=lambda p: (p[1] not in rel, p[0]))


def rerank_upper_bound(ranked, qrels: Qrels, metric: str) -> float:
    """Metric value when every relevant document in the list is moved to the top."""
    from .retrieval import RankedList

    order = upper_bound_order(ranked, qrels)
    ideal = RankedList.from_pairs(ranked.qid, order)
    return evaluate(ideal, qrels, metric)


@dataclass
class MetricReport:
    metric: str
    per_query: dict[str, float]
    significance: dict[str, bool] = field(default_factory=dict)

    @property
    def mean(self) -> float:
        if not self.per_query:
            return math.nan
        return float(np.mean(list(self.per_query.values())))


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    significant: bool
    statistic: float
    n: int
    exact: bool
    indeterminate: bool


def _exact_two_sided(doubled_ranks: np.ndarray, w_doubled: int) -> float:
    total = int(doubled_ranks.sum())
    dist = np.zeros(total + 1, dtype=np.int64)
    dist[0] = 1
    for r in doubled_ranks:
        r = int(r)
        shifted = np.zeros_like(dist)
        shifted[r:] = dist[: total + 1 - r]
        dist = dist + shifted
    n_patterns = float(2 ** len(doubled_ranks))
    lower = dist[: w_doubled + 1].sum() / n_patterns
    upper = dist[w_doubled:].sum() / n_patterns
    return min(1.0, 2.0 * min(lower, upper))


def wilcoxon_two_sided(
    x: Sequence[float], y: Sequence[float], alpha: float = 0.05
) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired samples.

    Zero differences are dropped and tied magnitudes share their average
    rank. Up to 25 nonzero differences the null distribution is enumerated
    exactly; beyond that a tie- and continuity-corrected normal approximation
    is used. With fewer than 5 nonzero differences the result is flagged
    indeterminate and never significant.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError("paired samples must have equal length")
    # metric values are short fractions; rounding makes equal differences tie exactly
    d = np.round(x - y, 12)
    d = d[d != 0]
    n = len(d)
    if n == 0:
        return WilcoxonResult(1.0, False, 0.0, 0, True, True)
    ranks = rankdata(np.abs(d))
    w_plus = float(ranks[d > 0].sum())
    if n <= EXACT_MAX_N:
        doubled = np.rint(2 * ranks).astype(np.int64)
        p = _exact_two_sided(doubled, int(round(2 * w_plus)))
        exact = True
    else:
        _, tie_counts = np.unique(ranks, return_counts=True)
        var = n * (n + 1) * (2 * n + 1) / 24.0 - (tie_counts**3 - tie_counts).sum() / 48.0
        diff = w_plus - n * (n + 1) / 4.0
        diff = max(abs(diff) - 0.5, 0.0)
        p = min(1.0, 2.0 * norm.sf(diff / math.sqrt(var))) if var > 0 else 1.0
        exact = False
    indeterminate = n < MIN_WILCOXON_N
    return WilcoxonResult(p, (not indeterminate) and p < alpha, w_plus, n, exact, indeterminate)


def paired_values(a: Mapping[str, float], b: Mapping[str, float], qids: Iterable[str]):
    qids = list(qids)
    return [a[q] for q in qids], [b[q] for q in qids]
