"""Unigram language models and KL-based generation probabilities.

Everything is computed in natural-log space; ``gen_prob`` exponentiates only
at the boundary. Terms absent from the corpus vocabulary are dropped from a
sequence before its MLE is taken, since the smoothed document models give
them zero mass.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import sparse

from .corpus import Corpus, Document


class EmptyTextError(ValueError):
    pass


@dataclass(frozen=True)
class TermDistribution:
    probs: Mapping[str, float]

    @property
    def support_size(self) -> int:
        return sum(1 for p in self.probs.values() if p > 0)

    def __getitem__(self, term: str) -> float:
        return self.probs.get(term, 0.0)


@dataclass(frozen=True)
class SmoothedModel:
    """Dirichlet-smoothed model of a text ``x`` against a corpus."""

    source_counts: Mapping[str, int]
    mu: float
    corpus: Corpus
    length: int

    def prob(self, term: str) -> float:
        return dirichlet_prob(self, term)


def _tokens(text_unit) -> Sequence[str]:
    return text_unit.tokens if isinstance(text_unit, Document) else text_unit


def mle(text_unit) -> TermDistribution:
    tokens = _tokens(text_unit)
    if not tokens:
        raise EmptyTextError("MLE of an empty text is undefined")
    n = len(tokens)
    return TermDistribution({t: c / n for t, c in Counter(tokens).items()})


def dirichlet_model(text_unit, corpus: Corpus, mu: float) -> SmoothedModel:
    if mu < 0:
        raise ValueError("mu must be nonnegative")
    tokens = _tokens(text_unit)
    counts = text_unit.counts if isinstance(text_unit, Document) else Counter(tokens)
    return SmoothedModel(counts, float(mu), corpus, len(tokens))


def dirichlet_prob(model: SmoothedModel, w: str) -> float:
    denom = model.length + model.mu
    if denom == 0:
        return 0.0
    return (model.source_counts.get(w, 0) + model.mu * model.corpus.collection_prob(w)) / denom


def entropy(dist: TermDistribution) -> float:
    return -sum(p * math.log(p) for p in dist.probs.values() if p > 0)


def kl_divergence(p: TermDistribution, q_model: SmoothedModel) -> float:
    total = 0.0
    for w, pw in p.probs.items():
        if pw <= 0:
            continue
        qw = dirichlet_prob(q_model, w)
        if qw <= 0:
            raise ValueError(f"model assigns zero probability to {w!r}")
        total += pw * math.log(pw / qw)
    return total


def in_vocabulary(tokens: Sequence[str], corpus: Corpus) -> list[str]:
    vocab = corpus.vocabulary
    return [t for t in tokens if t in vocab]


def log_gen_prob(d: Document, s, corpus: Corpus, mu: float) -> float:
    """``-KL(mle(s) || p_d^[mu])`` for a document ``d`` and token sequence ``s``."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    kept = in_vocabulary(_tokens(s), corpus)
    if not kept:
        raise EmptyTextError("sequence is empty after removing out-of-vocabulary terms")
    return -kl_divergence(mle(kept), dirichlet_model(d, corpus, mu))


def gen_prob(d: Document, s, corpus: Corpus, mu: float) -> float:
    return math.exp(log_gen_prob(d, s, corpus, mu))


def gen_prob_factors(d: Document, s, corpus: Corpus, mu: float) -> tuple[float, float]:
    """Return ``(geometric-mean likelihood, exp(entropy))`` whose product is ``gen_prob``."""
    kept = in_vocabulary(_tokens(s), corpus)
    if not kept:
        raise EmptyTextError("sequence is empty after removing out-of-vocabulary terms")
    model = dirichlet_model(d, corpus, mu)
    mean_log = sum(math.log(dirichlet_prob(model, w)) for w in kept) / len(kept)
    return math.exp(mean_log), math.exp(entropy(mle(kept)))


def _count_rows(seqs, index: Mapping[str, int]) -> sparse.csr_matrix:
    rows, cols, vals = [], [], []
    for i, seq in enumerate(seqs):
        counts = seq.counts if isinstance(seq, Document) else Counter(seq)
        for t, c in counts.items():
            j = index.get(t)
            if j is not None:
                rows.append(i)
                cols.append(j)
                vals.append(c)
    return sparse.csr_matrix(
        (np.asarray(vals, dtype=float), (rows, cols)), shape=(len(seqs), len(index))
    )


def log_gen_matrix(
    sequences: Sequence,
    generator_ids: Sequence[int],
    corpus: Corpus,
    mu: float,
) -> np.ndarray:
    """Matrix ``M[i, j] = log gen_prob(doc generator_ids[j], sequences[i])``.

    ``sequences`` may mix documents and plain token lists. Vectorized
    equivalent of calling :func:`log_gen_prob` for every pair.
    """
    if mu <= 0:
        raise ValueError("mu must be positive")
    cidx = corpus.term_index
    seq_terms = sorted({t for s in sequences for t in _tokens(s) if t in cidx})
    local = {t: k for k, t in enumerate(seq_terms)}
    cols = np.array([cidx[t] for t in seq_terms], dtype=int)

    s_counts = _count_rows(sequences, local).toarray()
    lengths = s_counts.sum(axis=1)
    if np.any(lengths == 0):
        raise EmptyTextError("sequence is empty after removing out-of-vocabulary terms")
    p = s_counts / lengths[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        plogp = np.where(p > 0, p * np.log(p), 0.0)
    ent = -plogp.sum(axis=1)

    gen_ids = np.asarray(generator_ids, dtype=int)
    d_counts = corpus.term_matrix[gen_ids][:, cols].toarray()
    bg = mu * corpus.collection_probs[cols]
    log_pd = np.log(d_counts + bg[None, :]) - np.log(corpus.doc_lengths[gen_ids] + mu)[:, None]
    return p @ log_pd.T + ent[:, None]
