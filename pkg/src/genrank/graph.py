"""Generation graphs over the initially retrieved set.

Weights are stored dense with ``weights[o, g]`` the weight of the edge from
offspring ``o`` to generator ``g``. Row ``o`` of a link-score matrix holds
``score(g -> o)``, i.e. how well each candidate generator explains ``o``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .corpus import Corpus, Document
from .lm import gen_prob, log_gen_matrix

logger = logging.getLogger(__name__)

DEFAULT_ALPHA_GRID = (4, 9, 19, 29, 39, 49)
LINK_MODES = ("lm", "cosine")


def alpha_grid(n_nodes: int, grid: Sequence[int] = DEFAULT_ALPHA_GRID) -> list[int]:
    """Grid values valid for a graph on ``n_nodes`` nodes (capped at n-1)."""
    kept = sorted({a for a in grid if 1 <= a < n_nodes})
    if not kept and n_nodes >= 2:
        kept = [n_nodes - 1]
    return kept


@dataclass(frozen=True, eq=False)
class GenerationGraph:
    node_ids: tuple[int, ...]
    weights: np.ndarray
    kind: str
    alpha: int | None = None
    lam: float | None = None
    base_kind: str | None = None

    def __post_init__(self):
        n = len(self.node_ids)
        if self.weights.shape != (n, n):
            raise ValueError(f"weights must be {n}x{n}, got {self.weights.shape}")
        if np.any(self.weights < 0) or not np.all(np.isfinite(self.weights)):
            raise ValueError("edge weights must be finite and nonnegative")
        self.weights.setflags(write=False)

    def __len__(self) -> int:
        return len(self.node_ids)

    def dump_tsv(self, path) -> None:
        """Write positive edges as ``from_doc<TAB>to_doc<TAB>weight``."""
        with open(path, "w", encoding="utf-8") as fh:
            for i, j in zip(*np.nonzero(self.weights)):
                fh.write(f"{self.node_ids[i]}\t{self.node_ids[j]}\t{self.weights[i, j]:.17g}\n")


def _log_tfidf_vectors(docs: Sequence[Document], corpus: Corpus) -> list[dict[str, float]]:
    n = len(corpus)
    vecs = []
    for doc in docs:
        vec = {}
        for w, tf in doc.counts.items():
            idf = math.log(n / corpus.doc_freq[w])
            if idf > 0:
                vec[w] = (1.0 + math.log(tf)) * idf
        vecs.append(vec)
    return vecs


def cosine_score(d1: Document, d2: Document, corpus: Corpus) -> float:
    """Cosine between sublinear-tf (``1 + log tf``) times ``log(N/df)`` vectors."""
    v1, v2 = _log_tfidf_vectors([d1, d2], corpus)
    n1 = math.sqrt(sum(x * x for x in v1.values()))
    n2 = math.sqrt(sum(x * x for x in v2.values()))
    if n1 == 0 or n2 == 0:
        logger.warning("zero-norm tf.idf vector (doc %d or %d); cosine set to 0", d1.id, d2.id)
        return 0.0
    dot = sum(x * v2.get(w, 0.0) for w, x in v1.items())
    return min(1.0, max(0.0, dot / (n1 * n2)))


def cosine_matrix(docs: Sequence[Document], corpus: Corpus) -> np.ndarray:
    vecs = _log_tfidf_vectors(docs, corpus)
    terms = sorted({w for v in vecs for w in v})
    index = {w: k for k, w in enumerate(terms)}
    mat = np.zeros((len(docs), len(terms)))
    for i, v in enumerate(vecs):
        for w, x in v.items():
            mat[i, index[w]] = x
    norms = np.linalg.norm(mat, axis=1)
    if np.any(norms == 0):
        logger.warning("%d documents have zero-norm tf.idf vectors", int((norms == 0).sum()))
    safe = np.where(norms > 0, norms, 1.0)
    unit = mat / safe[:, None]
    return np.clip(unit @ unit.T, 0.0, 1.0)


class LinkScorer:
    """Scores ``g -> o`` links by generation probability or log-tf.idf cosine."""

    def __init__(self, corpus: Corpus, mode: str = "lm", mu: float | None = None):
        if mode not in LINK_MODES:
            raise ValueError(f"unknown link mode {mode!r}")
        if mode == "lm" and (mu is None or mu <= 0):
            raise ValueError("lm link mode needs mu > 0")
        self.corpus = corpus
        self.mode = mode
        self.mu = mu

    def __call__(self, g: Document, o: Document) -> float:
        if self.mode == "lm":
            return gen_prob(g, o, self.corpus, self.mu)
        return cosine_score(g, o, self.corpus)

    def matrix(self, docs: Sequence[Document]) -> np.ndarray:
        """``S[o, g] = score(g -> o)`` for every ordered pair in ``docs``."""
        if self.mode == "lm":
            return np.exp(log_gen_matrix(docs, [d.id for d in docs], self.corpus, self.mu))
        return cosine_matrix(docs, self.corpus)


def _as_scores(docs: Sequence[Document], scorer) -> np.ndarray:
    if hasattr(scorer, "matrix"):
        return scorer.matrix(docs)
    n = len(docs)
    out = np.zeros((n, n))
    for o in range(n):
        for g in range(n):
            if g != o:
                out[o, g] = scorer(docs[g], docs[o])
    return out


def generator_order(scores: np.ndarray, node_ids: Sequence[int]) -> np.ndarray:
    """Per row, the other nodes sorted by descending score then ascending doc id.

    Returns an ``n x (n-1)`` array of column indices.
    """
    n = len(node_ids)
    ids = np.asarray(node_ids)
    order = np.empty((n, n - 1), dtype=int)
    for o in range(n):
        cand = np.delete(np.arange(n), o)
        order[o] = cand[np.lexsort((ids[cand], -scores[o, cand]))]
    return order


def top_generators(
    d: Document,
    d_init: Sequence[Document],
    alpha: int,
    scorer: Callable[[Document, Document], float],
) -> list[Document]:
    """The ``alpha`` documents of ``d_init`` (other than ``d``) that best generate ``d``."""
    others = [g for g in d_init if g.id != d.id]
    if alpha >= len(d_init) or alpha < 1:
        raise ValueError(f"alpha must be in [1, {len(d_init) - 1}], got {alpha}")
    ranked = sorted(others, key=lambda g: (-scorer(g, d), g.id))
    return ranked[:alpha]


def graph_from_scores(
    scores: np.ndarray,
    node_ids: Sequence[int],
    alpha: int,
    kind: str,
    order: np.ndarray | None = None,
    link_mode: str = "lm",
) -> GenerationGraph:
    """Keep each row's top-``alpha`` generators, with unit or score weights."""
    n = len(node_ids)
    if not 1 <= alpha < n:
        raise ValueError(f"alpha must be in [1, {n - 1}], got {alpha}")
    if kind not in ("uniform", "weighted"):
        raise ValueError(f"unknown graph kind {kind!r}")
    if order is None:
        order = generator_order(scores, node_ids)
    rows = np.repeat(np.arange(n), alpha)
    cols = order[:, :alpha].ravel()
    weights = np.zeros((n, n))
    weights[rows, cols] = 1.0 if kind == "uniform" else scores[rows, cols]
    label = kind if link_mode == "lm" else f"cosine-{kind}"
    return GenerationGraph(tuple(int(i) for i in node_ids), weights, label, alpha)


def build_graph(d_init: Sequence[Document], alpha: int, scorer, kind: str) -> GenerationGraph:
    scores = _as_scores(d_init, scorer)
    mode = getattr(scorer, "mode", "lm")
    return graph_from_scores(scores, [d.id for d in d_init], alpha, kind, link_mode=mode)


def smooth(graph: GenerationGraph, lam: float) -> GenerationGraph:
    """Mix row-normalized weights with a uniform teleport: ``(1-lam)/n + lam * w/rowsum``."""
    if not 0.0 <= lam < 1.0:
        raise ValueError("lambda must lie in [0, 1)")
    w = np.asarray(graph.weights)
    sums = w.sum(axis=1)
    if np.any(sums <= 0):
        raise ValueError("cannot smooth a graph with an all-zero row")
    n = len(graph)
    smoothed = (1.0 - lam) / n + lam * (w / sums[:, None])
    return GenerationGraph(
        graph.node_ids, smoothed, "smoothed", graph.alpha, lam, base_kind=graph.kind
    )
