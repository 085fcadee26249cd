"""Final orderings of the initial list from centrality, priors and query likelihood."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .corpus import Document
from .lm import entropy, mle
from .retrieval import Entry, RankedList

PRIOR_KINDS = ("uniform", "tokens", "log-tokens", "types", "log-types", "entropy")
GRAPH_ALGORITHMS = ("U-In", "W-In", "R-U-In", "R-W-In")
HITS_GRAPHS = ("U", "W", "R-U", "R-W")


@dataclass(frozen=True)
class Algorithm:
    """Parsed algorithm name.

    ``family`` is ``centrality``, ``hits``, ``prior`` or ``initial``;
    ``graph`` is ``U`` or ``W`` for graph methods.
    """

    name: str
    family: str
    with_lm: bool
    graph: str | None = None
    recursive: bool = False
    role: str | None = None
    prior: str | None = None

    @property
    def needs_alpha(self) -> bool:
        return self.family in ("centrality", "hits")

    @property
    def needs_lambda(self) -> bool:
        return self.recursive


def _all_names() -> list[str]:
    names = ["initial"]
    for base in GRAPH_ALGORITHMS:
        names += [base, base + "+LM"]
    for role in ("auth", "hub"):
        for g in HITS_GRAPHS:
            base = f"hits-{role}-{g}"
            names += [base, base + "+LM"]
    names += [f"{p}+LM" for p in PRIOR_KINDS]
    return names


ALGORITHM_NAMES = tuple(_all_names())
DEFAULT_ALGORITHMS = tuple(n for n in ALGORITHM_NAMES if n.split("+")[0] in GRAPH_ALGORITHMS)


def parse_algorithm(name: str) -> Algorithm:
    if name not in ALGORITHM_NAMES:
        raise ValueError(f"unknown algorithm {name!r}")
    if name == "initial":
        return Algorithm(name, "initial", True)
    base, _, lm = name.partition("+")
    with_lm = lm == "LM"
    if base in GRAPH_ALGORITHMS:
        recursive = base.startswith("R-")
        return Algorithm(name, "centrality", with_lm, base.split("-")[-2], recursive)
    if base.startswith("hits-"):
        _, role, graph = base.split("-", 2)
        recursive = graph.startswith("R-")
        return Algorithm(name, "hits", with_lm, graph[-1], recursive, role)
    return Algorithm(name, "prior", True, prior=base)


@dataclass(frozen=True)
class RerankConfig:
    method: str
    alpha: int | None = None
    lam: float | None = None
    mu: float | None = None
    link_mode: str = "lm"

    def __post_init__(self):
        algo = parse_algorithm(self.method)
        if algo.needs_alpha and self.alpha is None:
            raise ValueError(f"{self.method} needs alpha")
        if algo.needs_lambda != (self.lam is not None):
            raise ValueError(f"lambda is required exactly for recursive methods ({self.method})")

    @property
    def algorithm(self) -> Algorithm:
        return parse_algorithm(self.method)


def _values(scores) -> Mapping[int, float]:
    return scores.scores if hasattr(scores, "scores") and not isinstance(scores, Mapping) else scores


def _ordered(d_init_list: RankedList, key_scores: Mapping[int, float]) -> RankedList:
    entries = sorted(
        d_init_list.entries, key=lambda e: (-key_scores[e.doc_id], -e.score, e.doc_id)
    )
    return RankedList(
        d_init_list.qid,
        tuple(Entry(e.doc_id, e.name, key_scores[e.doc_id]) for e in entries),
        d_init_list.cutoff,
    )


def _check_cover(d_init_list: RankedList, values: Mapping[int, float]) -> None:
    missing = [i for i in d_init_list.doc_ids if i not in values]
    if missing:
        raise ValueError(f"no score for documents {missing[:5]}")


def rerank_by_centrality(d_init_list: RankedList, scores) -> RankedList:
    """Order by descending centrality; ties by initial score, then doc id."""
    values = _values(scores)
    _check_cover(d_init_list, values)
    return _ordered(d_init_list, values)


def rerank_combined(
    d_init_list: RankedList,
    scores,
    log_query_likelihoods: Mapping[int, float] | None = None,
) -> RankedList:
    """Order by ``centrality * p_d(q)``, evaluated as a sum of logs.

    Query log-likelihoods default to the initial list's own scores.
    """
    values = _values(scores)
    _check_cover(d_init_list, values)
    loglik = log_query_likelihoods if log_query_likelihoods is not None else d_init_list.score_of()
    _check_cover(d_init_list, loglik)
    combined = {}
    for i in d_init_list.doc_ids:
        c = values[i]
        if c < 0:
            raise ValueError("centrality scores must be nonnegative")
        combined[i] = (math.log(c) if c > 0 else -math.inf) + loglik[i]
    return _ordered(d_init_list, combined)


def document_prior(d: Document, kind: str) -> float:
    if kind == "uniform":
        return 1.0
    if kind == "tokens":
        return float(len(d))
    if kind == "log-tokens":
        return math.log1p(len(d))
    if kind == "types":
        return float(d.n_types)
    if kind == "log-types":
        return math.log1p(d.n_types)
    if kind == "entropy":
        return entropy(mle(d))
    raise ValueError(f"unknown prior {kind!r}")
