"""Centrality on generation graphs: influx, recursive influx and HITS."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .graph import GenerationGraph

logger = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10_000
DEFAULT_LAMBDA_GRID = (0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 0.95)


@dataclass(frozen=True, eq=False)
class CentralityScores:
    node_ids: tuple[int, ...]
    values: np.ndarray
    method: str
    converged: bool = True
    iterations: int = 0

    @property
    def scores(self) -> dict[int, float]:
        return {i: float(v) for i, v in zip(self.node_ids, self.values)}

    def __getitem__(self, doc_id: int) -> float:
        return self.scores[doc_id]


def _prefix(graph: GenerationGraph) -> str:
    kind = graph.base_kind if graph.kind == "smoothed" else graph.kind
    return "U" if kind.endswith("uniform") else "W"


def influx(graph: GenerationGraph) -> CentralityScores:
    """Weighted in-degree: column sums of the unsmoothed weight matrix."""
    if graph.kind == "smoothed":
        raise ValueError("influx is defined on unsmoothed graphs")
    values = np.asarray(graph.weights).sum(axis=0)
    return CentralityScores(graph.node_ids, values, f"{_prefix(graph)}-In")


def recursive_influx(
    graph: GenerationGraph, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> CentralityScores:
    """Stationary distribution of the row-stochastic smoothed graph, by power iteration.

    Starts from the uniform vector and stops once an update moves less than
    ``tol`` in L1. The pre-update iterate is returned, so its fixed-point
    residual is exactly the last measured change.
    """
    p = np.asarray(graph.weights)
    if np.any(p <= 0) or not np.allclose(p.sum(axis=1), 1.0, rtol=0, atol=1e-9):
        raise ValueError("recursive influx needs a strictly positive row-stochastic graph")
    n = len(graph)
    pt = p.T.copy()
    x = np.full(n, 1.0 / n)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        nxt = pt @ x
        nxt /= nxt.sum()
        if np.abs(nxt - x).sum() < tol:
            converged = True
            break
        x = nxt
    if not converged:
        logger.warning("power iteration stopped after %d iterations without converging", it)
    return CentralityScores(graph.node_ids, x, f"R-{_prefix(graph)}-In", converged, it)


def hits(
    graph: GenerationGraph, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER
) -> tuple[CentralityScores, CentralityScores]:
    """Kleinberg hub/authority iteration from the uniform vector, L2-normalized.

    Edges point from offspring to generator, so authorities are the strong
    generators. Returns ``(authority, hub)``.
    """
    w = np.asarray(graph.weights)
    if not np.any(w > 0):
        raise ValueError("HITS needs at least one positive edge")
    n = len(graph)
    auth = np.full(n, 1.0 / np.sqrt(n))
    hub = auth.copy()
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        new_auth = w.T @ hub
        new_auth /= np.linalg.norm(new_auth)
        new_hub = w @ new_auth
        new_hub /= np.linalg.norm(new_hub)
        delta = np.linalg.norm(new_auth - auth) + np.linalg.norm(new_hub - hub)
        auth, hub = new_auth, new_hub
        if delta < tol:
            converged = True
            break
    suffix = "" if graph.kind != "smoothed" else "R-"
    tag = f"{suffix}{_prefix(graph)}"
    return (
        CentralityScores(graph.node_ids, auth, f"hits-auth-{tag}", converged, it),
        CentralityScores(graph.node_ids, hub, f"hits-hub-{tag}", converged, it),
    )
