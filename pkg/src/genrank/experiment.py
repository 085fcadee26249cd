"""End-to-end experiments: parameter sweeps, reference rows and reports."""

from __future__ import annotations

import logging
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Mapping, Sequence

import numpy as np

from .centrality import (
    DEFAULT_LAMBDA_GRID,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    hits,
    influx,
    recursive_influx,
)
from .corpus import Corpus, CorpusFormatError, Query, load_corpus, load_queries
from .evaluation import (
    REPORT_METRICS,
    MetricReport,
    Qrels,
    evaluate,
    load_qrels,
    rerank_upper_bound,
    wilcoxon_two_sided,
)
from .graph import DEFAULT_ALPHA_GRID, LINK_MODES, LinkScorer, alpha_grid, generator_order, graph_from_scores, smooth
from .rerank import (
    ALGORITHM_NAMES,
    DEFAULT_ALGORITHMS,
    Algorithm,
    document_prior,
    parse_algorithm,
    rerank_by_centrality,
    rerank_combined,
)
from .retrieval import (
    DEFAULT_DINIT,
    DEFAULT_MU_GRID,
    RankedList,
    initial_rank,
    optimized_baseline,
    tune_mu,
    write_run,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

MODES = ("rerank", "full-corpus")
DEFAULT_FULL_CORPUS_CAP = 2000


class ConfigError(ValueError):
    pass


class DataError(RuntimeError):
    pass


class ExperimentError(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    corpus: Path
    queries: Path
    qrels: Path
    format: str = "jsonl"
    dinit: int = DEFAULT_DINIT
    mu_grid: tuple[float, ...] = DEFAULT_MU_GRID
    alpha_grid: tuple[int, ...] = DEFAULT_ALPHA_GRID
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    algorithms: tuple[str, ...] = DEFAULT_ALGORITHMS
    link_mode: str = "lm"
    target_metric: str = "prec@5"
    mode: str = "rerank"
    out: Path = Path("results")
    seed: int = 0
    full_corpus_cap: int = DEFAULT_FULL_CORPUS_CAP
    jobs: int = 1
    tol: float = DEFAULT_TOL
    max_iter: int = DEFAULT_MAX_ITER

    def __post_init__(self):
        for name in ("mu_grid", "alpha_grid", "lambda_grid", "algorithms"):
            value = getattr(self, name)
            if isinstance(value, str):
                value = [v for v in value.split(",") if v]
            object.__setattr__(self, name, tuple(value))
            if not getattr(self, name):
                raise ConfigError(f"{name} must be nonempty")
        for name in ("corpus", "queries", "qrels", "out"):
            object.__setattr__(self, name, Path(getattr(self, name)))
        object.__setattr__(self, "mu_grid", tuple(float(m) for m in self.mu_grid))
        object.__setattr__(self, "alpha_grid", tuple(int(a) for a in self.alpha_grid))
        object.__setattr__(self, "lambda_grid", tuple(float(x) for x in self.lambda_grid))
        if self.dinit < 2:
            raise ConfigError("dinit must be at least 2")
        if any(m <= 0 for m in self.mu_grid):
            raise ConfigError("mu values must be positive")
        if any(a < 1 for a in self.alpha_grid):
            raise ConfigError("alpha values must be positive")
        if any(not 0 <= x < 1 for x in self.lambda_grid):
            raise ConfigError("lambda values must lie in [0, 1)")
        unknown = [a for a in self.algorithms if a not in ALGORITHM_NAMES]
        if unknown:
            raise ConfigError(f"unknown algorithms {unknown}; known: {', '.join(ALGORITHM_NAMES)}")
        if self.format not in ("jsonl", "trec-sgml"):
            raise ConfigError(f"unknown corpus format {self.format!r}")
        if self.link_mode not in LINK_MODES:
            raise ConfigError(f"unknown link mode {self.link_mode!r}")
        if self.target_metric not in REPORT_METRICS:
            raise ConfigError(f"target metric must be one of {REPORT_METRICS}")
        if self.mode not in MODES:
            raise ConfigError(f"mode must be one of {MODES}")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")

    @classmethod
    def from_file(cls, path, overrides: Mapping[str, Any] | None = None) -> "ExperimentConfig":
        """Read a TOML config; relative paths resolve against the file's directory."""
        path = Path(path)
        try:
            with open(path, "rb") as fh:
                raw = tomllib.load(fh)
        except (OSError, tomllib.TOMLDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        raw = {k.replace("-", "_"): v for k, v in raw.items()}
        for key in ("corpus", "queries", "qrels", "out"):
            if key in raw:
                raw[key] = path.parent / raw[key]
        raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
        return cls.from_mapping(raw)

    @classmethod
    def from_mapping(cls, raw: Mapping[str, Any]) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        extra = set(raw) - known
        if extra:
            raise ConfigError(f"unknown config keys {sorted(extra)}")
        missing = {"corpus", "queries", "qrels"} - set(raw)
        if missing:
            raise ConfigError(f"missing config keys {sorted(missing)}")
        try:
            return cls(**raw)
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None


@dataclass
class QueryContext:
    """Everything needed to re-rank one query's initial list under any setting."""

    corpus: Corpus
    initial: RankedList
    mu: float
    link_mode: str
    tol: float
    max_iter: int
    _cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.docs = [self.corpus[i] for i in self.initial.doc_ids]
        self.node_ids = self.initial.doc_ids
        if len(self.docs) >= 2:
            scorer = LinkScorer(self.corpus, self.link_mode, self.mu)
            self.scores = scorer.matrix(self.docs)
            self.order = generator_order(self.scores, self.node_ids)

    def graph(self, kind: str, alpha: int, lam: float | None):
        key = ("graph", kind, alpha, lam)
        if key not in self._cache:
            if lam is None:
                self._cache[key] = graph_from_scores(
                    self.scores, self.node_ids, alpha, kind, self.order, self.link_mode
                )
            else:
                self._cache[key] = smooth(self.graph(kind, alpha, None), lam)
        return self._cache[key]

    def centrality(self, algo: Algorithm, alpha: int | None, lam: float | None) -> dict[int, float]:
        if algo.family == "prior":
            return {d.id: document_prior(d, algo.prior) for d in self.docs}
        kind = "uniform" if algo.graph == "U" else "weighted"
        key = (algo.family, algo.role, kind, alpha, lam)
        if key in self._cache:
            return self._cache[key]
        g = self.graph(kind, alpha, lam if algo.recursive else None)
        if algo.family == "centrality":
            result = recursive_influx(g, self.tol, self.max_iter) if algo.recursive else influx(g)
            self._cache[key] = result.scores
        else:
            auth, hub = hits(g, self.tol, self.max_iter)
            self._cache[("hits", "auth", kind, alpha, lam)] = auth.scores
            self._cache[("hits", "hub", kind, alpha, lam)] = hub.scores
        return self._cache[key]

    def rerank(self, algo: Algorithm, alpha: int | None, lam: float | None) -> RankedList:
        if algo.family == "initial":
            return self.initial
        if algo.family != "prior" and (len(self.docs) < 2 or alpha >= len(self.docs)):
            # too few documents for this alpha: nothing to re-rank
            return self.initial
        scores = self.centrality(algo, alpha, lam)
        if algo.with_lm:
            return rerank_combined(self.initial, scores)
        return rerank_by_centrality(self.initial, scores)


def settings_for(algo: Algorithm, config: ExperimentConfig, n_nodes: int) -> list[tuple]:
    """Sweep points ordered so that earlier points win ties (smaller alpha, then lambda)."""
    alphas = alpha_grid(n_nodes, config.alpha_grid) if algo.needs_alpha else [None]
    lams = sorted(config.lambda_grid) if algo.needs_lambda else [None]
    return [(a, l) for a in alphas for l in lams]


def _sweep_query(ctx: QueryContext, qrels: Qrels, plan) -> dict:
    """Metric values for every (algorithm, alpha, lambda) on one query."""
    out = {}
    for algo, settings in plan:
        for alpha, lam in settings:
            try:
                ranked = ctx.rerank(algo, alpha, lam)
            except Exception as exc:
                raise ExperimentError(
                    f"{algo.name} failed on query {ctx.initial.qid} (alpha={alpha}, lambda={lam}): {exc}"
                ) from exc
            out[(algo.name, alpha, lam)] = {m: evaluate(ranked, qrels, m) for m in REPORT_METRICS}
    return out


def _worker(args):
    ctx, qrels, plan = args
    return _sweep_query(ctx, qrels, plan)


@dataclass
class AlgorithmResult:
    name: str
    alpha: int | None
    lam: float | None
    sweep_mean: float
    reports: dict[str, MetricReport]
    rankings: list[RankedList]


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    mu_initial: float
    judged_qids: list[str]
    excluded_qids: list[str]
    reference: dict[str, dict[str, MetricReport]]
    baseline_mu: dict[str, float]
    algorithms: list[AlgorithmResult]
    initial_rankings: list[RankedList]


def _load(config: ExperimentConfig):
    try:
        corpus = load_corpus(config.corpus, config.format)
        queries = load_queries(config.queries)
        qrels = load_qrels(config.qrels)
    except FileNotFoundError as exc:
        raise DataError(f"missing input file: {exc.filename}") from None
    except (CorpusFormatError, UnicodeDecodeError) as exc:
        raise DataError(str(exc)) from None
    if len(corpus) < 2:
        raise DataError("corpus needs at least two non-empty documents")
    return corpus, queries, qrels


def _report(metric: str, values: Mapping[str, float], qids: Sequence[str]) -> MetricReport:
    return MetricReport(metric, {q: float(values[q]) for q in qids})


def run(config: ExperimentConfig, corpus=None, queries=None, qrels=None) -> ExperimentResult:
    """Run the sweep protocol and return results without writing files."""
    if corpus is None:
        corpus, queries, qrels = _load(config)
    dinit = config.dinit
    if config.mode == "full-corpus":
        if len(corpus) > config.full_corpus_cap:
            raise DataError(
                f"full-corpus mode refused: {len(corpus)} documents exceed the cap of "
                f"{config.full_corpus_cap}"
            )
        dinit = len(corpus)

    judged = [q for q in queries if qrels.n_relevant(q.qid) > 0]
    excluded = [q.qid for q in queries if qrels.n_relevant(q.qid) == 0]
    if not judged:
        raise DataError("no query has a relevant judgment")
    if excluded:
        logger.warning("%d queries without relevant documents excluded: %s", len(excluded), excluded)
    qids = [q.qid for q in judged]

    mu0 = tune_mu(judged, corpus, qrels, config.mu_grid)
    logger.info("initial ranking mu=%g (tuned on average precision)", mu0)
    initial = [initial_rank(q, corpus, mu0, dinit) for q in judged]

    reference: dict[str, dict[str, MetricReport]] = {"initial": {}, "upper bound": {}, "opt. baseline": {}}
    baseline_mu = {}
    for m in REPORT_METRICS:
        reference["initial"][m] = _report(m, {r.qid: evaluate(r, qrels, m) for r in initial}, qids)
        reference["upper bound"][m] = _report(
            m, {r.qid: rerank_upper_bound(r, qrels, m) for r in initial}, qids
        )
        mu_m, values = optimized_baseline(judged, corpus, qrels, m, config.mu_grid)
        baseline_mu[m] = mu_m
        reference["opt. baseline"][m] = _report(m, values, qids)

    algos = [parse_algorithm(a) for a in config.algorithms if a != "initial"]
    n_nodes = max(len(r) for r in initial)
    plan = [(a, settings_for(a, config, n_nodes)) for a in algos]
    contexts = [
        QueryContext(corpus, r, mu0, config.link_mode, config.tol, config.max_iter) for r in initial
    ]
    if config.jobs > 1 and len(contexts) > 1:
        with ProcessPoolExecutor(config.jobs) as pool:
            per_query = list(pool.map(_worker, [(c, qrels, plan) for c in contexts]))
    else:
        per_query = [_sweep_query(c, qrels, plan) for c in contexts]

    results = []
    target = config.target_metric
    for algo, settings in plan:
        best, best_mean = None, -math.inf
        for alpha, lam in settings:
            mean = float(np.mean([pq[(algo.name, alpha, lam)][target] for pq in per_query]))
            if mean > best_mean:
                best, best_mean = (alpha, lam), mean
        alpha, lam = best
        logger.info("%s: selected alpha=%s lambda=%s (%s=%.4f)", algo.name, alpha, lam, target, best_mean)
        reports = {}
        for m in REPORT_METRICS:
            values = {qid: pq[(algo.name, alpha, lam)][m] for qid, pq in zip(qids, per_query)}
            rep = _report(m, values, qids)
            for tag, ref in (("i", reference["initial"][m]), ("o", reference["opt. baseline"][m])):
                test = wilcoxon_two_sided(
                    [rep.per_query[q] for q in qids], [ref.per_query[q] for q in qids]
                )
                rep.significance[tag] = test.significant
            reports[m] = rep
        rankings = [c.rerank(algo, alpha, lam) for c in contexts]
        results.append(AlgorithmResult(algo.name, alpha, lam, best_mean, reports, rankings))

    return ExperimentResult(config, mu0, qids, excluded, reference, baseline_mu, results, initial)


def _fmt(x) -> str:
    if x is None:
        return "-"
    return f"{x:g}" if isinstance(x, float) else str(x)


def write_report(result: ExperimentResult, out_dir) -> dict[str, Path]:
    out = Path(out_dir)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    metrics = REPORT_METRICS
    rows = []
    for name in ("initial", "upper bound", "opt. baseline"):
        rows.append((name, None, None, {m: (result.reference[name][m].mean, "") for m in metrics}))
    for r in result.algorithms:
        cells = {
            m: (r.reports[m].mean, "".join(t for t in ("i", "o") if r.reports[m].significance.get(t)))
            for m in metrics
        }
        rows.append((r.name, r.alpha, r.lam, cells))

    paths = {"tsv": out / "report.tsv", "txt": out / "report.txt"}
    with open(paths["tsv"], "w", encoding="utf-8") as fh:
        head = ["algorithm", "alpha", "lambda"]
        for m in metrics:
            head += [m, f"{m}_sig"]
        fh.write("\t".join(head) + "\n")
        for name, alpha, lam, cells in rows:
            line = [name, _fmt(alpha), _fmt(lam)]
            for m in metrics:
                value, marks = cells[m]
                line += [f"{value:.4f}", marks or "-"]
            fh.write("\t".join(line) + "\n")

    width = max(len(r[0]) for r in rows) + 2
    lines = [
        f"queries evaluated: {len(result.judged_qids)} (excluded without relevant documents: "
        f"{len(result.excluded_qids)})",
        f"initial ranking mu: {result.mu_initial:g}; optimized-baseline mu: "
        + ", ".join(f"{m}={result.baseline_mu[m]:g}" for m in metrics),
        "significance (two-sided Wilcoxon, p < 0.05): i = vs initial, o = vs optimized baseline",
        "",
        "".ljust(width) + "".join(m.rjust(12) for m in metrics),
    ]
    for name, _, _, cells in rows:
        body = "".join(f"{cells[m][0]:.4f}{cells[m][1]:<3}".rjust(12) for m in metrics)
        lines.append(name.ljust(width) + body)
    paths["txt"].write_text("\n".join(lines) + "\n", encoding="utf-8")

    paths["params"] = out / "selected_params.tsv"
    with open(paths["params"], "w", encoding="utf-8") as fh:
        fh.write(f"algorithm\talpha\tlambda\tmean_{result.config.target_metric}\n")
        fh.write(f"initial\t-\t-\t{result.reference['initial'][result.config.target_metric].mean:.4f}\n")
        for r in result.algorithms:
            fh.write(f"{r.name}\t{_fmt(r.alpha)}\t{_fmt(r.lam)}\t{r.sweep_mean:.4f}\n")
        fh.write(f"#mu_initial\t{result.mu_initial:g}\n")
        for m in metrics:
            fh.write(f"#mu_baseline_{m}\t{result.baseline_mu[m]:g}\n")

    paths["per_query"] = out / "per_query.tsv"
    with open(paths["per_query"], "w", encoding="utf-8") as fh:
        fh.write("algorithm\tmetric\tqid\tvalue\n")
        for name in ("initial", "upper bound", "opt. baseline"):
            for m in metrics:
                for q, v in result.reference[name][m].per_query.items():
                    fh.write(f"{name}\t{m}\t{q}\t{v:.6f}\n")
        for r in result.algorithms:
            for m in metrics:
                for q, v in r.reports[m].per_query.items():
                    fh.write(f"{r.name}\t{m}\t{q}\t{v:.6f}\n")

    write_run(out / "runs" / "initial.run", result.initial_rankings, "initial")
    for r in result.algorithms:
        safe = r.name.replace("+", "_plus_")
        write_run(out / "runs" / f"{safe}.run", r.rankings, r.name)
    return paths


def run_experiment(config: ExperimentConfig) -> dict[str, Path]:
    result = run(config)
    return write_report(result, config.out)


def run_full_corpus(config: ExperimentConfig) -> dict[str, Path]:
    """Same protocol with the generation graph built over the whole corpus."""
    return run_experiment(replace(config, mode="full-corpus"))


def compare_modes(config: ExperimentConfig) -> Path:
    """Run re-ranking and full-corpus ranking side by side and tabulate both."""
    corpus, queries, qrels = _load(config)
    rr = run(replace(config, mode="rerank"), corpus, queries, qrels)
    fc = run(replace(config, mode="full-corpus"), corpus, queries, qrels)
    out = Path(config.out)
    write_report(rr, out / "rerank")
    write_report(fc, out / "full-corpus")
    path = out / "mode_comparison.tsv"
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("algorithm\tmetric\trerank\tfull_corpus\n")
        for a, b in zip(rr.algorithms, fc.algorithms):
            for m in REPORT_METRICS:
                fh.write(f"{a.name}\t{m}\t{a.reports[m].mean:.4f}\t{b.reports[m].mean:.4f}\n")
    return path
