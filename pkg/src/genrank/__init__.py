"""Structural re-ranking with language-model generation graphs."""

from .centrality import CentralityScores, hits, influx, recursive_influx
from .corpus import Corpus, Document, Query, count, load_corpus, load_queries, tokenize
from .evaluation import Qrels, avg_prec, load_qrels, mrr, prec_at_k, rerank_upper_bound, wilcoxon_two_sided
from .graph import GenerationGraph, LinkScorer, build_graph, cosine_score, smooth, top_generators
from .lm import dirichlet_prob, entropy, gen_prob, kl_divergence, mle
from .rerank import RerankConfig, document_prior, rerank_by_centrality, rerank_combined
from .retrieval import RankedList, initial_rank, optimized_baseline, tune_mu

__version__ = "0.1.0"
