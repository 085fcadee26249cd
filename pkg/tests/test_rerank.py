import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from genrank.centrality import CentralityScores
from genrank.rerank import (
    ALGORITHM_NAMES,
    DEFAULT_ALGORITHMS,
    RerankConfig,
    document_prior,
    parse_algorithm,
    rerank_by_centrality,
    rerank_combined,
)
from genrank.retrieval import Entry, RankedList


def make_list(scores, ids=None):
    ids = list(range(len(scores))) if ids is None else ids
    entries = sorted(zip(ids, scores), key=lambda t: (-t[1], t[0]))
    return RankedList("q", tuple(Entry(i, f"D{i}", s) for i, s in entries))


def test_equal_centrality_preserves_initial_order():
    r = make_list([-1.0, -2.0, -2.0, -0.5, -3.0])
    out = rerank_by_centrality(r, {i: 0.2 for i in range(5)})
    assert out.doc_ids == r.doc_ids


def test_distinct_centrality_sorts():
    r = make_list([-1.0, -2.0, -3.0])
    out = rerank_by_centrality(r, {0: 0.1, 1: 0.7, 2: 0.3})
    assert out.doc_ids == [1, 2, 0]
    assert out.scores == [0.7, 0.3, 0.1]


def test_two_tied_pairs_stable_sort_oracle():
    init = [-5.0, -1.0, -2.0, -2.0, -3.0, -4.0, -0.5, -6.0, -7.0, -1.5]
    cent = [0.3, 0.1, 0.3, 0.3, 0.2, 0.5, 0.05, 0.2, 0.9, 0.0]
    # pair (2, 3) ties on both centrality and initial score; (4, 7) on centrality only
    r = make_list(init)
    oracle = list(range(10))
    oracle.sort(key=lambda i: i)
    oracle.sort(key=lambda i: init[i], reverse=True)
    oracle.sort(key=lambda i: cent[i], reverse=True)
    assert rerank_by_centrality(r, dict(enumerate(cent))).doc_ids == oracle


def test_accepts_centrality_scores_object():
    r = make_list([-1.0, -2.0])
    cs = CentralityScores((0, 1), np.array([0.2, 0.8]), "W-In")
    assert rerank_by_centrality(r, cs).doc_ids == [1, 0]


def test_missing_score_raises():
    r = make_list([-1.0, -2.0, -3.0])
    with pytest.raises(ValueError, match="no score"):
        rerank_by_centrality(r, {0: 1.0, 1: 1.0})
    with pytest.raises(ValueError):
        rerank_combined(r, {0: 1.0, 1: 1.0, 2: 1.0}, {0: -1.0})


def test_combined_uniform_centrality_is_initial():
    rng = np.random.default_rng(0)
    r = make_list(list(rng.normal(size=30)))
    assert rerank_combined(r, {i: 0.04 for i in range(30)}).doc_ids == r.doc_ids


def test_combined_uniform_likelihood_is_centrality_order():
    rng = np.random.default_rng(1)
    r = make_list(list(rng.normal(size=30)))
    cent = dict(enumerate(rng.uniform(size=30)))
    flat = {i: -3.0 for i in range(30)}
    assert rerank_combined(r, cent, flat).doc_ids == rerank_by_centrality(r, cent).doc_ids


def test_combined_log_domain_matches_linear_product():
    rng = np.random.default_rng(2)
    for _ in range(20):
        n = 25
        loglik = rng.uniform(-30, -5, size=n)
        cent = rng.uniform(1e-4, 1, size=n)
        r = make_list(list(loglik))
        linear = sorted(range(n), key=lambda i: (-(cent[i] * math.exp(loglik[i])), -loglik[i], i))
        assert rerank_combined(r, dict(enumerate(cent))).doc_ids == linear


def test_zero_centrality_sinks_to_bottom():
    r = make_list([-1.0, -2.0, -3.0])
    out = rerank_combined(r, {0: 0.0, 1: 0.5, 2: 0.5})
    assert out.doc_ids == [1, 2, 0]
    assert out.scores[-1] == -math.inf


@settings(max_examples=100, deadline=None)
@given(
    init=st.lists(st.floats(-50, 0), min_size=1, max_size=40),
    data=st.data(),
)
def test_output_is_permutation(init, data):
    r = make_list(init)
    cent = {
        i: data.draw(st.sampled_from([0.0, 0.1, 0.5, 1.0]) | st.floats(0, 1)) for i in range(len(init))
    }
    for out in (rerank_by_centrality(r, cent), rerank_combined(r, cent)):
        assert sorted(out.doc_ids) == sorted(r.doc_ids)
        assert len(out) == len(r)


def test_priors(salvador_corpus):
    d1, d2 = salvador_corpus[0], salvador_corpus[1]
    assert document_prior(d2, "tokens") == 3
    assert document_prior(d2, "types") == 1
    assert document_prior(d2, "entropy") == 0.0
    assert document_prior(d1, "types") == 3
    assert document_prior(d1, "entropy") == pytest.approx(math.log(3), rel=1e-15)
    assert document_prior(d1, "log-tokens") == pytest.approx(math.log(4))
    assert document_prior(d2, "log-types") == pytest.approx(math.log(2))
    for d in salvador_corpus.documents:
        assert document_prior(d, "uniform") == 1.0
    with pytest.raises(ValueError):
        document_prior(d1, "bogus")


def test_parse_algorithm():
    a = parse_algorithm("R-W-In+LM")
    assert (a.family, a.graph, a.recursive, a.with_lm) == ("centrality", "W", True, True)
    a = parse_algorithm("U-In")
    assert (a.graph, a.recursive, a.with_lm) == ("U", False, False)
    a = parse_algorithm("hits-hub-R-U+LM")
    assert (a.family, a.role, a.graph, a.recursive) == ("hits", "hub", "U", True)
    a = parse_algorithm("log-types+LM")
    assert (a.family, a.prior) == ("prior", "log-types")
    assert not a.needs_alpha
    with pytest.raises(ValueError):
        parse_algorithm("PageRank")
    assert len(DEFAULT_ALGORITHMS) == 8
    assert len(set(ALGORITHM_NAMES)) == len(ALGORITHM_NAMES)


def test_rerank_config_validation():
    RerankConfig("R-W-In", alpha=4, lam=0.5)
    RerankConfig("W-In+LM", alpha=4)
    RerankConfig("entropy+LM")
    with pytest.raises(ValueError):
        RerankConfig("R-W-In", alpha=4)
    with pytest.raises(ValueError):
        RerankConfig("W-In", alpha=4, lam=0.5)
    with pytest.raises(ValueError):
        RerankConfig("U-In")
    with pytest.raises(ValueError):
        RerankConfig("nope")
