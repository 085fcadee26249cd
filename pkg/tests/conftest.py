import pytest

from genrank import synthetic
from genrank.corpus import Corpus, load_corpus, load_queries
from genrank.evaluation import load_qrels


@pytest.fixture(scope="session")
def synthetic_paths(tmp_path_factory):
    return synthetic.write(tmp_path_factory.mktemp("synthetic"))


@pytest.fixture(scope="session")
def syn_corpus(synthetic_paths):
    return load_corpus(synthetic_paths["corpus"])


@pytest.fixture(scope="session")
def syn_queries(synthetic_paths):
    return load_queries(synthetic_paths["queries"])


@pytest.fixture(scope="session")
def syn_qrels(synthetic_paths):
    return load_qrels(synthetic_paths["qrels"])


@pytest.fixture
def salvador_corpus():
    return Corpus.from_texts(
        [
            ("d1", "Toronto Sheffield Salvador"),
            ("d2", "Salvador Salvador Salvador"),
            ("f1", "Toronto maple leafs hockey arena"),
            ("f2", "Sheffield steel city United"),
            ("f3", "Salvador Brazil beach carnival Salvador"),
        ]
    )
