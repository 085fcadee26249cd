"""Synthetic topic-mixture corpus with planted relevance.

Each document mixes a main topic, a secondary topic of similar weight and a
Zipfian background. A query is a few words of one topic; a document is
relevant to it when that topic is the document's main one. Secondary-topic
documents share query words without being relevant, which keeps the initial
ranking imperfect.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import stem

_ONSETS = ["b", "c", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "tr", "pl"]
_NUCLEI = ["a", "o", "u", "i", "e"]


@dataclass(frozen=True)
class SyntheticSpec:
    n_docs: int = 200
    n_topics: int = 15
    words_per_topic: int = 30
    background_size: int = 400
    doc_len: tuple[int, int] = (120, 180)
    main_weight: tuple[float, float] = (0.12, 0.3)
    secondary_weight: tuple[float, float] = (0.12, 0.3)
    query_len: int = 3
    seed: int = 20050815


def _vocabulary(rng: np.random.Generator, size: int) -> list[str]:
    """Pseudo-words that are fixed points of the stemmer, so re-tokenizing is idempotent."""
    words: list[str] = []
    seen = set()
    while len(words) < size:
        n_syl = int(rng.integers(2, 4))
        w = "".join(rng.choice(_ONSETS) + rng.choice(_NUCLEI) for _ in range(n_syl))
        w += rng.choice(["", "n", "m", "r", "k", "t"])
        if w in seen or stem(w) != w:
            continue
        seen.add(w)
        words.append(w)
    return words


def _zipf(n: int, s: float = 1.0) -> np.ndarray:
    p = 1.0 / np.arange(1, n + 1) ** s
    return p / p.sum()


def generate(spec: SyntheticSpec = SyntheticSpec()):
    """Return ``(docs, queries, qrels)`` as ``[(name, text)]``, ``[(qid, text)]``, ``[(qid, name, grade)]``."""
    rng = np.random.default_rng(spec.seed)
    vocab = _vocabulary(rng, spec.n_topics * spec.words_per_topic + spec.background_size)
    topics = [
        vocab[t * spec.words_per_topic : (t + 1) * spec.words_per_topic]
        for t in range(spec.n_topics)
    ]
    background = vocab[spec.n_topics * spec.words_per_topic :]
    topic_p = _zipf(spec.words_per_topic, 0.8)
    bg_p = _zipf(len(background), 1.0)

    docs, mains, seconds = [], [], []
    for i in range(spec.n_docs):
        main = i % spec.n_topics
        second = int(rng.choice([t for t in range(spec.n_topics) if t != main]))
        w_main = rng.uniform(*spec.main_weight)
        w_second = rng.uniform(*spec.secondary_weight)
        length = int(rng.integers(spec.doc_len[0], spec.doc_len[1] + 1))
        source = rng.choice(3, size=length, p=[w_main, w_second, 1 - w_main - w_second])
        words = []
        for src in source:
            if src == 0:
                words.append(topics[main][rng.choice(spec.words_per_topic, p=topic_p)])
            elif src == 1:
                words.append(topics[second][rng.choice(spec.words_per_topic, p=topic_p)])
            else:
                words.append(background[rng.choice(len(background), p=bg_p)])
        words[0] = words[0].capitalize()
        text = " ".join(words).replace(" ", ", ", 1) + "."
        docs.append((f"SYN-{i:04d}", text))
        mains.append(main)
        seconds.append(second)

    queries, qrels = [], []
    for t in range(spec.n_topics):
        qid = str(101 + t)
        picks = rng.choice(spec.words_per_topic // 2, size=spec.query_len, replace=False)
        queries.append((qid, " ".join(topics[t][k].upper() for k in sorted(picks))))
        for i, (name, _) in enumerate(docs):
            if mains[i] == t:
                qrels.append((qid, name, 1))
            elif seconds[i] == t:
                qrels.append((qid, name, 0))
    return docs, queries, qrels


def write(out_dir, spec: SyntheticSpec = SyntheticSpec()) -> dict[str, Path]:
    """Write corpus.jsonl, queries.tsv, qrels.txt and config.toml into ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    docs, queries, qrels = generate(spec)
    paths = {
        "corpus": out / "corpus.jsonl",
        "queries": out / "queries.tsv",
        "qrels": out / "qrels.txt",
        "config": out / "config.toml",
    }
    with open(paths["corpus"], "w", encoding="utf-8") as fh:
        for name, text in docs:
            fh.write(json.dumps({"name": name, "text": text}) + "\n")
    with open(paths["queries"], "w", encoding="utf-8") as fh:
        for qid, text in queries:
            fh.write(f"{qid}\t{text}\n")
    with open(paths["qrels"], "w", encoding="utf-8") as fh:
        for qid, name, grade in qrels:
            fh.write(f"{qid} 0 {name} {grade}\n")
    paths["config"].write_text(
        "# Synthetic-corpus experiment; paths are relative to this file.\n"
        'corpus = "corpus.jsonl"\n'
        'format = "jsonl"\n'
        'queries = "queries.tsv"\n'
        'qrels = "qrels.txt"\n'
        "dinit = 50\n"
        'out = "results"\n',
        encoding="utf-8",
    )
    return paths
