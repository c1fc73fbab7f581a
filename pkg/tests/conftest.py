from types import SimpleNamespace
from typing import Iterable

import numpy as np
import pytest

from app.artifacts.models.hmm_lda import WordTopicStats
from app.artifacts.models.sif_model import SifModel, WordVectors
from app.artifacts.models.vocabulary import BOS_ID, NULL_ID, RESERVED, Vocabulary
from app.services import corpus_service
from app.services.corpus_service import DialoguePair

TOPICS = {
    "clothes": ["jacket", "coat", "shirt", "wear", "size", "pocket"],
    "food": ["pizza", "cheese", "dinner", "hungry", "cook", "bread"],
    "music": ["song", "guitar", "band", "sing", "concert", "drums"],
}
FUNCTION_WORDS = ["i", "the", "a", "you", "it", "is", "to", "do", "not", "know", "what", "."]


def make_pairs(n: int, seed: int, topical: float = 0.4):
    """Synthetic conversations: each pair talks about one topic, padded with function words."""
    rng = np.random.default_rng(seed)
    names = sorted(TOPICS)

    def utterance(topic, length):
        words = []
        for _ in range(length):
            pool = topic if rng.random() < topical else FUNCTION_WORDS
            words.append(pool[int(rng.integers(len(pool)))])
        return tuple(words)

    pairs = []
    for _ in range(n):
        topic = TOPICS[names[int(rng.integers(len(names)))]]
        pairs.append(DialoguePair(utterance(topic, int(rng.integers(4, 9))), utterance(topic, int(rng.integers(3, 8)))))
    return pairs


def write_pairs_file(path, pairs) -> str:
    with open(path, "w", encoding="utf-8") as f:
        for pair in pairs:
            f.write(f"{' '.join(pair.source)}\t{' '.join(pair.target)}\n")
    return str(path)


class RandomLm:
    """
    Conditional model with a fixed random distribution per (source, prefix).
    `<s>` and `<null>` get no mass.
    """

    def __init__(self, V: int, seed: int, concentration: float = 1.0) -> None:
        self.V = V
        self.seed = seed
        self.concentration = concentration

    def next_logprobs(self, source, prefix):
        rng = np.random.default_rng([self.seed, len(source), *source, 7919, len(prefix), *prefix])
        p = rng.dirichlet(np.full(self.V, self.concentration))
        p[[BOS_ID, NULL_ID]] = 0.0
        p /= p.sum()
        with np.errstate(divide="ignore"):
            return np.log(p)


class FixedLm:
    """The same distribution at every step."""

    def __init__(self, probs) -> None:
        self.probs = np.asarray(probs, dtype=float)

    def next_logprobs(self, source, prefix):
        with np.errstate(divide="ignore"):
            return np.log(self.probs)


def make_vocab(words: Iterable[str], seed: int = 0) -> Vocabulary:
    words = list(words)
    rng = np.random.default_rng(seed)
    counts = [0] * len(RESERVED) + [int(c) for c in rng.integers(1, 20, size=len(words))]
    return Vocabulary(list(RESERVED) + words, counts)


def make_stats(vocab: Vocabulary, K: int, seed: int, function_words: Iterable[str] = ()) -> WordTopicStats:
    rng = np.random.default_rng(seed)
    dists = rng.dirichlet(np.ones(K), size=len(vocab))
    content = rng.uniform(0.2, 1.0, size=len(vocab))
    for w in function_words:
        content[vocab.id(w)] = 0.0
    return WordTopicStats(vocab.tokens, dists, content)


def make_sif(vocab: Vocabulary, d: int, seed: int, oov: Iterable[str] = (), a: float = 0.05) -> SifModel:
    oov = set(oov)
    words = [vocab.token(i) for i in vocab.word_ids if vocab.token(i) not in oov]
    vectors = WordVectors.random(words, d, seed)
    unigram = {w: vocab.prob(w) for w in words}
    u = np.random.default_rng(seed + 1).standard_normal(d)
    return SifModel(vectors, unigram, a, u / np.linalg.norm(u))


@pytest.fixture
def toy_pairs():
    return make_pairs(60, seed=7)


@pytest.fixture
def toy_vocab(toy_pairs):
    return corpus_service.build_vocab(toy_pairs, min_count=1)


@pytest.fixture
def pairs_file(tmp_path, toy_pairs):
    return write_pairs_file(tmp_path / "pairs.tsv", toy_pairs)


@pytest.fixture
def make_models():
    """
    Factory for small random decoding setups: vocabulary, word topic
    statistics, SIF model and a random conditional model.
    """
    def factory(seed: int = 0, n_words: int = 8, K: int = 3, d: int = 6, function_words=(), oov=()):
        words = [f"w{i}" for i in range(n_words)]
        vocab = make_vocab(words, seed)
        return SimpleNamespace(
            vocab=vocab,
            words=words,
            stats=make_stats(vocab, K, seed, function_words),
            sif=make_sif(vocab, d, seed, oov),
            lm=RandomLm(len(vocab), seed),
        )
    return factory
