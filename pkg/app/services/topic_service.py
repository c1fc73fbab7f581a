import logging
from dataclasses import dataclass
from typing import Iterable, List, Optional, Sequence

import numpy as np
from numba import jit
from scipy.special import gammaln

from app.artifacts.models.hmm_lda import HmmLdaConfig, HmmLdaModel, WordTopicStats
from app.artifacts.models.vocabulary import RESERVED, Vocabulary
from app.utils.error_messages import ERROR_MESSAGES
from app.utils.errors import DataError

logger = logging.getLogger(__name__)

DEGENERATE_Z = 1e-9


class HmmLdaState:
    """
    Mutable sampler state: one (z, c) assignment per token plus the count
    tables of the model, kept in sync incrementally.

    Tokens are stored flat in corpus order. Each utterance is its own class
    chain, framed by the boundary state on both ends; topics are shared by
    all utterances of a document.
    """

    def __init__(self, config: HmmLdaConfig, vocab: Vocabulary, words: np.ndarray, docs: np.ndarray,
                 is_first: np.ndarray, is_last: np.ndarray, z: np.ndarray, c: np.ndarray, n_docs: int) -> None:
        self.config = config
        self.vocab = vocab
        self.words = words
        self.docs = docs
        self.is_first = is_first
        self.is_last = is_last
        self.z = z
        self.c = c
        # Sweeps draw from a stream independent of the initial assignment draws
        self.rng = np.random.default_rng([config.seed, 1])
        self.sweeps = 0
        tables = count_tables(config, len(vocab), words, docs, is_first, is_last, z, c, n_docs)
        self.model = HmmLdaModel(config, len(vocab), **tables)

    def __len__(self) -> int:
        return len(self.words)


def count_tables(config: HmmLdaConfig, V: int, words, docs, is_first, is_last, z, c, n_docs: int) -> dict:
    """Tallies all count tables from scratch from the assignments."""
    K, C = config.K, config.C
    boundary = C
    n_dz = np.zeros((n_docs, K), dtype=np.int64)
    n_zw = np.zeros((K, V), dtype=np.int64)
    n_cw = np.zeros((C, V), dtype=np.int64)
    n_cc = np.zeros((C + 1, C + 1), dtype=np.int64)
    for i in range(len(words)):
        n_dz[docs[i], z[i]] += 1
        if c[i] == 0:
            n_zw[z[i], words[i]] += 1
        else:
            n_cw[c[i], words[i]] += 1
        prev = boundary if is_first[i] else c[i - 1]
        n_cc[prev, c[i]] += 1
        if is_last[i]:
            n_cc[c[i], boundary] += 1
    return {"n_dz": n_dz, "n_zw": n_zw, "n_cw": n_cw, "n_cc": n_cc}


def init_state(config: HmmLdaConfig, documents: Sequence[Sequence[Sequence[str]]], vocab: Vocabulary,
               z: Optional[Sequence[int]] = None, c: Optional[Sequence[int]] = None) -> HmmLdaState:
    """
    Flattens documents (conversation -> utterances -> tokens) and assigns
    (z, c) uniformly at random under the config seed unless given.
    """
    words, docs, first, last = [], [], [], []
    n_docs = 0
    for document in documents:
        utterances = [u for u in document if len(u) > 0]
        if not utterances:
            continue
        for utterance in utterances:
            ids = vocab.encode(utterance)
            for j, w in enumerate(ids):
                words.append(w)
                docs.append(n_docs)
                first.append(j == 0)
                last.append(j == len(ids) - 1)
        n_docs += 1
    if not words:
        raise DataError(ERROR_MESSAGES["validation"]["empty_documents"])

    init_rng = np.random.default_rng(config.seed)
    n = len(words)
    z_arr = np.asarray(z, dtype=np.int64) if z is not None else init_rng.integers(0, config.K, size=n)
    c_arr = np.asarray(c, dtype=np.int64) if c is not None else init_rng.integers(0, config.C, size=n)
    if len(z_arr) != n or len(c_arr) != n:
        raise ValueError("Assignment length does not match the number of tokens")
    state = HmmLdaState(
        config, vocab, np.asarray(words, dtype=np.int64), np.asarray(docs, dtype=np.int64),
        np.asarray(first, dtype=bool), np.asarray(last, dtype=bool), z_arr, c_arr, n_docs,
    )
    return state


@jit(nopython=True)
def _pick(weights, u):
    """Index drawn from unnormalised weights with the uniform variate u."""
    total = 0.0
    for k in range(weights.shape[0]):
        total += weights[k]
    target = u * total
    running = 0.0
    for k in range(weights.shape[0]):
        running += weights[k]
        if target < running:
            return k
    return weights.shape[0] - 1


@jit(nopython=True)
def _sweep_tokens(words, docs, is_first, is_last, z, c, n_dz, n_zw, n_cw, n_cc, n_z, n_c, n_out,
                  alpha, beta, delta, gamma, uniforms):
    # Two uniforms per token: the first draws z, the second draws c
    K, V = n_zw.shape
    C = n_cw.shape[0]
    boundary = C
    n_targets = C + 1
    topic_weights = np.empty(K)
    class_weights = np.empty(C)

    for i in range(words.shape[0]):
        w = words[i]
        d = docs[i]
        zi = z[i]
        ci = c[i]
        prev = boundary if is_first[i] else c[i - 1]
        nxt = boundary if is_last[i] else c[i + 1]

        # --- topic ---
        n_dz[d, zi] -= 1
        if ci == 0:
            n_zw[zi, w] -= 1
            n_z[zi] -= 1
        for k in range(K):
            weight = n_dz[d, k] + alpha
            if ci == 0:
                weight *= (n_zw[k, w] + beta) / (n_z[k] + V * beta)
            topic_weights[k] = weight
        zi = _pick(topic_weights, uniforms[2 * i])
        z[i] = zi
        n_dz[d, zi] += 1
        if ci == 0:
            n_zw[zi, w] += 1
            n_z[zi] += 1

        # --- syntax class ---
        if ci == 0:
            n_zw[zi, w] -= 1
            n_z[zi] -= 1
        else:
            n_cw[ci, w] -= 1
            n_c[ci] -= 1
        n_cc[prev, ci] -= 1
        n_cc[ci, nxt] -= 1
        n_out[prev] -= 1
        n_out[ci] -= 1

        for k in range(C):
            if k == 0:
                emission = (n_zw[zi, w] + beta) / (n_z[zi] + V * beta)
            else:
                emission = (n_cw[k, w] + delta) / (n_c[k] + V * delta)
            same_prev = 1.0 if k == prev else 0.0
            same_both = 1.0 if k == prev and k == nxt else 0.0
            trans_in = n_cc[prev, k] + gamma
            trans_out = (n_cc[k, nxt] + gamma + same_both) / (n_out[k] + n_targets * gamma + same_prev)
            class_weights[k] = emission * trans_in * trans_out
        ci = _pick(class_weights, uniforms[2 * i + 1])
        c[i] = ci

        if ci == 0:
            n_zw[zi, w] += 1
            n_z[zi] += 1
        else:
            n_cw[ci, w] += 1
            n_c[ci] += 1
        n_cc[prev, ci] += 1
        n_cc[ci, nxt] += 1
        n_out[prev] += 1
        n_out[ci] += 1


def gibbs_sweep(state: HmmLdaState) -> HmmLdaState:
    """
    Resamples every token's z, then its c, from the collapsed full conditionals
    with that token's own counts removed. Tables are updated in place.
    """
    cfg = state.config
    model = state.model
    uniforms = state.rng.random(2 * len(state.words))
    _sweep_tokens(
        state.words, state.docs, state.is_first, state.is_last, state.z, state.c,
        model.n_dz, model.n_zw, model.n_cw, model.n_cc,
        model.n_zw.sum(axis=1), model.n_cw.sum(axis=1), model.n_cc.sum(axis=1),
        float(cfg.alpha_t), float(cfg.beta_t), float(cfg.delta_c), float(cfg.gamma_c), uniforms,
    )
    state.sweeps += 1
    return state


def log_joint(model: HmmLdaModel) -> float:
    """Collapsed log P(w, z, c) of the assignments summarised by the tables."""
    cfg = model.config
    alpha, beta, delta, gamma = cfg.alpha_t, cfg.beta_t, cfg.delta_c, cfg.gamma_c

    def dirichlet_multinomial(table: np.ndarray, prior: float) -> float:
        width = table.shape[1]
        return float(
            np.sum(gammaln(width * prior) - gammaln(table.sum(axis=1) + width * prior))
            + np.sum(gammaln(table + prior) - gammaln(prior))
        )

    return (
        dirichlet_multinomial(model.n_dz, alpha)
        + dirichlet_multinomial(model.n_zw, beta)
        + dirichlet_multinomial(model.n_cw[1:], delta)
        + dirichlet_multinomial(model.n_cc, gamma)
    )


def train(config: HmmLdaConfig, documents: Sequence[Sequence[Sequence[str]]], vocab: Vocabulary):
    """
    Runs burn_in collapsed Gibbs sweeps from a random start.
    Returns the final state and the word statistics estimated from it
    (from the mean of the last `average_last` samples when that is > 1).
    """
    if not documents:
        raise DataError(ERROR_MESSAGES["validation"]["empty_documents"])
    state = init_state(config, documents, vocab)
    logger.info(f"Training HMM-LDA: {len(state)} tokens, {state.model.n_dz.shape[0]} documents, K={config.K}, C={config.C}")

    sum_zw = np.zeros_like(state.model.n_zw, dtype=float)
    sum_cw = np.zeros_like(state.model.n_cw, dtype=float)
    for sweep in range(1, config.burn_in + 1):
        gibbs_sweep(state)
        if sweep > config.burn_in - config.average_last:
            sum_zw += state.model.n_zw
            sum_cw += state.model.n_cw
        if config.log_every and sweep % config.log_every == 0:
            logger.info(f"Sweep {sweep}/{config.burn_in}: log joint {log_joint(state.model):.2f}")

    stats = estimate_word_stats(sum_zw / config.average_last, sum_cw / config.average_last, vocab.tokens, config.beta_t)
    return state, stats


def estimate_word_stats(n_zw: np.ndarray, n_cw: np.ndarray, tokens: Sequence[str], smoothing: float) -> WordTopicStats:
    """
    P(C=0|w) = n(w, c=0) / n(w)
    P(T=z|w) = (n(w, z, c=0) + smoothing) / (n(w, c=0) + K * smoothing)
    """
    K = n_zw.shape[0]
    content_counts = n_zw.sum(axis=0).astype(float)
    totals = content_counts + n_cw.sum(axis=0)
    content_prob = np.divide(content_counts, totals, out=np.zeros_like(content_counts), where=totals > 0)
    topic_given_word = ((n_zw + smoothing) / (content_counts + K * smoothing)).T
    return WordTopicStats(tokens, np.ascontiguousarray(topic_given_word), content_prob)


def word_stats(state: HmmLdaState, smoothing: Optional[float] = None) -> WordTopicStats:
    smoothing = state.config.beta_t if smoothing is None else smoothing
    return estimate_word_stats(state.model.n_zw, state.model.n_cw, state.vocab.tokens, smoothing)


@dataclass(frozen=True)
class SentenceTopics:
    dist: np.ndarray
    Z: float

    @property
    def degenerate(self) -> bool:
        return self.Z < DEGENERATE_Z


def sentence_topic_dist(stats: WordTopicStats, sentence: Iterable[str]) -> SentenceTopics:
    """
    P(T|S) = (1/Z) * sum_w P(T|w) P(C=0|w), with Z = sum_w P(C=0|w).
    Sentences without content words return the uniform distribution and Z = 0.
    """
    total = np.zeros(stats.K)
    Z = 0.0
    for token in sentence:
        dist, content = stats.lookup(token)
        total += content * dist
        Z += content
    if Z < DEGENERATE_Z:
        return SentenceTopics(np.full(stats.K, 1.0 / stats.K), 0.0)
    return SentenceTopics(total / Z, Z)


def top_topic_words(model: HmmLdaModel, vocab: Vocabulary, topic: int, n: int, stop_words: frozenset = frozenset()) -> List[str]:
    """
    The n words with the highest phi^(z) emission probability for a topic,
    skipping stop-words and reserved symbols. Ties go to the lower vocabulary id.
    """
    if not 0 <= topic < model.K:
        raise ValueError(f"Topic {topic} is out of range 0..{model.K - 1}")
    if n <= 0:
        return []
    probs = model.topic_word_probs()[topic]
    ids = np.arange(len(probs))
    order = np.lexsort((ids, -probs))
    words = []
    for i in order:
        token = vocab.token(int(i))
        if token in RESERVED or token in stop_words:
            continue
        words.append(token)
        if len(words) == n:
            break
    return words


def topic_word_list(model: HmmLdaModel, vocab: Vocabulary, per_topic: int = 10, stop_words: frozenset = frozenset()) -> List[str]:
    """Union of the top words of every topic, in topic order without repeats."""
    seen, words = set(), []
    for topic in range(model.K):
        for token in top_topic_words(model, vocab, topic, per_topic, stop_words):
            if token not in seen:
                seen.add(token)
                words.append(token)
    return words
