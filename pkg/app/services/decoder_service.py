import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.artifacts.models.hmm_lda import HmmLdaModel, WordTopicStats
from app.artifacts.models.sif_model import SifModel
from app.artifacts.models.vocabulary import BOS_ID, EOS_ID, NULL_ID, UNK_ID, Vocabulary
from app.services import sif_service, topic_service
from app.services.lm_service import ConditionalLm, sequence_logprob

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DecoderConfig:
    """
    Beam search settings. alpha weighs the topic constraint, beta the semantic
    one; ta_bias (when set) is added to the log-probability of the source's
    dominant-topic words.
    """
    beam_size: int = 10
    alpha: float = 5.0
    beta: float = 2.0
    max_len: int = 20
    min_len: int = 3
    constraint_start_step: int = 2
    ta_bias: Optional[float] = None
    ta_words: int = 20
    mmi_lambda: float = 0.0
    keep_forward_score: bool = True
    seed: int = 13

    def __post_init__(self):
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if not self.max_len >= self.min_len >= 1:
            raise ValueError("Need max_len >= min_len >= 1")
        if self.alpha < 0 or self.beta < 0:
            raise ValueError("alpha and beta must be non-negative")
        if self.constraint_start_step < 1:
            raise ValueError("constraint_start_step must be >= 1")
        if self.ta_words < 0:
            raise ValueError("ta_words must be >= 0")


SYSTEMS = ("vanilla", "mmi", "ta", "dc", "dc-mmi")


def apply_system(config: DecoderConfig, system: str) -> DecoderConfig:
    """
    Restricts a config to one of the compared systems. Systems without
    constraints zero alpha and beta; systems without reranking zero
    mmi_lambda; rerank and bias weights left at zero fall back to 1.0.
    """
    if system not in SYSTEMS:
        raise ValueError(f"Unknown system '{system}'; expected one of {', '.join(SYSTEMS)}")
    constrained = system in ("dc", "dc-mmi")
    reranked = system in ("mmi", "dc-mmi")
    return replace(
        config,
        alpha=config.alpha if constrained else 0.0,
        beta=config.beta if constrained else 0.0,
        mmi_lambda=(config.mmi_lambda or 1.0) if reranked else 0.0,
        ta_bias=(config.ta_bias if config.ta_bias is not None else 1.0) if system == "ta" else None,
    )


# Ids the decoder never emits as words
_NEVER_EXPANDED = (UNK_ID, BOS_ID, NULL_ID, EOS_ID)


@lru_cache(maxsize=8)
def _topic_tables(stats: WordTopicStats, vocab: Vocabulary) -> Tuple[np.ndarray, np.ndarray]:
    """P(T|w) and P(C=0|w) laid out by vocabulary id."""
    dists = np.empty((len(vocab), stats.K))
    content = np.empty(len(vocab))
    for i, token in enumerate(vocab.tokens):
        dists[i], content[i] = stats.lookup(token)
    return dists, content


@lru_cache(maxsize=8)
def _sif_tables(sif: SifModel, vocab: Vocabulary) -> Tuple[np.ndarray, np.ndarray]:
    return sif.aligned(vocab)


class SourceContext:
    """
    Everything about one input that beam search needs: the source topic
    distribution tX with its Z, the projected source embedding q, and the
    per-word contributions

        topic_contrib(w) = P(C=0|w) * (tX . P(T|w))
        emb_contrib(w)   = q . (a / (a + P(w))) * vec(w)

    so that the hypothesis side of both dot products is a running sum.
    The contribution arrays are computed on first use.
    """

    def __init__(self, source: Sequence[str], vocab: Vocabulary, stats: WordTopicStats, sif: SifModel,
                 bias_words: Sequence[str] = ()) -> None:
        self.tokens = tuple(source)
        self.vocab = vocab
        self.source = tuple(vocab.encode(source))
        self.stats = stats
        self.sif = sif
        topics = topic_service.sentence_topic_dist(stats, source)
        self.tX = topics.dist
        self.Z_X = topics.Z
        self.topic_enabled = not topics.degenerate
        self.q = sif_service.embed(sif, source)
        self.bias_words = tuple(bias_words)
        self.bias_ids = np.asarray(sorted({vocab.id(w) for w in bias_words if w in vocab}), dtype=np.int64)

    @cached_property
    def content_all(self) -> np.ndarray:
        return _topic_tables(self.stats, self.vocab)[1]

    @cached_property
    def topic_contrib_all(self) -> np.ndarray:
        dists, content = _topic_tables(self.stats, self.vocab)
        return content * (dists @ self.tX)

    @cached_property
    def emb_contrib_all(self) -> np.ndarray:
        weighted, _ = _sif_tables(self.sif, self.vocab)
        return weighted @ self.q

    @cached_property
    def in_vocab(self) -> np.ndarray:
        return _sif_tables(self.sif, self.vocab)[1].astype(np.int64)

    def topic_contrib(self, w: int) -> float:
        return float(self.topic_contrib_all[w])

    def emb_contrib(self, w: int) -> float:
        return float(self.emb_contrib_all[w])


def build_context(source: Sequence[str], stats: WordTopicStats, sif: SifModel, config: DecoderConfig,
                  vocab: Vocabulary, topic_model: Optional[HmmLdaModel] = None,
                  stop_words: frozenset = frozenset()) -> SourceContext:
    """
    Precomputes the source side of both constraints. With ta_bias set and a
    topic model given, the top ta_words words of the source's dominant topic
    become the bias set.
    """
    bias_words: List[str] = []
    probe = SourceContext(source, vocab, stats, sif)
    if not probe.topic_enabled:
        logger.warning(f"Source has no content words; topic constraint disabled: {' '.join(source)}")
    if config.ta_bias is not None and topic_model is not None and probe.topic_enabled:
        dominant = int(np.argmax(probe.tX))
        bias_words = topic_service.top_topic_words(topic_model, vocab, dominant, config.ta_words, stop_words)
        probe.bias_words = tuple(bias_words)
        probe.bias_ids = np.asarray(sorted({vocab.id(w) for w in bias_words if w in vocab}), dtype=np.int64)
    return probe


@dataclass(frozen=True)
class Hypothesis:
    tokens: Tuple[int, ...] = ()
    loglik: float = 0.0
    bias: float = 0.0
    topic_num: float = 0.0
    topic_Z: float = 0.0
    emb_sum: float = 0.0
    n_inv: int = 0
    finished: bool = False

    def extend(self, w: int, logprob: float, bias: float, ctx: SourceContext) -> "Hypothesis":
        return Hypothesis(
            tokens=self.tokens + (w,),
            loglik=self.loglik + logprob,
            bias=self.bias + bias,
            topic_num=self.topic_num + ctx.topic_contrib(w),
            topic_Z=self.topic_Z + float(ctx.content_all[w]),
            emb_sum=self.emb_sum + ctx.emb_contrib(w),
            n_inv=self.n_inv + int(ctx.in_vocab[w]),
        )

    def finish(self, eos_logprob: float) -> "Hypothesis":
        return replace(self, loglik=self.loglik + eos_logprob, finished=True)


def topic_term(hyp: Hypothesis, ctx: SourceContext, config: DecoderConfig) -> float:
    if len(hyp.tokens) < config.constraint_start_step or not ctx.topic_enabled:
        return 0.0
    if hyp.topic_Z < topic_service.DEGENERATE_Z:
        return 0.0
    return hyp.topic_num / hyp.topic_Z


def semantic_term(hyp: Hypothesis, ctx: SourceContext, config: DecoderConfig) -> float:
    if len(hyp.tokens) < config.constraint_start_step:
        return 0.0
    return hyp.emb_sum / max(1, hyp.n_inv)


def combine(loglik: float, bias: float, T: float, S: float, alpha: float, beta: float) -> float:
    return loglik + bias + alpha * T + beta * S


def score(hyp: Hypothesis, ctx: SourceContext, config: DecoderConfig) -> float:
    """loglik + bias + alpha * T + beta * S"""
    return combine(hyp.loglik, hyp.bias, topic_term(hyp, ctx, config), semantic_term(hyp, ctx, config),
                   config.alpha, config.beta)


@dataclass
class Candidate:
    ids: Tuple[int, ...]
    tokens: Tuple[str, ...]
    loglik: float
    topic_score: float
    semantic_score: float
    bias: float
    total: float
    finished: bool
    reverse_score: Optional[float] = None
    rerank_score: Optional[float] = None


@dataclass
class DecodeResult:
    source: Tuple[str, ...]
    candidates: List[Candidate] = field(default_factory=list)
    flagged: bool = False


def _to_candidate(hyp: Hypothesis, ctx: SourceContext, config: DecoderConfig) -> Candidate:
    T = topic_term(hyp, ctx, config)
    S = semantic_term(hyp, ctx, config)
    return Candidate(
        ids=hyp.tokens,
        tokens=tuple(ctx.vocab.decode(hyp.tokens)),
        loglik=hyp.loglik,
        topic_score=T,
        semantic_score=S,
        bias=hyp.bias,
        total=combine(hyp.loglik, hyp.bias, T, S, config.alpha, config.beta),
        finished=hyp.finished,
    )


def _ranked(hyps: List[Hypothesis], ctx: SourceContext, config: DecoderConfig) -> List[Candidate]:
    candidates = [_to_candidate(h, ctx, config) for h in hyps]
    return sorted(candidates, key=lambda c: (-c.total, c.ids))


def _expansion_scores(hyp: Hypothesis, logprobs: np.ndarray, bias_vec: np.ndarray, ctx: SourceContext,
                      config: DecoderConfig, can_extend: bool, can_finish: bool) -> np.ndarray:
    """Scores of every one-token expansion of hyp; the `</s>` column scores the finished hypothesis."""
    new_len = len(hyp.tokens) + 1
    scores = np.full(len(logprobs), -np.inf)
    if can_extend:
        loglik = hyp.loglik + logprobs
        bias = hyp.bias + bias_vec
        gated = new_len >= config.constraint_start_step
        if gated and ctx.topic_enabled:
            topic_Z = hyp.topic_Z + ctx.content_all
            topic_num = hyp.topic_num + ctx.topic_contrib_all
            T = np.divide(topic_num, topic_Z, out=np.zeros_like(topic_num), where=topic_Z >= topic_service.DEGENERATE_Z)
        else:
            T = np.zeros(len(logprobs))
        if gated:
            S = (hyp.emb_sum + ctx.emb_contrib_all) / np.maximum(1, hyp.n_inv + ctx.in_vocab)
        else:
            S = np.zeros(len(logprobs))
        scores = loglik + bias + config.alpha * T + config.beta * S
        scores[list(_NEVER_EXPANDED)] = -np.inf
        scores[~np.isfinite(loglik)] = -np.inf
    if can_finish and np.isfinite(logprobs[EOS_ID]):
        scores[EOS_ID] = score(hyp.finish(float(logprobs[EOS_ID])), ctx, config)
    return scores


def beam_search(lm: ConditionalLm, ctx: SourceContext, config: DecoderConfig) -> DecodeResult:
    """
    Left-to-right beam search on loglik + alpha * T + beta * S.

    Each step scores every one-token expansion of every live hypothesis,
    keeps the best beam_size of them, and sets finished ones aside. Equal
    scores are ordered by token ids. Search stops once beam_size hypotheses
    have finished or max_len tokens have been generated.
    """
    V = len(ctx.vocab)
    bias_vec = np.zeros(V)
    if config.ta_bias is not None and ctx.bias_ids.size:
        bias_vec[ctx.bias_ids] = config.ta_bias

    live: List[Hypothesis] = [Hypothesis()]
    last_live = live
    finished: List[Hypothesis] = []
    for step in range(config.max_len + 1):
        if not live:
            break
        live.sort(key=lambda h: h.tokens)
        can_extend = step < config.max_len
        can_finish = step >= config.min_len
        logprobs = [lm.next_logprobs(ctx.source, h.tokens) for h in live]
        matrix = np.vstack([
            _expansion_scores(h, lp, bias_vec, ctx, config, can_extend, can_finish)
            for h, lp in zip(live, logprobs)
        ])
        flat = matrix.ravel()
        keep = np.flatnonzero(np.isfinite(flat))
        k = min(config.beam_size, keep.size)
        if k == 0:
            break
        values = flat[keep]
        if keep.size > k:
            kth = np.partition(values, keep.size - k)[keep.size - k]
            ties = values >= kth
            keep, values = keep[ties], values[ties]
        selected = keep[np.lexsort((keep, -values))][:k]

        next_live = []
        for idx in selected:
            row, w = divmod(int(idx), V)
            parent, lp = live[row], logprobs[row]
            if w == EOS_ID:
                finished.append(parent.finish(float(lp[EOS_ID])))
            else:
                next_live.append(parent.extend(w, float(lp[w]), float(bias_vec[w]), ctx))
        last_live = live
        live = next_live
        if len(finished) >= config.beam_size:
            break

    if finished:
        return DecodeResult(ctx.tokens, _ranked(finished, ctx, config), flagged=False)
    leftovers = live or last_live
    logger.warning(f"No hypothesis finished within max_len={config.max_len}; returning the best unfinished one")
    ranked = _ranked(leftovers, ctx, config)
    return DecodeResult(ctx.tokens, ranked[:1], flagged=True)


def mmi_rerank(candidates: Sequence[Candidate], reverse_lm: ConditionalLm, source: Sequence[int],
               config: DecoderConfig) -> List[Candidate]:
    """
    Adds mmi_lambda * log P(X|Y) from the reverse model to the forward
    constrained score (or uses it alone when keep_forward_score is off) and
    stable-sorts descending.
    """
    if not candidates:
        raise ValueError("mmi_rerank needs at least one candidate")
    reranked = []
    for cand in candidates:
        reverse = sequence_logprob(reverse_lm, cand.ids, source) if config.mmi_lambda else 0.0
        forward = combine(cand.loglik, cand.bias, cand.topic_score, cand.semantic_score, config.alpha, config.beta)
        key = (forward if config.keep_forward_score else 0.0) + config.mmi_lambda * reverse
        reranked.append(replace(cand, reverse_score=reverse, rerank_score=key))
    return sorted(reranked, key=lambda c: -c.rerank_score)


def diagnose_split(lm: ConditionalLm, ctx: SourceContext, prefix: Sequence[str], stop_list: frozenset,
                   topic_list: Sequence[str]):
    """
    Next-token log-probabilities after prefix, split into stop-list words and
    topic-list words, each sorted descending. A word on both lists counts as a stop-word.
    """
    vocab = ctx.vocab
    logprobs = lm.next_logprobs(ctx.source, vocab.encode(prefix))

    def table(words):
        ids = sorted({vocab.id(w) for w in words if w in vocab})
        rows = [(vocab.token(i), float(logprobs[i])) for i in ids]
        return sorted(rows, key=lambda r: (-r[1], vocab.id(r[0])))

    stop_table = table(stop_list)
    topic_table = table([w for w in topic_list if w not in stop_list])
    return stop_table, topic_table


@dataclass
class Decoder:
    """Shared, read-only models for decoding many inputs."""
    vocab: Vocabulary
    stats: WordTopicStats
    sif: SifModel
    forward_lm: ConditionalLm
    reverse_lm: Optional[ConditionalLm] = None
    topic_model: Optional[HmmLdaModel] = None
    stop_words: frozenset = frozenset()

    def context(self, source: Sequence[str], config: DecoderConfig) -> SourceContext:
        return build_context(source, self.stats, self.sif, config, self.vocab, self.topic_model, self.stop_words)

    def decode(self, source: Sequence[str], config: DecoderConfig, lm: Optional[ConditionalLm] = None) -> DecodeResult:
        ctx = self.context(source, config)
        result = beam_search(lm or self.forward_lm, ctx, config)
        if config.mmi_lambda and self.reverse_lm is not None and result.candidates:
            result.candidates = mmi_rerank(result.candidates, self.reverse_lm, ctx.source, config)
        return result

    def decode_many(self, sources: Sequence[Sequence[str]], config: DecoderConfig, jobs: int = 1,
                    lms: Optional[Sequence[Optional[ConditionalLm]]] = None) -> List[DecodeResult]:
        """Decodes inputs concurrently; results keep input order."""
        lms = list(lms) if lms is not None else [None] * len(sources)
        if jobs <= 1:
            return [self.decode(s, config, lm) for s, lm in zip(sources, lms)]
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(lambda args: self.decode(args[0], config, args[1]), zip(sources, lms)))
