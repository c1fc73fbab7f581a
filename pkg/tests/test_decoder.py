import itertools
import math

import numpy as np
import pytest

from app.artifacts.models.hmm_lda import HmmLdaConfig, HmmLdaModel, WordTopicStats
from app.artifacts.models.sif_model import SifModel, WordVectors
from app.artifacts.models.vocabulary import BOS_ID, EOS_ID, NULL_ID, RESERVED, UNK_ID, Vocabulary
from app.services import sif_service, topic_service
from app.services.decoder_service import (
    Decoder,
    DecoderConfig,
    Hypothesis,
    apply_system,
    beam_search,
    build_context,
    score,
    semantic_term,
    topic_term,
)
from tests.conftest import FixedLm

NEVER_EXPANDED = {UNK_ID, BOS_ID, NULL_ID, EOS_ID}


def context_for(models, source, config, **kwargs):
    return build_context(source, models.stats, models.sif, config, models.vocab, **kwargs)


def reference_beam(lm, source, V, beam_size, min_len, max_len):
    """Plain likelihood beam search written independently of the decoder."""
    live = [((), 0.0)]
    finished = []
    for step in range(max_len + 1):
        if not live:
            break
        expansions = []
        for tokens, loglik in sorted(live):
            logprobs = lm.next_logprobs(source, tokens)
            if step >= min_len:
                expansions.append((loglik + logprobs[EOS_ID], tokens, EOS_ID))
            if step < max_len:
                for w in range(V):
                    if w not in NEVER_EXPANDED:
                        expansions.append((loglik + logprobs[w], tokens, w))
        expansions.sort(key=lambda e: (-e[0], e[1], e[2]))
        live = []
        for value, tokens, w in expansions[:beam_size]:
            if w == EOS_ID:
                finished.append((tokens, value))
            else:
                live.append((tokens + (w,), value))
        if len(finished) >= beam_size:
            break
    return sorted(finished, key=lambda f: (-f[1], f[0]))


def batch_terms(models, ctx, config, tokens):
    """Topic and semantic terms recomputed from scratch for a token-id sequence."""
    words = models.vocab.decode(tokens)
    if len(tokens) < config.constraint_start_step:
        return 0.0, 0.0
    topics = topic_service.sentence_topic_dist(models.stats, words)
    T = 0.0 if topics.degenerate or not ctx.topic_enabled else float(topics.dist @ ctx.tX)
    S = float(ctx.q @ sif_service.raw_embed(models.sif, words))
    return T, S


def sequence_loglik(lm, source, tokens):
    total = 0.0
    for i, w in enumerate(tokens):
        total += lm.next_logprobs(source, tokens[:i])[w]
    return total + lm.next_logprobs(source, tokens)[EOS_ID]


def test_config_validation():
    with pytest.raises(ValueError):
        DecoderConfig(beam_size=0)
    with pytest.raises(ValueError):
        DecoderConfig(min_len=5, max_len=4)
    with pytest.raises(ValueError):
        DecoderConfig(alpha=-1.0)
    with pytest.raises(ValueError):
        DecoderConfig(constraint_start_step=0)


def test_system_presets():
    config = DecoderConfig(alpha=3.0, beta=1.0, mmi_lambda=0.0)
    assert apply_system(config, "vanilla").alpha == 0.0
    assert apply_system(config, "mmi").mmi_lambda == 1.0
    assert apply_system(config, "ta").ta_bias == 1.0
    dc = apply_system(config, "dc")
    assert (dc.alpha, dc.beta, dc.mmi_lambda, dc.ta_bias) == (3.0, 1.0, 0.0, None)
    with pytest.raises(ValueError):
        apply_system(config, "greedy")


def test_context_caches_match_direct_computation(make_models):
    models = make_models(seed=2, function_words=["w0"])
    ctx = context_for(models, ["w3", "w5", "w0"], DecoderConfig())
    topics = topic_service.sentence_topic_dist(models.stats, ["w3", "w5", "w0"])
    np.testing.assert_allclose(ctx.tX, topics.dist)
    for word in models.words:
        w = models.vocab.id(word)
        dist, content = models.stats.lookup(word)
        assert ctx.topic_contrib(w) == pytest.approx(content * float(ctx.tX @ dist), abs=1e-12)
        expected = float(ctx.q @ (models.sif.weight(word) * models.sif.vectors.get(word)))
        assert ctx.emb_contrib(w) == pytest.approx(expected, abs=1e-12)


def test_one_word_source_topic_contribution(make_models):
    models = make_models(seed=4)
    ctx = context_for(models, ["w2"], DecoderConfig())
    dist, content = models.stats.lookup("w2")
    np.testing.assert_allclose(ctx.tX, dist)
    assert ctx.topic_contrib(models.vocab.id("w2")) == pytest.approx(content * float(dist @ dist))


def test_function_word_source_disables_topic_constraint_only(make_models):
    models = make_models(seed=1, function_words=["w0", "w1"])
    ctx = context_for(models, ["w0", "w1"], DecoderConfig())
    assert not ctx.topic_enabled
    assert np.linalg.norm(ctx.q) > 0
    hyp = Hypothesis()
    for w in (models.vocab.id("w3"), models.vocab.id("w4")):
        hyp = hyp.extend(w, -1.0, 0.0, ctx)
    config = DecoderConfig(constraint_start_step=1)
    assert topic_term(hyp, ctx, config) == 0.0
    assert semantic_term(hyp, ctx, config) != 0.0


def test_incremental_terms_match_batch_recomputation(make_models):
    rng = np.random.default_rng(0)
    for trial in range(20):
        models = make_models(seed=trial, function_words=["w0", "w1"], oov=["w1", "w2"])
        config = DecoderConfig(constraint_start_step=int(rng.integers(1, 3)))
        source = [models.words[i] for i in rng.integers(0, len(models.words), size=int(rng.integers(1, 6)))]
        ctx = context_for(models, source, config)
        word_ids = list(models.vocab.word_ids)
        for _ in range(50):
            hyp = Hypothesis()
            for w in rng.choice(word_ids, size=int(rng.integers(1, 7))):
                hyp = hyp.extend(int(w), -0.5, 0.0, ctx)
            T, S = batch_terms(models, ctx, config, hyp.tokens)
            assert topic_term(hyp, ctx, config) == pytest.approx(T, rel=1e-9, abs=1e-12)
            assert semantic_term(hyp, ctx, config) == pytest.approx(S, rel=1e-9, abs=1e-12)


def test_score_without_weights_is_loglik(make_models):
    models = make_models(seed=3)
    config = DecoderConfig(alpha=0.0, beta=0.0, constraint_start_step=1)
    ctx = context_for(models, ["w1", "w2"], config)
    hyp = Hypothesis().extend(5, -1.25, 0.0, ctx).extend(6, -0.5, 0.0, ctx)
    assert score(hyp, ctx, config) == hyp.loglik


def test_score_of_function_words_only_is_loglik(make_models):
    models = make_models(seed=3, function_words=["w0", "w1"], oov=["w0", "w1"])
    config = DecoderConfig(alpha=5.0, beta=2.0, constraint_start_step=1)
    ctx = context_for(models, ["w4", "w5"], config)
    hyp = Hypothesis().extend(models.vocab.id("w0"), -0.7, 0.0, ctx).extend(models.vocab.id("w1"), -0.2, 0.0, ctx)
    assert score(hyp, ctx, config) == hyp.loglik


def test_score_decomposition_hand_example():
    vocab = Vocabulary(list(RESERVED) + ["x", "y"], [0, 0, 0, 0, 1, 1])
    dists = np.full((6, 2), 0.5)
    dists[4], dists[5] = [0.8, 0.2], [0.4, 0.6]
    content = np.array([0.0, 0.0, 0.0, 0.0, 0.5, 1.0])
    stats = WordTopicStats(vocab.tokens, dists, content)
    vectors = WordVectors(["x", "y"], np.array([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]))
    sif = SifModel(vectors, {"x": 0.5, "y": 0.5}, 0.5, np.array([0.0, 0.0, 1.0]))
    config = DecoderConfig(alpha=2.0, beta=4.0, constraint_start_step=1)
    ctx = build_context(["x"], stats, sif, config, vocab)
    hyp = Hypothesis().extend(4, -1.0, 0.0, ctx).extend(5, -2.0, 0.0, ctx)
    # T = (0.5 * 0.68 + 1.0 * 0.44) / 1.5 and S = [0.5, 0, 0] . [0.25, 0.25, 0] / 2
    assert topic_term(hyp, ctx, config) == pytest.approx(0.52)
    assert semantic_term(hyp, ctx, config) == pytest.approx(0.125)
    assert score(hyp, ctx, config) == pytest.approx(-3.0 + 2.0 * 0.52 + 4.0 * 0.125)


def test_constraints_wait_for_start_step(make_models):
    models = make_models(seed=5)
    config = DecoderConfig(alpha=5.0, beta=5.0, constraint_start_step=2)
    ctx = context_for(models, ["w1", "w4"], config)
    hyp = Hypothesis().extend(models.vocab.id("w4"), -1.0, 0.0, ctx)
    assert score(hyp, ctx, config) == hyp.loglik
    longer = hyp.extend(models.vocab.id("w1"), -1.0, 0.0, ctx)
    assert score(longer, ctx, config) != longer.loglik


def test_unconstrained_search_matches_likelihood_beam(make_models):
    rng = np.random.default_rng(1)
    for trial in range(100):
        models = make_models(seed=100 + trial, n_words=6)
        config = DecoderConfig(beam_size=int(rng.integers(1, 5)), alpha=0.0, beta=0.0,
                               max_len=int(rng.integers(2, 6)), min_len=1)
        source = [models.words[i] for i in rng.integers(0, 6, size=3)]
        ctx = context_for(models, source, config)
        result = beam_search(models.lm, ctx, config)
        expected = reference_beam(models.lm, ctx.source, len(models.vocab), config.beam_size, config.min_len, config.max_len)
        assert [c.ids for c in result.candidates] == [tokens for tokens, _ in expected]
        for candidate, (_, value) in zip(result.candidates, expected):
            assert candidate.total == value
            assert candidate.loglik == value


def test_beam_of_one_is_greedy(make_models):
    models = make_models(seed=9)
    config = DecoderConfig(beam_size=1, alpha=0.0, beta=0.0, max_len=6, min_len=2)
    ctx = context_for(models, ["w1"], config)
    tokens = ()
    while True:
        logprobs = models.lm.next_logprobs(ctx.source, tokens).copy()
        logprobs[[UNK_ID, BOS_ID, NULL_ID]] = -np.inf
        if len(tokens) < config.min_len:
            logprobs[EOS_ID] = -np.inf
        if len(tokens) == config.max_len:
            logprobs[[w for w in range(len(logprobs)) if w != EOS_ID]] = -np.inf
        w = int(np.argmax(logprobs))
        if w == EOS_ID:
            break
        tokens += (w,)
    result = beam_search(models.lm, ctx, config)
    assert len(result.candidates) == 1
    assert result.candidates[0].ids == tokens


def test_saturated_beam_equals_exhaustive_search(make_models):
    rng = np.random.default_rng(2)
    for trial in range(50):
        models = make_models(seed=500 + trial, n_words=3, K=2, d=4, function_words=["w0"])
        config = DecoderConfig(beam_size=64, alpha=float(rng.uniform(0, 5)), beta=float(rng.uniform(0, 5)),
                               max_len=3, min_len=1, constraint_start_step=int(rng.integers(1, 3)))
        source = [models.words[i] for i in rng.integers(0, 3, size=2)]
        ctx = context_for(models, source, config)
        word_ids = list(models.vocab.word_ids)
        enumerated = []
        for length in range(config.min_len, config.max_len + 1):
            for tokens in itertools.product(word_ids, repeat=length):
                T, S = batch_terms(models, ctx, config, tokens)
                loglik = sequence_loglik(models.lm, ctx.source, tokens)
                enumerated.append((tokens, loglik + config.alpha * T + config.beta * S))
        enumerated.sort(key=lambda e: (-e[1], e[0]))

        result = beam_search(models.lm, ctx, config)
        assert [c.ids for c in result.candidates] == [tokens for tokens, _ in enumerated]
        for candidate, (_, value) in zip(result.candidates, enumerated):
            assert candidate.total == pytest.approx(value, rel=1e-9, abs=1e-12)


def jacket_setup():
    vocab = Vocabulary(list(RESERVED) + ["the", "jacket"], [0, 0, 0, 0, 5, 1])
    dists = np.full((6, 2), 0.5)
    dists[5] = [0.99, 0.01]
    content = np.array([0.0, 0.0, 0.0, 0.0, 0.0, 1.0])
    stats = WordTopicStats(vocab.tokens, dists, content)
    vectors = WordVectors(["the", "jacket"], np.array([[1.0, 0.0], [0.0, 1.0]]))
    sif = SifModel(vectors, {"the": 5 / 6, "jacket": 1 / 6}, 1e-3, np.array([1.0, 0.0]))
    lm = FixedLm([0.0, 0.0, 0.3, 0.0, 0.6, 0.1])
    return vocab, stats, sif, lm


def test_topic_weight_promotes_topic_words_over_likelier_function_words():
    vocab, stats, sif, lm = jacket_setup()
    plain = DecoderConfig(beam_size=10, alpha=0.0, beta=0.0, max_len=2, min_len=1, constraint_start_step=1)
    top = beam_search(lm, build_context(["jacket"], stats, sif, plain, vocab), plain).candidates[0]
    assert top.tokens == ("the",)

    topical = DecoderConfig(beam_size=10, alpha=10.0, beta=0.0, max_len=2, min_len=1, constraint_start_step=1)
    best = beam_search(lm, build_context(["jacket"], stats, sif, topical, vocab), topical).candidates[0]
    assert best.tokens == ("jacket",)
    assert best.loglik < top.loglik
    assert best.topic_score == pytest.approx(0.99 ** 2 + 0.01 ** 2)


def test_topic_bias_is_kept_out_of_loglik():
    vocab, stats, sif, lm = jacket_setup()
    config = DecoderConfig(beam_size=10, alpha=0.0, beta=0.0, max_len=2, min_len=1, ta_bias=2.0, ta_words=1)
    n_zw = np.zeros((2, 6), dtype=np.int64)
    n_zw[0, 4], n_zw[0, 5] = 20, 10
    topic_model = HmmLdaModel(HmmLdaConfig(K=2, C=2, burn_in=1), 6, np.zeros((1, 2), dtype=np.int64), n_zw,
                              np.zeros((2, 6), dtype=np.int64), np.zeros((3, 3), dtype=np.int64))
    ctx = build_context(["jacket"], stats, sif, config, vocab, topic_model, frozenset({"the"}))
    assert ctx.bias_words == ("jacket",)
    best = beam_search(lm, ctx, config).candidates[0]
    assert best.tokens == ("jacket",)
    assert best.loglik == pytest.approx(math.log(0.1 * 0.3))
    assert best.bias == 2.0
    assert best.total == pytest.approx(best.loglik + 2.0)


def test_no_finishable_hypothesis_returns_flagged_best_unfinished():
    vocab, stats, sif, _ = jacket_setup()
    lm = FixedLm([0.0, 0.0, 0.0, 0.0, 0.6, 0.4])
    config = DecoderConfig(beam_size=3, alpha=0.0, beta=0.0, max_len=2, min_len=1)
    result = beam_search(lm, build_context(["jacket"], stats, sif, config, vocab), config)
    assert result.flagged
    assert len(result.candidates) == 1
    assert not result.candidates[0].finished
    assert result.candidates[0].tokens == ("the", "the")


def test_eos_not_allowed_before_min_len(make_models):
    models = make_models(seed=12)
    config = DecoderConfig(beam_size=5, alpha=1.0, beta=1.0, max_len=6, min_len=3)
    result = beam_search(models.lm, context_for(models, ["w2", "w3"], config), config)
    assert all(3 <= len(c.ids) <= 6 for c in result.candidates)
    assert all(c.finished for c in result.candidates)
    assert len(result.candidates) <= config.beam_size + len(models.vocab)


def test_search_is_deterministic(make_models):
    models = make_models(seed=13)
    config = DecoderConfig(beam_size=4, max_len=5, min_len=1)
    ctx = context_for(models, ["w1", "w6"], config)
    assert beam_search(models.lm, ctx, config) == beam_search(models.lm, ctx, config)


def test_decode_many_keeps_input_order(make_models):
    models = make_models(seed=14)
    decoder = Decoder(vocab=models.vocab, stats=models.stats, sif=models.sif, forward_lm=models.lm)
    config = DecoderConfig(beam_size=3, max_len=4, min_len=1)
    sources = [[models.words[i], models.words[(i + 3) % 8]] for i in range(8)]
    sequential = decoder.decode_many(sources, config, jobs=1)
    parallel = decoder.decode_many(sources, config, jobs=4)
    assert parallel == sequential
    assert [r.source for r in parallel] == [tuple(s) for s in sources]
