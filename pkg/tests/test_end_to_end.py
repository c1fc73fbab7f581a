import pytest

from app.artifacts.models.hmm_lda import HmmLdaConfig
from app.artifacts.models.sif_model import WordVectors
from app.services import corpus_service, lm_service, metrics_service, sif_service, topic_service
from app.services.corpus_service import BucketSpec
from app.services.decoder_service import Decoder, DecoderConfig, apply_system
from app.services.lm_service import LmConfig
from tests.conftest import make_pairs


@pytest.mark.slow
def test_constraints_reduce_generic_responses():
    """
    Models trained on 20k synthetic pairs, 300 length-bucketed prompts. The
    constrained systems use fewer stop-words and more distinct words than
    their unconstrained counterparts, with and without reranking.
    """
    train = make_pairs(20_000, seed=1, topical=0.35)
    vocab = corpus_service.build_vocab(train, min_count=1)
    _, stats = topic_service.train(HmmLdaConfig(K=10, C=5, burn_in=500, average_last=20, seed=3),
                                   corpus_service.conversations(train), vocab)
    words = [vocab.token(i) for i in vocab.word_ids]
    vectors = WordVectors.random(words, d=16, seed=4)
    sentences = [list(p.source) for p in train] + [list(p.target) for p in train]
    sif = sif_service.fit(vectors, {w: vocab.prob(w) for w in words}, sentences, a=1e-3)
    lm_config = LmConfig(order=3, lambda_lm=0.8, em_iterations=5)
    decoder = Decoder(
        vocab=vocab,
        stats=stats,
        sif=sif,
        forward_lm=lm_service.train_pair_models(train, vocab, lm_config),
        reverse_lm=lm_service.train_pair_models(train, vocab, lm_config, reverse=True),
    )

    held_out = make_pairs(2_000, seed=2, topical=0.5)
    buckets = corpus_service.bucket_split(held_out, BucketSpec.parse("b1:4-5,b2:6-8"), per_bucket=150, seed=5)
    prompts = [pair for bucket in buckets.values() for pair in bucket]
    assert len(prompts) == 300

    base = DecoderConfig(beam_size=5, alpha=5.0, beta=2.0, max_len=10, min_len=3)
    stop_list = corpus_service.read_stop_words()
    sources = [p.source for p in prompts]
    references = [p.target for p in prompts]
    reports = {}
    for system in ("vanilla", "dc", "mmi", "dc-mmi"):
        results = decoder.decode_many(sources, apply_system(base, system), jobs=4)
        responses = [r.candidates[0].tokens for r in results]
        reports[system] = metrics_service.evaluate(responses, references, stop_list)

    for unconstrained, constrained in (("vanilla", "dc"), ("mmi", "dc-mmi")):
        assert reports[constrained].stopword_pct < reports[unconstrained].stopword_pct
        assert reports[constrained].distinct1[1] > reports[unconstrained].distinct1[1]
