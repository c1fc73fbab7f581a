import logging

import click

from app.artifacts import ArtifactManager
from app.artifacts.models.sif_model import WordVectors
from app.commands.common import CliState, handle_errors, load_pairs, load_vocab, pass_state
from app.services import corpus_service, lm_service, sif_service, topic_service
from app.services.corpus_service import BucketSpec
from app.utils.helpers import require_file
from app.utils.response import success_response

logger = logging.getLogger(__name__)

pairs_option = click.option("--pairs", type=str, default=None, help="Training pairs file (source<TAB>target per line).")
raw_option = click.option("--raw/--pre-tokenized", default=None, help="Tokenize raw text instead of splitting on spaces.")


@click.command("build-vocab")
@pairs_option
@raw_option
@click.option("--min-count", type=int, default=None, help="Tokens seen fewer times are mapped to <unk>.")
@pass_state
@handle_errors("build_vocab")
def build_vocab_command(state: CliState, pairs, raw, min_count):
    """Build the vocabulary of a pairs file."""
    config = state.config({"paths": {"pairs": pairs}, "corpus": {"raw": raw, "min_count": min_count}})
    data = load_pairs(config.paths.pairs, config.corpus.raw)
    vocab = corpus_service.build_vocab(data, config.corpus.min_count)
    path = vocab.save(state.path("vocab", create=True), force=state.force)
    state.record_config(config)
    return success_response({"V": len(vocab), "total_tokens": vocab.total_tokens}, message="Vocabulary built.", meta={"path": path})


@click.command("split")
@pairs_option
@raw_option
@click.option("--buckets", type=str, default=None, help="Source-length buckets, e.g. 'b1:3-6,b2:7-15,b3:16-25'.")
@click.option("--per-bucket", type=int, default=None, help="Pairs sampled from each bucket.")
@click.option("--seed", type=int, default=None)
@click.option("--output", "-o", type=click.Path(dir_okay=False), required=True, help="Labelled pairs file to write.")
@pass_state
@handle_errors("split")
def split_command(state: CliState, pairs, raw, buckets, per_bucket, seed, output):
    """Sample evaluation prompts bucketed by source length."""
    config = state.config({
        "paths": {"pairs": pairs},
        "corpus": {"raw": raw, "buckets": buckets, "per_bucket": per_bucket, "seed": seed},
    })
    data = load_pairs(config.paths.pairs, config.corpus.raw)
    spec = BucketSpec.parse(config.corpus.buckets)
    sample = corpus_service.bucket_split(data, spec, config.corpus.per_bucket, config.corpus.seed)
    corpus_service.write_pairs(output, sample)
    counts = {name: len(items) for name, items in sample.items()}
    return success_response(counts, message="Prompts sampled.", meta={"path": output})


@click.command("train-hmmlda")
@pairs_option
@raw_option
@click.option("--topics", "-K", "K", type=int, default=None, help="Number of topics.")
@click.option("--classes", "-C", "C", type=int, default=None, help="Number of syntax classes including the topic class.")
@click.option("--alpha-t", type=float, default=None, help="Document-topic prior (default 50/K).")
@click.option("--burn-in", type=int, default=None, help="Number of Gibbs sweeps.")
@click.option("--average-last", type=int, default=None, help="Average word statistics over the last S sweeps.")
@click.option("--seed", type=int, default=None)
@pass_state
@handle_errors("train_hmmlda")
def train_hmmlda_command(state: CliState, pairs, raw, K, C, alpha_t, burn_in, average_last, seed):
    """Train the syntax-topic model; every conversation pair is one document."""
    config = state.config({
        "paths": {"pairs": pairs},
        "corpus": {"raw": raw},
        "hmmlda": {"K": K, "C": C, "alpha_t": alpha_t, "burn_in": burn_in, "average_last": average_last, "seed": seed},
    })
    targets = [state.path("hmmlda", create=True), state.path("word_topic_stats")]
    ArtifactManager.check_writable(targets, state.force)
    vocab = load_vocab(state)
    data = load_pairs(config.paths.pairs, config.corpus.raw)
    model_state, stats = topic_service.train(config.hmmlda, corpus_service.conversations(data), vocab)
    model_path = model_state.model.save(targets[0], force=state.force)
    stats_path = stats.save(targets[1], force=state.force)
    state.record_config(config)
    result = {
        "K": config.hmmlda.K,
        "C": config.hmmlda.C,
        "tokens": len(model_state),
        "log_joint": topic_service.log_joint(model_state.model),
    }
    return success_response(result, message="Syntax-topic model trained.", meta={"model": model_path, "word_stats": stats_path})


@click.command("build-sif")
@pairs_option
@raw_option
@click.option("--vectors", type=str, default=None, help="Word vector file; random vectors are generated when omitted.")
@click.option("--a", "a", type=float, default=None, help="SIF weighting constant.")
@click.option("--dim", type=int, default=None, help="Dimension of generated random vectors.")
@click.option("--seed", type=int, default=None)
@pass_state
@handle_errors("build_sif")
def build_sif_command(state: CliState, pairs, raw, vectors, a, dim, seed):
    """Fit the sentence-embedding common component on the corpus."""
    config = state.config({
        "paths": {"pairs": pairs, "word_vectors": vectors},
        "corpus": {"raw": raw},
        "sif": {"a": a, "dim": dim, "seed": seed},
    })
    generate = not config.paths.word_vectors
    targets = [state.path("sif", create=True)] + ([state.path("word_vectors")] if generate else [])
    ArtifactManager.check_writable(targets, state.force)
    vocab = load_vocab(state)
    data = load_pairs(config.paths.pairs, config.corpus.raw)
    if not generate:
        word_vectors = WordVectors.load(require_file(config.paths.word_vectors))
    else:
        logger.info(f"No word vectors given; generating random {config.sif.dim}-d vectors (seed {config.sif.seed})")
        words = [vocab.token(i) for i in vocab.word_ids]
        word_vectors = WordVectors.random(words, config.sif.dim, config.sif.seed)
        word_vectors.save(targets[1], force=state.force)
    unigram = {w: vocab.prob(w) for w in word_vectors.words if w in vocab}
    sentences = [list(p.source) for p in data] + [list(p.target) for p in data]
    model = sif_service.fit(word_vectors, unigram, sentences, a=config.sif.a, vocab_path=state.path("vocab"))
    path = model.save(targets[0], force=state.force)
    state.record_config(config)
    return success_response({"d": word_vectors.d, "a": config.sif.a, "sentences": len(sentences)}, message="SIF model fitted.", meta={"path": path})


@click.command("train-lm")
@pairs_option
@raw_option
@click.option("--order", type=int, default=None, help="n-gram order.")
@click.option("--discount", type=float, default=None, help="Absolute discount D.")
@click.option("--lambda-lm", type=float, default=None, help="Mixture weight of the n-gram model.")
@click.option("--em-iterations", type=int, default=None, help="IBM Model 1 EM iterations.")
@click.option("--reverse/--no-reverse", default=True, help="Also train the reverse model P(X|Y) used for reranking.")
@pass_state
@handle_errors("train_lm")
def train_lm_command(state: CliState, pairs, raw, order, discount, lambda_lm, em_iterations, reverse):
    """Train the forward (and reverse) n-gram + lexical translation models."""
    config = state.config({
        "paths": {"pairs": pairs},
        "corpus": {"raw": raw},
        "lm": {"order": order, "discount": discount, "lambda_lm": lambda_lm, "em_iterations": em_iterations},
    })
    vocab = load_vocab(state)
    data = load_pairs(config.paths.pairs, config.corpus.raw)
    directions = [("forward", False)] + ([("reverse", True)] if reverse else [])
    ArtifactManager.check_writable(
        [state.path(f"lm_{d}_{part}", create=True) for d, _ in directions for part in ("ngram", "lex")], state.force)
    saved = {}
    for direction, is_reverse in directions:
        lm = lm_service.train_pair_models(data, vocab, config.lm, reverse=is_reverse)
        saved[f"{direction}_ngram"] = lm.ngram.save(state.path(f"lm_{direction}_ngram", create=True), force=state.force)
        saved[f"{direction}_lex"] = lm.channel.save(state.path(f"lm_{direction}_lex"), force=state.force)
    state.record_config(config)
    return success_response({"order": config.lm.order, "directions": [d for d, _ in directions]}, message="Language models trained.", meta=saved)
