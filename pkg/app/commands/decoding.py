import logging
import os
from dataclasses import replace
from typing import Callable, List, Optional

import click

from app.artifacts.config import Config
from app.commands.common import (
    CliState,
    handle_errors,
    load_decoder,
    load_lm,
    load_pairs,
    load_vocab,
    open_output,
    pass_state,
    read_decode_records,
)
from app.schemas.decode_schema import decode_record_schema
from app.services import corpus_service, topic_service
from app.services.decoder_service import SYSTEMS, Candidate, Decoder, DecoderConfig, apply_system, diagnose_split, mmi_rerank
from app.services.lm_service import GridLm
from app.utils.response import success_response, to_json

logger = logging.getLogger(__name__)


def decoder_options(fn: Callable) -> Callable:
    """Flags shared by every command that decodes; unset flags keep the run-config value."""
    options = [
        click.option("--system", type=click.Choice(SYSTEMS), default="dc", show_default=True, help="Compared system preset."),
        click.option("--beam", "beam_size", type=int, default=None, help="Beam size B."),
        click.option("--alpha", type=float, default=None, help="Topic-constraint weight."),
        click.option("--beta", type=float, default=None, help="Semantic-constraint weight."),
        click.option("--max-len", type=int, default=None),
        click.option("--min-len", type=int, default=None),
        click.option("--constraint-start-step", type=int, default=None, help="First response length the constraints apply to."),
        click.option("--ta-bias", type=float, default=None, help="Log-probability bonus for source topic words (system 'ta')."),
        click.option("--ta-words", type=int, default=None, help="Size of the topic-word set that receives the bonus."),
        click.option("--mmi-lambda", type=float, default=None, help="Weight of the reverse model in reranking."),
        click.option("--forward-score/--no-forward-score", "keep_forward_score", default=None,
                     help="Keep the forward constrained score in the rerank key."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


def decoder_overrides(beam_size, alpha, beta, max_len, min_len, constraint_start_step, ta_bias, ta_words,
                      mmi_lambda, keep_forward_score) -> dict:
    return {
        "beam_size": beam_size,
        "alpha": alpha,
        "beta": beta,
        "max_len": max_len,
        "min_len": min_len,
        "constraint_start_step": constraint_start_step,
        "ta_bias": ta_bias,
        "ta_words": ta_words,
        "mmi_lambda": mmi_lambda,
        "keep_forward_score": keep_forward_score,
    }


def load_grid_lms(grid_dir: Optional[str], count: int) -> Optional[List[GridLm]]:
    """One `<index>.grid` file per input line, numbered from 0."""
    if not grid_dir:
        return None
    return [GridLm.load(os.path.join(grid_dir, f"{i}.grid")) for i in range(count)]


def decode_record(result, reference, system: str) -> dict:
    return decode_record_schema.dump({
        "source": list(result.source),
        "reference": list(reference) if reference is not None else None,
        "system": system,
        "flagged": result.flagged,
        "candidates": result.candidates,
    })


@click.command("decode")
@click.option("--pairs", type=str, default=None, help="Prompts file (source<TAB>reference); defaults to [paths] test_pairs.")
@click.option("--raw/--pre-tokenized", default=None, help="Tokenize raw text instead of splitting on spaces.")
@decoder_options
@click.option("--jobs", type=int, default=None, help="Inputs decoded in parallel.")
@click.option("--grid-dir", type=str, default=None, help="Directory of per-input log-probability grids replacing the trained model.")
@click.option("--limit", type=int, default=None, help="Decode only the first N prompts.")
@click.option("--output", "-o", type=str, default=None, help="Output file (default: standard output).")
@pass_state
@handle_errors("decode")
def decode_command(state: CliState, pairs, raw, system, jobs, grid_dir, limit, output, **decoder_flags):
    """Generate responses, one JSON record per prompt."""
    config = state.config({"paths": {"test_pairs": pairs}, "corpus": {"raw": raw}, "decoder": decoder_overrides(**decoder_flags)})
    decoder_config = apply_system(config.decoder, system)
    prompts = load_pairs(config.paths.test_pairs or config.paths.pairs, config.corpus.raw)
    if limit is not None:
        prompts = prompts[:limit]
    decoder = load_decoder(state, config, with_reverse=decoder_config.mmi_lambda > 0)
    lms = load_grid_lms(grid_dir, len(prompts))
    jobs = jobs or Config.JOBS
    logger.info(f"Decoding {len(prompts)} prompts with system '{system}' (B={decoder_config.beam_size}, "
                f"alpha={decoder_config.alpha}, beta={decoder_config.beta}, jobs={jobs})")
    results = decoder.decode_many([p.source for p in prompts], decoder_config, jobs=jobs, lms=lms)
    flagged = 0
    with open_output(output) as out:
        for prompt, result in zip(prompts, results):
            flagged += result.flagged
            out.write(to_json(decode_record(result, prompt.target, system)) + "\n")
    if flagged:
        logger.warning(f"{flagged} prompts produced no finished response")
    logger.info(f"Decoded {len(results)} prompts")


@click.command("rerank")
@click.option("--input", "-i", "input_path", type=str, required=True, help="Decode output to rerank.")
@click.option("--alpha", type=float, default=None)
@click.option("--beta", type=float, default=None)
@click.option("--mmi-lambda", type=float, default=None, help="Weight of log P(X|Y); when unset, a run-config value of 0 means 1.0 here.")
@click.option("--forward-score/--no-forward-score", "keep_forward_score", default=None)
@click.option("--output", "-o", type=str, default=None)
@pass_state
@handle_errors("rerank")
def rerank_command(state: CliState, input_path, alpha, beta, mmi_lambda, keep_forward_score, output):
    """Rerank decoded candidates with the reverse model P(X|Y)."""
    config = state.config({"decoder": {"alpha": alpha, "beta": beta, "mmi_lambda": mmi_lambda,
                                       "keep_forward_score": keep_forward_score}})
    # An explicit --mmi-lambda is kept as given, 0 included
    weight = mmi_lambda if mmi_lambda is not None else (config.decoder.mmi_lambda or 1.0)
    decoder_config = replace(config.decoder, mmi_lambda=weight)
    records = read_decode_records(input_path)
    vocab = load_vocab(state)
    reverse_lm = load_lm(state, config, "reverse")
    with open_output(output) as out:
        for record in records:
            candidates: List[Candidate] = [replace(c, ids=tuple(vocab.encode(c.tokens))) for c in record["candidates"]]
            if candidates:
                candidates = mmi_rerank(candidates, reverse_lm, vocab.encode(record["source"]), decoder_config)
            record["candidates"] = candidates
            out.write(to_json(decode_record_schema.dump(record)) + "\n")
    logger.info(f"Reranked {len(records)} records (mmi_lambda={decoder_config.mmi_lambda})")


@click.command("diagnose")
@click.option("--source", type=str, required=True, help="Source utterance.")
@click.option("--prefix", type=str, default="", help="Response prefix to condition on.")
@click.option("--per-topic", type=int, default=None, help="Top words taken from each topic for the topic list.")
@click.option("--top", type=int, default=20, show_default=True, help="Rows shown per table.")
@pass_state
@handle_errors("decode")
def diagnose_command(state: CliState, source, prefix, per_topic, top):
    """Compare next-token log-probabilities of stop-words and topic words."""
    config = state.config({"eval": {"topic_words_per_topic": per_topic}})
    decoder = load_decoder(state, config)
    ctx = decoder.context(corpus_service.tokenize(source), config.decoder)
    topic_list = topic_service.topic_word_list(decoder.topic_model, decoder.vocab, config.eval.topic_words_per_topic)
    stop_table, topic_table = diagnose_split(decoder.forward_lm, ctx, corpus_service.tokenize(prefix),
                                             decoder.stop_words, topic_list)
    result = {
        "stop": [{"word": w, "logprob": lp} for w, lp in stop_table[:top]],
        "topic": [{"word": w, "logprob": lp} for w, lp in topic_table[:top]],
    }
    return success_response(result, message="Next-token diagnostic.", meta={"source": source, "prefix": prefix})


def describe(candidate: Candidate) -> str:
    parts = [
        f"loglik={candidate.loglik:.3f}",
        f"topic={candidate.topic_score:.3f}",
        f"semantic={candidate.semantic_score:.3f}",
    ]
    if candidate.bias:
        parts.append(f"bias={candidate.bias:.3f}")
    if candidate.reverse_score is not None:
        parts.append(f"reverse={candidate.reverse_score:.3f}")
    parts.append(f"total={candidate.total:.3f}")
    return "  ".join(parts)


def respond(decoder: Decoder, config: DecoderConfig, line: str) -> Optional[Candidate]:
    tokens = corpus_service.tokenize(line)
    if not tokens:
        return None
    result = decoder.decode(tokens, config)
    return result.candidates[0] if result.candidates else None


@click.command("repl")
@decoder_options
@pass_state
@handle_errors("decode")
def repl_command(state: CliState, system, **decoder_flags):
    """Read utterances from standard input and print the top response for each."""
    config = state.config({"decoder": decoder_overrides(**decoder_flags)})
    decoder_config = apply_system(config.decoder, system)
    decoder = load_decoder(state, config, with_reverse=decoder_config.mmi_lambda > 0)
    stdin = click.get_text_stream("stdin")
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        candidate = respond(decoder, decoder_config, line)
        if candidate is None:
            click.echo("(no response)")
            continue
        click.echo(" ".join(candidate.tokens))
        click.echo(f"  {describe(candidate)}")
