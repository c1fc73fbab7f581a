import logging
import os
from dataclasses import replace
from typing import List, Optional, Tuple

import click

from app.artifacts.config import Config
from app.commands.common import (
    CliState,
    handle_errors,
    load_decoder,
    load_pairs,
    load_stop_words,
    pass_state,
    read_decode_records,
)
from app.services import metrics_service, significance_service
from app.services.decoder_service import apply_system
from app.services.metrics_service import MetricsReport
from app.services.significance_service import JudgmentCounts
from app.utils.error_messages import ERROR_MESSAGES
from app.utils.errors import DataError
from app.utils.helpers import parse_float_grid, require_file
from app.utils.response import emit_record, success_response

logger = logging.getLogger(__name__)


def top_responses(records: List[dict]) -> Tuple[List[tuple], List[tuple]]:
    """Best candidate and reference of every record; a record without candidates yields an empty response."""
    responses, references = [], []
    for record in records:
        if record["reference"] is None:
            raise DataError("Decode records need a reference to be evaluated")
        candidates = record["candidates"]
        responses.append(tuple(candidates[0].tokens) if candidates else ())
        references.append(tuple(record["reference"]))
    return responses, references


@click.command("eval")
@click.option("--input", "-i", "inputs", type=str, multiple=True, required=True, help="Decode output; repeat to compare systems.")
@click.option("--stop-words", type=str, default=None, help="Stop-word list (default: bundled list).")
@click.option("--table", is_flag=True, help="Print an aligned text table instead of JSON.")
@pass_state
@handle_errors("evaluate")
def eval_command(state: CliState, inputs, stop_words, table):
    """Distinct-1/2, BLEU-1, average length and stop-word % of decoded responses."""
    config = state.config({"paths": {"stop_words": stop_words}})
    stop_list = load_stop_words(config)
    reports: List[Tuple[str, MetricsReport]] = []
    for path in inputs:
        records = read_decode_records(path)
        system = records[0]["system"] or os.path.splitext(os.path.basename(path))[0]
        responses, references = top_responses(records)
        reports.append((system, metrics_service.evaluate(responses, references, stop_list)))
    if table:
        click.echo(metrics_service.to_table(reports))
        return 0
    return success_response({name: report.to_dict() for name, report in reports}, message="Metrics computed.")


def parse_counts(text: Optional[str]) -> Optional[JudgmentCounts]:
    """'no,unsure,yes' counts, e.g. '120,80,800'."""
    if text is None:
        return None
    try:
        no, unsure, yes = (int(v) for v in text.split(","))
    except ValueError:
        raise click.BadParameter("expected three comma-separated counts 'no,unsure,yes'")
    return JudgmentCounts(no=no, unsure=unsure, yes=yes)


def read_outcomes(path: Optional[str]) -> Optional[List[float]]:
    """One numeric outcome per line (1 = agree, 0 = not)."""
    if path is None:
        return None
    with open(require_file(path), "r", encoding="utf-8") as f:
        return [float(line) for line in f if line.strip()]


@click.command("significance")
@click.option("--successes", type=int, default=None, help="Binomial test: number of wins.")
@click.option("--trials", type=int, default=None, help="Binomial test: number of comparisons.")
@click.option("--p0", type=float, default=0.5, show_default=True, help="Binomial test: null success probability.")
@click.option("--counts-a", type=str, default=None, help="Bootstrap: judgment counts 'no,unsure,yes' of system A.")
@click.option("--counts-b", type=str, default=None, help="Bootstrap: judgment counts of system B.")
@click.option("--outcomes-a", type=str, default=None, help="Bootstrap: per-item outcomes file of system A.")
@click.option("--outcomes-b", type=str, default=None, help="Bootstrap: per-item outcomes file of system B.")
@click.option("--iterations", type=int, default=None, help="Bootstrap resamples.")
@click.option("--seed", type=int, default=None)
@pass_state
@handle_errors("evaluate")
def significance_command(state: CliState, successes, trials, p0, counts_a, counts_b, outcomes_a, outcomes_b, iterations, seed):
    """Exact binomial test and paired bootstrap test on human judgments."""
    config = state.config({"eval": {"bootstrap_iterations": iterations, "seed": seed}})
    result = {}
    if successes is not None or trials is not None:
        if successes is None or trials is None:
            raise click.UsageError("--successes and --trials go together")
        result["binomial"] = {"successes": successes, "trials": trials, "p0": p0,
                              "p_value": significance_service.binomial_test(successes, trials, p0)}
    a = parse_counts(counts_a) or read_outcomes(outcomes_a)
    b = parse_counts(counts_b) or read_outcomes(outcomes_b)
    if a is not None or b is not None:
        if a is None or b is None:
            raise click.UsageError("The bootstrap test needs outcomes for both systems")
        p = significance_service.bootstrap_diff_test(a, b, config.eval.bootstrap_iterations, config.eval.seed)
        result["bootstrap"] = {"iterations": config.eval.bootstrap_iterations, "seed": config.eval.seed, "p_value": p}
    if not result:
        raise click.UsageError("Give --successes/--trials and/or outcomes for two systems")
    return success_response(result, message="Significance computed.")


@click.command("tune")
@click.option("--pairs", type=str, default=None, help="Tuning prompts (source<TAB>reference); defaults to [paths] test_pairs.")
@click.option("--alpha-grid", type=str, required=True, help="Comma-separated alpha values.")
@click.option("--beta-grid", type=str, required=True, help="Comma-separated beta values.")
@click.option("--system", type=click.Choice(["dc", "dc-mmi"]), default="dc", show_default=True)
@click.option("--beam", "beam_size", type=int, default=None)
@click.option("--jobs", type=int, default=None)
@click.option("--limit", type=int, default=None, help="Use only the first N prompts.")
@click.option("--table", is_flag=True, help="Print one aligned text table instead of JSON records.")
@pass_state
@handle_errors("decode")
def tune_command(state: CliState, pairs, alpha_grid, beta_grid, system, beam_size, jobs, limit, table):
    """Decode under every (alpha, beta) grid point and report metrics for each."""
    config = state.config({"paths": {"test_pairs": pairs}, "decoder": {"beam_size": beam_size}})
    alphas, betas = parse_float_grid(alpha_grid), parse_float_grid(beta_grid)
    prompts = load_pairs(config.paths.test_pairs or config.paths.pairs, config.corpus.raw)
    if limit is not None:
        prompts = prompts[:limit]
    if not prompts:
        raise DataError(ERROR_MESSAGES["validation"]["empty_corpus"])
    base = apply_system(config.decoder, system)
    decoder = load_decoder(state, config, with_reverse=base.mmi_lambda > 0)
    stop_list = load_stop_words(config)
    sources = [p.source for p in prompts]
    references = [p.target for p in prompts]
    reports = []
    for alpha in alphas:
        for beta in betas:
            grid_config = replace(base, alpha=alpha, beta=beta)
            results = decoder.decode_many(sources, grid_config, jobs=jobs or Config.JOBS)
            responses = [r.candidates[0].tokens if r.candidates else () for r in results]
            report = metrics_service.evaluate(responses, references, stop_list)
            logger.info(f"alpha={alpha} beta={beta}: stop-word {report.stopword_pct:.2f}%, distinct-1 {report.distinct1[1]:.3f}")
            reports.append((f"alpha={alpha:g} beta={beta:g}", report))
            if not table:
                emit_record({"system": system, "alpha": alpha, "beta": beta, "metrics": report.to_dict()})
    if table:
        click.echo(metrics_service.to_table(reports))
