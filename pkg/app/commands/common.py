import functools
import json
import logging
import os
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

import click
from marshmallow import ValidationError

from app.artifacts import get_run_path
from app.artifacts.models.hmm_lda import HmmLdaModel, WordTopicStats
from app.artifacts.models.lexical_table import LexicalTransTable
from app.artifacts.models.ngram import NGramModel
from app.artifacts.models.run_config import RunConfig
from app.artifacts.models.sif_model import SifModel
from app.artifacts.models.vocabulary import Vocabulary
from app.schemas.decode_schema import decode_record_schema
from app.services import corpus_service
from app.services.corpus_service import DialoguePair
from app.services.decoder_service import Decoder
from app.services.lm_service import MixtureLm
from app.utils.error_messages import ERROR_MESSAGES
from app.utils.errors import ArtifactError, DataError
from app.utils.helpers import require_file
from app.utils.response import error_response

logger = logging.getLogger(__name__)


@dataclass
class CliState:
    """Global options shared by every command (stored on click's context object)."""
    run_dir: str
    config_path: Optional[str] = None
    force: bool = False

    def path(self, artifact: str, create: bool = False) -> str:
        return get_run_path(self.run_dir, artifact, create=create)

    def config(self, overrides: Optional[Dict[str, Dict[str, Any]]] = None) -> RunConfig:
        """The run configuration: --config, else run.ini of the run directory, plus flag overrides."""
        path = self.config_path
        if path is None and os.path.exists(self.path("run_config")):
            path = self.path("run_config")
        return RunConfig.load(path, overrides)

    def record_config(self, config: RunConfig) -> None:
        """run.ini always holds the last effective configuration."""
        config.dump(self.path("run_config", create=True), force=True)


pass_state = click.make_pass_decorator(CliState)


def handle_errors(action: str):
    """
    Maps exceptions raised by a command to an error record on stderr and an
    exit status: 1 for missing files and bad data or artifacts, 2 for
    invalid settings.
    """
    def decorator(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                return fn(*args, **kwargs)
            except click.exceptions.Exit:
                raise
            except click.ClickException:
                raise
            except FileNotFoundError as err:
                status = error_response("not_found", str(err), status=1)
            except (DataError, ArtifactError) as err:
                status = error_response("data_error", str(err), status=1)
            except ValueError as err:
                details = err.args[0] if err.args and isinstance(err.args[0], dict) else {}
                message = ERROR_MESSAGES["validation"]["invalid_config"] if details else str(err)
                status = error_response("validation_error", message, details=details, status=2)
            except OSError as err:
                status = error_response("io_error", str(err), status=1)
            except Exception as err:
                logger.exception(f"Unexpected failure in {action}")
                status = error_response("server_error", ERROR_MESSAGES["server_error"].get(action, str(err)), details={"error": str(err)}, status=1)
            raise click.exceptions.Exit(status)
        return wrapper
    return decorator


def load_pairs(path: Optional[str], raw: bool) -> List[DialoguePair]:
    if not path:
        raise click.UsageError("No pairs file given (use --pairs or [paths] pairs in the run config).")
    pairs = corpus_service.read_pairs(require_file(path), raw=raw)
    if not pairs:
        raise DataError(ERROR_MESSAGES["validation"]["empty_corpus"])
    return pairs


def load_stop_words(config: RunConfig) -> frozenset:
    path = config.paths.stop_words
    return corpus_service.read_stop_words(require_file(path) if path else None)


def load_vocab(state: CliState) -> Vocabulary:
    return Vocabulary.load(state.path("vocab"))


def load_lm(state: CliState, config: RunConfig, direction: str = "forward") -> MixtureLm:
    ngram = NGramModel.load(state.path(f"lm_{direction}_ngram"))
    channel = LexicalTransTable.load(state.path(f"lm_{direction}_lex"))
    return MixtureLm(ngram, channel, config.lm.lambda_lm)


def load_decoder(state: CliState, config: RunConfig, with_reverse: bool = False) -> Decoder:
    """Loads every model decoding needs; the reverse model only when reranking."""
    vocab = load_vocab(state)
    reverse = load_lm(state, config, "reverse") if with_reverse else None
    return Decoder(
        vocab=vocab,
        stats=WordTopicStats.load(state.path("word_topic_stats")),
        sif=SifModel.load(state.path("sif")),
        forward_lm=load_lm(state, config, "forward"),
        reverse_lm=reverse,
        topic_model=HmmLdaModel.load(state.path("hmmlda")),
        stop_words=load_stop_words(config),
    )


def read_decode_records(path: str) -> List[dict]:
    """Reads decode output (one JSON record per line) back into validated records."""
    records = []
    with open(require_file(path), "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                records.append(decode_record_schema.load(json.loads(line)))
            except (ValueError, ValidationError) as err:
                raise DataError(f"Malformed decode record on line {line_no} of {path}: {err}")
    if not records:
        raise DataError(ERROR_MESSAGES["validation"]["empty_responses"])
    return records


def open_output(path: Optional[str]):
    return click.open_file(path or "-", "w", encoding="utf-8")
