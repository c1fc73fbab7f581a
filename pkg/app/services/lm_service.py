import logging
from collections import Counter, defaultdict
from dataclasses import dataclass
from functools import lru_cache
from typing import Dict, List, Protocol, Sequence, Tuple, runtime_checkable

import numpy as np

from app.artifacts.models.lexical_table import LexicalTransTable
from app.artifacts.models.ngram import NGramModel
from app.artifacts.models.vocabulary import BOS_ID, EOS_ID, NULL_ID, Vocabulary
from app.services.corpus_service import DialoguePair
from app.utils.error_messages import ERROR_MESSAGES
from app.utils.errors import DataError

logger = logging.getLogger(__name__)


@runtime_checkable
class ConditionalLm(Protocol):
    """
    Left-to-right conditional model P(w_i | w_<i, X) over vocabulary ids.

    next_logprobs returns a dense log-distribution over every id; `</s>` is
    the end-of-response event and `<s>`/`<null>` carry no mass. The
    probabilities must sum to one for any (source, prefix).
    """

    def next_logprobs(self, source: Sequence[int], prefix: Sequence[int]) -> np.ndarray:
        ...


@dataclass(frozen=True)
class LmConfig:
    order: int = 3
    discount: float = 0.75
    lambda_lm: float = 0.6
    em_iterations: int = 10

    def __post_init__(self):
        if self.order < 1:
            raise ValueError("order must be >= 1")
        if not 0 < self.discount < 1:
            raise ValueError("discount must lie strictly between 0 and 1")
        if not 0 <= self.lambda_lm <= 1:
            raise ValueError("lambda_lm must lie in [0, 1]")
        if self.em_iterations < 1:
            raise ValueError("em_iterations must be >= 1")


def train_ngram(target_corpus: Sequence[Sequence[int]], n: int, discount: float, V: int) -> NGramModel:
    """Counts n-grams of `<s>`-padded, `</s>`-terminated id sequences."""
    if n < 1:
        raise ValueError("n-gram order must be >= 1")
    if not target_corpus:
        raise DataError(ERROR_MESSAGES["validation"]["empty_corpus"])
    counts: List[Dict[Tuple[int, ...], Counter]] = [defaultdict(Counter) for _ in range(n)]
    for sentence in target_corpus:
        padded = [BOS_ID] * (n - 1) + list(sentence) + [EOS_ID]
        for i in range(n - 1, len(padded)):
            w = padded[i]
            for k in range(1, n + 1):
                h = tuple(padded[i - k + 1:i])
                counts[k - 1][h][w] += 1
    tables = [{h: dict(nxt) for h, nxt in table.items()} for table in counts]
    model = NGramModel(n, discount, V, tables)
    logger.info(f"Trained {n}-gram model on {len(target_corpus)} sentences ({sum(len(t) for t in tables)} histories)")
    return model


def train_ibm1(pairs: Sequence[Tuple[Sequence[int], Sequence[int]]], em_iterations: int, V: int) -> LexicalTransTable:
    """
    IBM Model 1 EM over (source ids, target ids) pairs, with `<null>` added to
    every source. t starts uniform over the target words seen in training.
    """
    if not pairs:
        raise DataError(ERROR_MESSAGES["validation"]["empty_corpus"])
    if em_iterations < 1:
        raise ValueError("em_iterations must be >= 1")
    target_types = {f for _, target in pairs for f in target}
    uniform = 1.0 / len(target_types)
    t: Dict[int, Dict[int, float]] = {}

    def t_get(e: int, f: int) -> float:
        return t[e].get(f, 0.0) if t else uniform

    for iteration in range(1, em_iterations + 1):
        expected: Dict[int, Dict[int, float]] = defaultdict(lambda: defaultdict(float))
        for source, target in pairs:
            sources = [NULL_ID] + list(source)
            for f in target:
                probs = [t_get(e, f) for e in sources]
                denom = sum(probs)
                if denom == 0:
                    continue
                for e, p in zip(sources, probs):
                    expected[e][f] += p / denom
        t = {}
        for e, row in expected.items():
            total = sum(row.values())
            t[e] = {f: c / total for f, c in row.items()}
        logger.debug(f"IBM1 EM iteration {iteration}/{em_iterations}: {len(t)} source rows")
    return LexicalTransTable(V, t)


class MixtureLm:
    """
    lambda_lm * n-gram + (1 - lambda_lm) * lexical channel.

    The channel has no end-of-response event, so `</s>` keeps the n-gram
    probability and the channel's share is scaled to the remaining mass:

        P(</s>) = P_ng(</s>|h)
        P(w)    = lambda * P_ng(w|h) + (1 - lambda) * (1 - P_ng(</s>|h)) * P_chan(w|X)
    """

    def __init__(self, ngram: NGramModel, channel: LexicalTransTable, lambda_lm: float) -> None:
        if not 0 <= lambda_lm <= 1:
            raise ValueError("lambda_lm must lie in [0, 1]")
        self.ngram = ngram
        self.channel = channel
        self.lambda_lm = lambda_lm
        self._channel_dist = lru_cache(maxsize=4096)(self._compute_channel_dist)

    def _compute_channel_dist(self, source: Tuple[int, ...]) -> np.ndarray:
        """(1/(|X|+1)) * sum over X and `<null>` of t(.|x); rows the table lacks are left out."""
        rows = [self.channel.row(x) for x in (NULL_ID,) + source if x in self.channel]
        if not rows:
            return np.zeros(self.ngram.V)
        dist = np.sum(rows, axis=0) / len(rows)
        dist.flags.writeable = False
        return dist

    def channel_dist(self, source: Sequence[int]) -> np.ndarray:
        return self._channel_dist(tuple(source))

    def next_logprobs(self, source: Sequence[int], prefix: Sequence[int]) -> np.ndarray:
        ng_log = self.ngram.next_logprobs(source, prefix)
        if self.lambda_lm == 1.0:
            return ng_log
        ng = np.exp(ng_log)
        p_eos = ng[EOS_ID]
        dist = self.lambda_lm * ng + (1.0 - self.lambda_lm) * (1.0 - p_eos) * self.channel_dist(source)
        dist[EOS_ID] = p_eos
        dist[BOS_ID] = 0.0
        dist[NULL_ID] = 0.0
        with np.errstate(divide="ignore"):
            return np.log(dist)


class GridLm:
    """
    Externally scored model: one dense row of log-probabilities per decoding
    step, read from a grid file. The row depends only on the step, not on
    the prefix. Past the last row only `</s>` remains possible.
    """
    _magic = "LOGPROB-GRID v1"

    def __init__(self, rows: np.ndarray) -> None:
        self.rows = np.asarray(rows, dtype=float)
        self.V = self.rows.shape[1]

    def next_logprobs(self, source: Sequence[int], prefix: Sequence[int]) -> np.ndarray:
        step = len(prefix)
        if step < len(self.rows):
            return self.rows[step]
        only_eos = np.full(self.V, -np.inf)
        only_eos[EOS_ID] = 0.0
        return only_eos

    @classmethod
    def load(cls, path: str) -> "GridLm":
        from app.artifacts.artifact_manager import ArtifactManager

        fields, body = ArtifactManager.read_artifact(path, cls._magic)
        values = dict(f.split("=", 1) for f in fields)
        rows = [[float(x) for x in line.split()] for line in body if line.strip()]
        if not rows or any(len(r) != int(values["V"]) for r in rows):
            raise DataError(f"Grid file {path} does not have rows of width {values.get('V')}")
        return cls(np.asarray(rows))


def sequence_logprob(lm: ConditionalLm, source: Sequence[int], target: Sequence[int]) -> float:
    """log P(target | source) = sum of per-step log-probabilities plus the final `</s>` term."""
    if not target:
        raise ValueError("target must be non-empty")
    total = 0.0
    for i, w in enumerate(target):
        total += float(lm.next_logprobs(source, target[:i])[w])
    total += float(lm.next_logprobs(source, target)[EOS_ID])
    return total


def train_pair_models(pairs: Sequence[DialoguePair], vocab: Vocabulary, config: LmConfig, reverse: bool = False) -> MixtureLm:
    """
    Trains the n-gram on the generated side and IBM1 from the conditioning side.
    reverse=True builds P(X|Y): the roles of source and target are swapped.
    """
    encoded = [(vocab.encode(p.source), vocab.encode(p.target)) for p in pairs]
    if reverse:
        encoded = [(tgt, src) for src, tgt in encoded]
    ngram = train_ngram([tgt for _, tgt in encoded], config.order, config.discount, len(vocab))
    channel = train_ibm1(encoded, config.em_iterations, len(vocab))
    direction = "reverse" if reverse else "forward"
    logger.info(f"Trained {direction} mixture model (lambda_lm={config.lambda_lm})")
    return MixtureLm(ngram, channel, config.lambda_lm)
