import logging
from dataclasses import asdict, dataclass
from typing import List, Sequence, Tuple

from nltk.translate.bleu_score import corpus_bleu
from nltk.util import ngrams

from app.utils.error_messages import ERROR_MESSAGES
from app.utils.errors import DataError

logger = logging.getLogger(__name__)

Response = Sequence[str]


def distinct_n(responses: Sequence[Response], n: int) -> Tuple[int, float]:
    """Distinct n-gram types pooled over all responses, and types / n-gram tokens."""
    if n not in (1, 2):
        raise ValueError("distinct_n supports n = 1 or 2")
    if not responses:
        raise DataError(ERROR_MESSAGES["validation"]["empty_responses"])
    types = set()
    total = 0
    for response in responses:
        grams = list(ngrams(response, n))
        types.update(grams)
        total += len(grams)
    if total == 0:
        raise DataError(ERROR_MESSAGES["validation"]["no_ngrams"])
    return len(types), len(types) / total


def bleu1(responses: Sequence[Response], references: Sequence[Response]) -> float:
    """Corpus BLEU-1 on a 0-100 scale: clipped unigram precision times the brevity penalty."""
    if len(responses) != len(references):
        raise ValueError(ERROR_MESSAGES["validation"]["length_mismatch"])
    if not responses:
        raise DataError(ERROR_MESSAGES["validation"]["empty_responses"])
    if not any(responses):
        return 0.0
    score = corpus_bleu([[list(ref)] for ref in references], [list(r) for r in responses], weights=(1.0,))
    return 100.0 * score


def avg_len(responses: Sequence[Response]) -> float:
    if not responses:
        raise DataError(ERROR_MESSAGES["validation"]["empty_responses"])
    return sum(len(r) for r in responses) / len(responses)


def stopword_pct(responses: Sequence[Response], stop_list: frozenset) -> float:
    if not stop_list:
        raise ValueError(ERROR_MESSAGES["validation"]["empty_stop_list"])
    total = sum(len(r) for r in responses)
    if total == 0:
        raise DataError(ERROR_MESSAGES["validation"]["no_tokens"])
    stops = sum(1 for r in responses for token in r if token in stop_list)
    return 100.0 * stops / total


@dataclass
class MetricsReport:
    distinct1: Tuple[int, float]
    distinct2: Tuple[int, float]
    bleu1: float
    avg_len: float
    stopword_pct: float

    def to_dict(self) -> dict:
        data = asdict(self)
        data["distinct1"] = {"count": self.distinct1[0], "ratio": self.distinct1[1]}
        data["distinct2"] = {"count": self.distinct2[0], "ratio": self.distinct2[1]}
        return data

    COLUMNS = ("system", "distinct-1", "distinct-2", "BLEU-1", "avg len", "stop-word %")

    def row(self, system: str) -> List[str]:
        return [
            system,
            f"{self.distinct1[0]}/{self.distinct1[1]:.3f}",
            f"{self.distinct2[0]}/{self.distinct2[1]:.3f}",
            f"{self.bleu1:.2f}",
            f"{self.avg_len:.2f}",
            f"{self.stopword_pct:.2f}",
        ]


def to_table(reports: Sequence[Tuple[str, MetricsReport]]) -> str:
    """Aligned plain-text table, one row per system."""
    rows = [list(MetricsReport.COLUMNS)] + [report.row(name) for name, report in reports]
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = []
    for row in rows:
        cells = [row[0].ljust(widths[0])] + [cell.rjust(w) for cell, w in zip(row[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines)


def evaluate(responses: Sequence[Response], references: Sequence[Response], stop_list: frozenset) -> MetricsReport:
    """All metrics of one system. Single-token responses have no bigrams; distinct-2 is then (0, 0.0)."""
    if any(len(r) >= 2 for r in responses):
        distinct2 = distinct_n(responses, 2)
    else:
        logger.warning("No response has two tokens; reporting distinct-2 as 0")
        distinct2 = (0, 0.0)
    report = MetricsReport(
        distinct1=distinct_n(responses, 1),
        distinct2=distinct2,
        bleu1=bleu1(responses, references),
        avg_len=avg_len(responses),
        stopword_pct=stopword_pct(responses, stop_list),
    )
    logger.info(f"Evaluated {len(responses)} responses")
    return report
