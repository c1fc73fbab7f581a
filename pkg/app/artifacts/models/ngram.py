from functools import lru_cache
from typing import Dict, List, Sequence, Tuple

import numpy as np

from app.utils.errors import DataError
from .base_artifact import BaseArtifact
from .vocabulary import BOS_ID

Context = Tuple[int, ...]


class NGramModel(BaseArtifact):
    """
    Interpolated absolute-discounting n-gram model over vocabulary ids.

        P_1(w)   = c(w) / N                      (plain relative frequency)
        P_k(w|h) = max(c(h,w) - D, 0) / c(h) + D * N1+(h .) / c(h) * P_{k-1}(w|h')

    A history never seen at order k falls through to P_{k-1}. Sequences are
    padded with n-1 `<s>` symbols and terminated by `</s>`.
    """
    _magic = "NGRAM v1"

    def __init__(self, order: int, discount: float, V: int, counts: List[Dict[Context, Dict[int, int]]]) -> None:
        if order < 1:
            raise ValueError("n-gram order must be >= 1")
        if not 0 < discount < 1:
            raise ValueError("discount must lie strictly between 0 and 1")
        if len(counts) != order:
            raise DataError("n-gram count tables do not match the model order")
        self.order = order
        self.discount = discount
        self.V = V
        self.counts = counts
        self._totals = [{h: sum(nxt.values()) for h, nxt in table.items()} for table in counts]
        if not self._totals[0].get((), 0):
            raise DataError("n-gram model has no unigram counts")
        self._log_dist = lru_cache(maxsize=65536)(self._compute_log_dist)

    def _compute_log_dist(self, history: Context) -> np.ndarray:
        dist = np.zeros(self.V)
        unigrams = self.counts[0][()]
        for w, c in unigrams.items():
            dist[w] = c
        dist /= self._totals[0][()]
        D = self.discount
        for k in range(2, self.order + 1):
            h = history[len(history) - (k - 1):]
            table = self.counts[k - 1].get(h)
            if not table:
                continue
            total = self._totals[k - 1][h]
            dist *= D * len(table) / total
            for w, c in table.items():
                dist[w] += max(c - D, 0.0) / total
        with np.errstate(divide="ignore"):
            log_dist = np.log(dist)
        log_dist.flags.writeable = False
        return log_dist

    def history(self, prefix: Sequence[int]) -> Context:
        padded = [BOS_ID] * (self.order - 1) + list(prefix)
        return tuple(padded[len(padded) - (self.order - 1):]) if self.order > 1 else ()

    def next_logprobs(self, source: Sequence[int], prefix: Sequence[int]) -> np.ndarray:
        """Log-distribution over all vocabulary ids; the source is ignored."""
        return self._log_dist(self.history(prefix))

    # --- Persistence ---

    def header_fields(self) -> List[str]:
        return [f"n={self.order}", f"discount={self.discount!r}", f"V={self.V}"]

    def to_lines(self) -> List[str]:
        lines = []
        for k, table in enumerate(self.counts, start=1):
            lines.append(f"[order {k}]")
            for h in sorted(table):
                for w in sorted(table[h]):
                    lines.append(f"{' '.join(map(str, h))}\t{w}\t{table[h][w]}")
        return lines

    @classmethod
    def from_lines(cls, fields: List[str], body: List[str]) -> "NGramModel":
        from app.artifacts.artifact_manager import ArtifactManager

        values = dict(f.split("=", 1) for f in fields)
        order = int(values["n"])
        sections = ArtifactManager.split_sections(body)
        counts: List[Dict[Context, Dict[int, int]]] = []
        for k in range(1, order + 1):
            table: Dict[Context, Dict[int, int]] = {}
            for line in sections.get(f"order {k}", []):
                h, w, c = line.split("\t")
                key = tuple(int(x) for x in h.split()) if h else ()
                table.setdefault(key, {})[int(w)] = int(c)
            counts.append(table)
        return cls(order, float(values["discount"]), int(values["V"]), counts)
