from typing import Dict, Iterable, List, Sequence

import numpy as np

from app.utils.errors import DataError
from .base_artifact import BaseArtifact

UNK = "<unk>"
BOS = "<s>"
EOS = "</s>"
NULL = "<null>"
RESERVED = (UNK, BOS, EOS, NULL)
UNK_ID, BOS_ID, EOS_ID, NULL_ID = range(4)


class Vocabulary(BaseArtifact):
    """
    Bijective token <-> id map with unigram counts.

    Ids are dense 0..V-1 and the first four ids are the reserved symbols.
    Tokens below the training cut-off are folded into `<unk>`, so the counts
    of all entries add up to `total_tokens`.
    """
    _magic = "VOCAB v1"

    def __init__(self, tokens: Sequence[str], counts: Sequence[int]) -> None:
        if tuple(tokens[:len(RESERVED)]) != RESERVED:
            raise DataError(f"Vocabulary must start with the reserved symbols {RESERVED}")
        if len(tokens) != len(counts):
            raise DataError("Vocabulary tokens and counts differ in length")
        for token, count in zip(tokens[len(RESERVED):], counts[len(RESERVED):]):
            if count <= 0:
                raise DataError(f"Non-positive count for token '{token}'")
        self.tokens: List[str] = list(tokens)
        self.counts = np.asarray(counts, dtype=np.int64)
        self.total_tokens = int(self.counts.sum())
        if self.total_tokens <= 0:
            raise DataError("Vocabulary has no counted tokens")
        self._index: Dict[str, int] = {t: i for i, t in enumerate(self.tokens)}
        if len(self._index) != len(self.tokens):
            raise DataError("Vocabulary tokens are not unique")
        self.probabilities = self.counts / float(self.total_tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self._index

    def id(self, token: str) -> int:
        return self._index.get(token, UNK_ID)

    def token(self, token_id: int) -> str:
        return self.tokens[token_id]

    def count(self, token: str) -> int:
        i = self._index.get(token)
        return int(self.counts[i]) if i is not None else 0

    def prob(self, token: str) -> float:
        """Unigram probability; 0.0 for tokens outside the vocabulary."""
        i = self._index.get(token)
        return float(self.probabilities[i]) if i is not None else 0.0

    def encode(self, tokens: Iterable[str]) -> List[int]:
        """Ids of data tokens. Literal reserved markers in the data are unknown words."""
        return [UNK_ID if t in RESERVED else self.id(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> List[str]:
        return [self.tokens[i] for i in ids]

    @property
    def word_ids(self) -> range:
        """Ids of the non-reserved entries."""
        return range(len(RESERVED), len(self.tokens))

    # --- Persistence ---

    def header_fields(self) -> List[str]:
        return [str(len(self)), str(self.total_tokens)]

    def to_lines(self) -> List[str]:
        return [f"{t}\t{int(c)}" for t, c in zip(self.tokens, self.counts)]

    @classmethod
    def from_lines(cls, fields: List[str], body: List[str]) -> "Vocabulary":
        tokens, counts = [], []
        for line in body:
            if not line:
                continue
            token, count = line.split("\t")
            tokens.append(token)
            counts.append(int(count))
        vocab = cls(tokens, counts)
        if fields and (int(fields[0]) != len(vocab) or int(fields[1]) != vocab.total_tokens):
            raise DataError("Vocabulary header does not match its entries")
        return vocab
