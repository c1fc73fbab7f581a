import os
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from app.artifacts.artifact_manager import ArtifactManager
from app.utils.errors import DataError
from .base_artifact import BaseArtifact
from .vocabulary import Vocabulary


class WordVectors:
    """Fixed-dimension word vector table."""

    def __init__(self, words: Sequence[str], matrix: np.ndarray) -> None:
        matrix = np.asarray(matrix, dtype=float)
        if matrix.ndim != 2 or matrix.shape[0] != len(words):
            raise DataError("Word vector matrix does not match the word list")
        if not np.all(np.isfinite(matrix)):
            raise DataError("Word vectors contain NaN or Inf entries")
        self.words = list(words)
        self.matrix = matrix
        self._index = {w: i for i, w in enumerate(self.words)}
        self.path: Optional[str] = None

    @property
    def d(self) -> int:
        return self.matrix.shape[1]

    def __contains__(self, word: str) -> bool:
        return word in self._index

    def __len__(self) -> int:
        return len(self.words)

    def get(self, word: str) -> Optional[np.ndarray]:
        i = self._index.get(word)
        return self.matrix[i] if i is not None else None

    @classmethod
    def load(cls, path: str) -> "WordVectors":
        """Text format: one `word f1 f2 ... fd` per line. A word2vec-style `<n> <d>` first line is skipped."""
        words, rows = [], []
        with open(path, "r", encoding="utf-8") as f:
            for line_no, line in enumerate(f):
                parts = line.rstrip("\n").split(" ")
                if line_no == 0 and len(parts) == 2 and all(p.isdigit() for p in parts):
                    continue
                if len(parts) < 2:
                    continue
                words.append(parts[0])
                rows.append([float(x) for x in parts[1:]])
        if not rows:
            raise DataError(f"No word vectors in {path}")
        if len({len(r) for r in rows}) != 1:
            raise DataError(f"Word vectors in {path} have inconsistent dimensions")
        vectors = cls(words, np.asarray(rows))
        vectors.path = path
        return vectors

    def save(self, path: str, force: bool = False) -> str:
        ArtifactManager.check_writable([path], force)
        with open(path, "w", encoding="utf-8") as f:
            for word, row in zip(self.words, self.matrix):
                f.write(word + " " + " ".join(repr(float(x)) for x in row) + "\n")
        self.path = path
        return path

    @classmethod
    def random(cls, words: Sequence[str], d: int, seed: int) -> "WordVectors":
        """Random unit vectors; a desk-scale stand-in for pre-trained embeddings."""
        rng = np.random.default_rng(seed)
        matrix = rng.standard_normal((len(words), d))
        matrix /= np.linalg.norm(matrix, axis=1, keepdims=True)
        return cls(words, matrix)


class SifModel(BaseArtifact):
    """
    Smooth-inverse-frequency sentence encoder: word vectors, unigram
    probabilities, weighting constant a and the frozen common component u.
    """
    _magic = "SIF v1"

    def __init__(self, vectors: WordVectors, unigram: Mapping[str, float], a: float, u: np.ndarray,
                 vocab_path: Optional[str] = None) -> None:
        if a <= 0:
            raise ValueError("SIF weighting constant a must be positive")
        u = np.asarray(u, dtype=float)
        if u.shape != (vectors.d,) or abs(np.linalg.norm(u) - 1.0) > 1e-9:
            raise DataError("SIF common component must be a unit vector of the embedding dimension")
        self.vectors = vectors
        self.unigram = unigram
        self.a = a
        self.u = u
        self.vocab_path = vocab_path

    def weight(self, word: str) -> float:
        return self.a / (self.a + self.unigram.get(word, 0.0))

    def aligned(self, vocab: Vocabulary) -> Tuple[np.ndarray, np.ndarray]:
        """
        Weighted vectors a/(a+P(w)) * vec(w) laid out by vocabulary id, plus the
        in-vocabulary mask. Ids without a vector get a zero row.
        """
        weighted = np.zeros((len(vocab), self.vectors.d))
        mask = np.zeros(len(vocab), dtype=bool)
        for i, token in enumerate(vocab.tokens):
            vec = self.vectors.get(token)
            if vec is not None:
                weighted[i] = self.weight(token) * vec
                mask[i] = True
        return weighted, mask

    # --- Persistence ---

    def header_fields(self) -> List[str]:
        return [f"a={self.a!r}", f"d={self.vectors.d}"]

    def to_lines(self) -> List[str]:
        if not self.vectors.path:
            raise DataError("Word vectors must be saved to a file before the SIF model")
        return [
            f"vectors\t{os.path.abspath(self.vectors.path)}",
            f"vocab\t{os.path.abspath(self.vocab_path) if self.vocab_path else ''}",
            "u\t" + ",".join(repr(float(x)) for x in self.u),
        ]

    @classmethod
    def from_lines(cls, fields: List[str], body: List[str]) -> "SifModel":
        values: Dict[str, str] = dict(f.split("=", 1) for f in fields)
        entries = dict(line.split("\t", 1) for line in body if line)
        vectors = WordVectors.load(entries["vectors"])
        vocab_path = entries.get("vocab") or None
        unigram: Dict[str, float] = {}
        if vocab_path:
            vocab = Vocabulary.load(vocab_path)
            unigram = {w: vocab.prob(w) for w in vectors.words if w in vocab}
        u = np.asarray([float(x) for x in entries["u"].split(",")])
        if vectors.d != int(values["d"]):
            raise DataError("Word vector dimension differs from the SIF model")
        return cls(vectors, unigram, float(values["a"]), u, vocab_path=vocab_path)
