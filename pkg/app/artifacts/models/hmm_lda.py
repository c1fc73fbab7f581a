from dataclasses import asdict, dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from app.utils.errors import DataError
from .base_artifact import BaseArtifact


@dataclass(frozen=True)
class HmmLdaConfig:
    """
    Hyperparameters of the syntax-topic model. Class 0 is reserved for topics.
    """
    K: int = 50
    C: int = 20
    alpha_t: Optional[float] = None
    beta_t: float = 0.01
    delta_c: float = 0.01
    gamma_c: float = 0.1
    burn_in: int = 2500
    average_last: int = 1
    log_every: int = 100
    seed: int = 13

    def __post_init__(self):
        if self.alpha_t is None:
            object.__setattr__(self, "alpha_t", 50.0 / self.K)
        if self.K < 1 or self.C < 2:
            raise ValueError("HMM-LDA needs K >= 1 and C >= 2")
        if min(self.alpha_t, self.beta_t, self.delta_c, self.gamma_c) <= 0:
            raise ValueError("HMM-LDA priors must be positive")
        if self.burn_in < 1:
            raise ValueError("burn_in must be >= 1")
        if not 1 <= self.average_last <= self.burn_in:
            raise ValueError("average_last must be between 1 and burn_in")


class HmmLdaModel(BaseArtifact):
    """
    Count tables of a trained syntax-topic model.

    n_dz  documents x topics (every token, whatever its class)
    n_zw  topics x words (class-0 tokens only)
    n_cw  classes x words (row 0 stays empty)
    n_cc  (C+1) x (C+1) class transitions; index C is the utterance boundary
    """
    _magic = "HMMLDA v1"
    _tables = ("n_dz", "n_zw", "n_cw", "n_cc")

    def __init__(self, config: HmmLdaConfig, V: int, n_dz: np.ndarray, n_zw: np.ndarray, n_cw: np.ndarray, n_cc: np.ndarray) -> None:
        self.config = config
        self.V = V
        self.n_dz = n_dz
        self.n_zw = n_zw
        self.n_cw = n_cw
        self.n_cc = n_cc

    @property
    def K(self) -> int:
        return self.config.K

    @property
    def C(self) -> int:
        return self.config.C

    @property
    def boundary(self) -> int:
        return self.config.C

    def topic_word_probs(self) -> np.ndarray:
        """phi^(z): K x V emission probabilities of the topic component."""
        beta = self.config.beta_t
        return (self.n_zw + beta) / (self.n_zw.sum(axis=1, keepdims=True) + self.V * beta)

    def class_word_probs(self) -> np.ndarray:
        """phi^(c): C x V emission probabilities of the syntax classes (row 0 unused)."""
        delta = self.config.delta_c
        return (self.n_cw + delta) / (self.n_cw.sum(axis=1, keepdims=True) + self.V * delta)

    def transition_probs(self) -> np.ndarray:
        """pi: row-normalised class transition matrix including the boundary state."""
        gamma = self.config.gamma_c
        return (self.n_cc + gamma) / (self.n_cc.sum(axis=1, keepdims=True) + self.n_cc.shape[1] * gamma)

    def document_topic_probs(self) -> np.ndarray:
        """theta^(d): D x K."""
        alpha = self.config.alpha_t
        return (self.n_dz + alpha) / (self.n_dz.sum(axis=1, keepdims=True) + self.K * alpha)

    # --- Persistence ---

    def header_fields(self) -> List[str]:
        fields = {**asdict(self.config), "V": self.V, "D": self.n_dz.shape[0]}
        return [f"{k}={v!r}" for k, v in fields.items()]

    def to_lines(self) -> List[str]:
        lines = []
        for name in self._tables:
            table = getattr(self, name)
            lines.append(f"[{name}]")
            rows, cols = np.nonzero(table)
            lines.extend(f"{r}\t{c}\t{int(table[r, c])}" for r, c in zip(rows, cols))
        return lines

    @classmethod
    def from_lines(cls, fields: List[str], body: List[str]) -> "HmmLdaModel":
        from app.artifacts.artifact_manager import ArtifactManager

        values: Dict[str, str] = dict(f.split("=", 1) for f in fields)
        V, D = int(values.pop("V")), int(values.pop("D"))
        config = HmmLdaConfig(
            K=int(values["K"]), C=int(values["C"]), alpha_t=float(values["alpha_t"]),
            beta_t=float(values["beta_t"]), delta_c=float(values["delta_c"]),
            gamma_c=float(values["gamma_c"]), burn_in=int(values["burn_in"]),
            average_last=int(values["average_last"]), log_every=int(values["log_every"]),
            seed=int(values["seed"]),
        )
        shapes = {
            "n_dz": (D, config.K),
            "n_zw": (config.K, V),
            "n_cw": (config.C, V),
            "n_cc": (config.C + 1, config.C + 1),
        }
        sections = ArtifactManager.split_sections(body)
        tables = {}
        for name in cls._tables:
            table = np.zeros(shapes[name], dtype=np.int64)
            for line in sections.get(name, []):
                r, c, n = line.split("\t")
                table[int(r), int(c)] = int(n)
            tables[name] = table
        return cls(config, V, **tables)


class WordTopicStats(BaseArtifact):
    """
    Per-word topic distribution P(T|w) and content probability P(C=0|w),
    indexed by vocabulary id.
    """
    _magic = "WORDTOPIC v1"

    def __init__(self, tokens: Sequence[str], topic_given_word: np.ndarray, content_prob: np.ndarray) -> None:
        if topic_given_word.shape[0] != len(tokens) or content_prob.shape[0] != len(tokens):
            raise DataError("Word topic statistics do not match the vocabulary size")
        self.tokens = list(tokens)
        self.topic_given_word = topic_given_word
        self.content_prob = content_prob
        self._index = {t: i for i, t in enumerate(self.tokens)}

    @property
    def K(self) -> int:
        return self.topic_given_word.shape[1]

    def lookup(self, token: str):
        """(P(T|w), P(C=0|w)); unknown words get a uniform distribution and 0."""
        i = self._index.get(token)
        if i is None:
            return np.full(self.K, 1.0 / self.K), 0.0
        return self.topic_given_word[i], float(self.content_prob[i])

    def header_fields(self) -> List[str]:
        return [str(len(self.tokens)), str(self.K)]

    def to_lines(self) -> List[str]:
        return [
            f"{t}\t{p!r}\t{','.join(repr(float(x)) for x in dist)}"
            for t, p, dist in zip(self.tokens, self.content_prob.tolist(), self.topic_given_word)
        ]

    @classmethod
    def from_lines(cls, fields: List[str], body: List[str]) -> "WordTopicStats":
        tokens, content, dists = [], [], []
        for line in body:
            if not line:
                continue
            token, p, dist = line.split("\t")
            tokens.append(token)
            content.append(float(p))
            dists.append([float(x) for x in dist.split(",")])
        return cls(tokens, np.asarray(dists, dtype=float), np.asarray(content, dtype=float))
