import logging
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from app.artifacts.models.sif_model import SifModel, WordVectors
from app.utils.error_messages import ERROR_MESSAGES
from app.utils.errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_A = 1e-3


def _weighted_average(vectors: WordVectors, unigram: Mapping[str, float], a: float, sentence: Iterable[str]):
    total = np.zeros(vectors.d)
    n_inv = 0
    for token in sentence:
        vec = vectors.get(token)
        if vec is None:
            continue
        total += (a / (a + unigram.get(token, 0.0))) * vec
        n_inv += 1
    return total / max(1, n_inv), n_inv


def raw_embed(model: SifModel, sentence: Iterable[str]) -> np.ndarray:
    """Weighted average of the in-vocabulary word vectors; OOV tokens are skipped."""
    return _weighted_average(model.vectors, model.unigram, model.a, sentence)[0]


def remove_component(v: np.ndarray, u: np.ndarray) -> np.ndarray:
    return v - u * float(u @ v)


def embed(model: SifModel, sentence: Iterable[str]) -> np.ndarray:
    return remove_component(raw_embed(model, sentence), model.u)


def similarity(v1: np.ndarray, v2: np.ndarray) -> float:
    v1, v2 = np.asarray(v1, dtype=float), np.asarray(v2, dtype=float)
    if v1.shape != v2.shape:
        raise ValueError(ERROR_MESSAGES["validation"]["dimension_mismatch"])
    return float(v1 @ v2)


def dominant_direction(matrix: np.ndarray, tol: float = 1e-8, max_iter: int = 1000) -> np.ndarray:
    """
    Leading right singular vector of `matrix` by power iteration on its Gram
    matrix. The sign is fixed so the first nonzero coordinate is positive.
    """
    gram = matrix.T @ matrix
    norms = np.linalg.norm(matrix, axis=1)
    if not np.any(norms > 0):
        raise DataError("Cannot fit the common component of an all-zero embedding matrix")
    v = matrix[int(np.argmax(norms))] / norms.max()
    for _ in range(max_iter):
        nxt = gram @ v
        length = np.linalg.norm(nxt)
        if length == 0:
            break
        nxt /= length
        if nxt @ v < 0:
            nxt = -nxt
        converged = np.linalg.norm(nxt - v) < tol
        v = nxt
        if converged:
            break
    else:
        logger.warning(f"Power iteration did not converge within {max_iter} iterations")
    nonzero = np.flatnonzero(np.abs(v) > 1e-12)
    if nonzero.size and v[nonzero[0]] < 0:
        v = -v
    return v / np.linalg.norm(v)


def fit(vectors: WordVectors, unigram: Mapping[str, float], sentences: Sequence[Sequence[str]],
        a: float = DEFAULT_A, vocab_path: Optional[str] = None) -> SifModel:
    """
    Embeds the corpus sample without projection and freezes its first
    principal direction (uncentered) as the common component u.
    """
    rows = []
    for sentence in sentences:
        avg, n_inv = _weighted_average(vectors, unigram, a, sentence)
        if n_inv:
            rows.append(avg)
    if len(rows) < 2:
        raise DataError("SIF fitting needs at least two sentences with in-vocabulary words")
    u = dominant_direction(np.vstack(rows))
    logger.info(f"Fitted SIF common component on {len(rows)} sentences (d={vectors.d}, a={a})")
    return SifModel(vectors, unigram, a, u, vocab_path=vocab_path)
