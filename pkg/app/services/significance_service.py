import logging
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
from scipy.stats import binom

from app.utils.error_messages import ERROR_MESSAGES
from app.utils.errors import DataError

logger = logging.getLogger(__name__)

MIN_BOOTSTRAP_ITERATIONS = 1000
_CHUNK = 1000


@dataclass(frozen=True)
class JudgmentCounts:
    """Per-system counts of No / Unsure / Yes labels."""
    no: int = 0
    unsure: int = 0
    yes: int = 0

    def __post_init__(self):
        if min(self.no, self.unsure, self.yes) < 0:
            raise ValueError("Judgment counts must be non-negative")

    @property
    def total(self) -> int:
        return self.no + self.unsure + self.yes

    @property
    def yes_pct(self) -> float:
        return 100.0 * self.yes / self.total if self.total else 0.0

    def outcomes(self) -> np.ndarray:
        """Binary items (1 = Yes) in label order No, Unsure, Yes."""
        return np.concatenate([np.zeros(self.no + self.unsure), np.ones(self.yes)])


Outcomes = Union[JudgmentCounts, Sequence[float], np.ndarray]


def _as_outcomes(data: Outcomes) -> np.ndarray:
    if isinstance(data, JudgmentCounts):
        return data.outcomes()
    return np.asarray(data, dtype=float)


def bootstrap_diff_test(a: Outcomes, b: Outcomes, iterations: int = 10000, seed: int = 13) -> float:
    """
    Two-sided paired bootstrap test on the difference of mean outcomes.

    Items are resampled with replacement; p is twice the fraction of
    resamples whose difference does not keep the observed sign, clamped to
    [0, 1]. An observed difference of exactly zero gives p = 1.
    """
    if iterations < MIN_BOOTSTRAP_ITERATIONS:
        raise ValueError(f"iterations must be >= {MIN_BOOTSTRAP_ITERATIONS}")
    xa, xb = _as_outcomes(a), _as_outcomes(b)
    if xa.shape != xb.shape:
        raise DataError(ERROR_MESSAGES["validation"]["paired_length_mismatch"])
    if xa.size == 0:
        raise DataError(ERROR_MESSAGES["validation"]["empty_responses"])
    diffs = xa - xb
    observed = diffs.mean()
    if observed == 0:
        return 1.0
    sign = np.sign(observed)
    rng = np.random.default_rng(seed)
    n = diffs.size
    reversals = 0
    done = 0
    while done < iterations:
        size = min(_CHUNK, iterations - done)
        idx = rng.integers(0, n, size=(size, n))
        resampled = diffs[idx].mean(axis=1)
        reversals += int(np.count_nonzero(sign * resampled <= 0))
        done += size
    p = min(1.0, 2.0 * reversals / iterations)
    logger.debug(f"Bootstrap: observed diff {observed:.4f}, {reversals}/{iterations} reversals")
    return p


def binomial_test(successes: int, trials: int, p0: float = 0.5) -> float:
    """
    Exact two-sided binomial test: twice the smaller tail probability,
    clamped to 1. Tails are summed in log space.
    """
    if trials <= 0:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("Need 0 <= successes <= trials")
    if not 0 < p0 < 1:
        raise ValueError("p0 must lie strictly between 0 and 1")
    log_upper = binom.logsf(successes - 1, trials, p0)
    log_lower = binom.logcdf(successes, trials, p0)
    log_p = np.log(2.0) + min(log_upper, log_lower)
    return float(min(1.0, np.exp(log_p)))

