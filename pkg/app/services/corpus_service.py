import logging
import os
import re
from collections import Counter
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from app.artifacts.models.vocabulary import RESERVED, UNK, Vocabulary
from app.utils.error_messages import ERROR_MESSAGES
from app.utils.errors import DataError

logger = logging.getLogger(__name__)

DEFAULT_STOP_WORDS_PATH = os.path.join(os.path.dirname(os.path.dirname(__file__)), "resources", "stopwords.txt")

# A clitic ("'s", "'t") stays attached to its apostrophe; every other
# non-word, non-space character becomes a token of its own.
_TOKEN_RE = re.compile(r"'[^\W_]+|[^\W_]+|[^\w\s]|_")


@dataclass(frozen=True)
class DialoguePair:
    source: Tuple[str, ...]
    target: Tuple[str, ...]

    def __post_init__(self):
        if not self.source or not self.target:
            raise DataError("Dialogue pair sides must be non-empty")


@dataclass(frozen=True)
class BucketSpec:
    """Named source-length ranges, inclusive on both ends."""
    ranges: Tuple[Tuple[str, int, int], ...] = (("b1", 3, 6), ("b2", 7, 15), ("b3", 16, 25))

    def __post_init__(self):
        previous_max = None
        for name, low, high in self.ranges:
            if low > high:
                raise ValueError(f"Bucket '{name}' has min {low} > max {high}")
            if previous_max is not None and low <= previous_max:
                raise ValueError("Bucket ranges must be sorted ascending and non-overlapping")
            previous_max = high

    @classmethod
    def parse(cls, text: str) -> "BucketSpec":
        """'b1:3-6,b2:7-15' -> BucketSpec"""
        ranges = []
        for item in text.split(","):
            name, span = item.strip().split(":")
            low, high = span.split("-")
            ranges.append((name.strip(), int(low), int(high)))
        return cls(tuple(ranges))

    def bucket_of(self, length: int) -> Optional[str]:
        for name, low, high in self.ranges:
            if low <= length <= high:
                return name
        return None


def tokenize(text: str) -> List[str]:
    """
    Lowercase, split punctuation into separate tokens and split clitics on the apostrophe.
    "Here's your jacket!" -> ["here", "'s", "your", "jacket", "!"]
    """
    return _TOKEN_RE.findall(text.lower())


def build_vocab(pairs: Sequence[DialoguePair], min_count: int = 2) -> Vocabulary:
    """
    Counts every source and target token. Tokens seen fewer than min_count
    times are folded into <unk>; reserved ids are always present.
    """
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if not pairs:
        raise DataError(ERROR_MESSAGES["validation"]["empty_corpus"])

    counts: Counter = Counter()
    for pair in pairs:
        counts.update(pair.source)
        counts.update(pair.target)

    unk_count = 0
    kept = []
    for token, count in counts.items():
        # Literal reserved markers in the data are counted as unknown
        if token in RESERVED or count < min_count:
            unk_count += count
        else:
            kept.append((token, count))
    kept.sort(key=lambda tc: (-tc[1], tc[0]))

    tokens = list(RESERVED) + [t for t, _ in kept]
    reserved_counts = [unk_count if t == UNK else 0 for t in RESERVED]
    vocab = Vocabulary(tokens, reserved_counts + [c for _, c in kept])
    logger.info(f"Built vocabulary: {len(vocab)} entries, {vocab.total_tokens} tokens, {unk_count} folded into {UNK}")
    return vocab


def bucket_split(pairs: Sequence[DialoguePair], spec: BucketSpec, per_bucket: int, seed: int) -> Dict[str, List[DialoguePair]]:
    """
    Groups pairs by source length and samples at most per_bucket pairs from each
    bucket uniformly without replacement. Sampled pairs keep corpus order.
    """
    eligible: Dict[str, List[DialoguePair]] = {name: [] for name, _, _ in spec.ranges}
    for pair in pairs:
        name = spec.bucket_of(len(pair.source))
        if name is not None:
            eligible[name].append(pair)

    rng = np.random.default_rng(seed)
    sample: Dict[str, List[DialoguePair]] = {}
    for name, _, _ in spec.ranges:
        candidates = eligible[name]
        if not candidates:
            logger.warning(f"Bucket {name} has no eligible pairs")
            sample[name] = []
            continue
        size = min(max(per_bucket, 0), len(candidates))
        chosen = np.sort(rng.choice(len(candidates), size=size, replace=False)) if size else []
        sample[name] = [candidates[i] for i in chosen]
        logger.info(f"Bucket {name}: sampled {size} of {len(candidates)} pairs")
    return sample


# --- File helpers ---

def read_pairs(path: str, raw: bool = False) -> List[DialoguePair]:
    """
    Reads `source<TAB>target` lines. With raw=True both sides go through tokenize(),
    otherwise they are split on spaces. Pairs with an empty side are skipped.
    """
    pairs = []
    skipped = 0
    with open(path, "r", encoding="utf-8") as f:
        for line_no, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            fields = line.split("\t")
            if len(fields) < 2:
                raise DataError(ERROR_MESSAGES["validation"]["bad_pairs_line"].format(line=line_no))
            # A leading bucket label (split output) is ignored
            source, target = fields[-2], fields[-1]
            split = tokenize if raw else str.split
            src, tgt = tuple(split(source)), tuple(split(target))
            if not src or not tgt:
                skipped += 1
                continue
            pairs.append(DialoguePair(src, tgt))
    if skipped:
        logger.warning(f"Skipped {skipped} pairs with an empty side in {path}")
    return pairs


def write_pairs(path: str, sample: Dict[str, List[DialoguePair]]) -> None:
    """Writes a bucketed sample as `bucket<TAB>source<TAB>target` lines."""
    with open(path, "w", encoding="utf-8") as f:
        for name, pairs in sample.items():
            for pair in pairs:
                f.write(f"{name}\t{' '.join(pair.source)}\t{' '.join(pair.target)}\n")


def read_stop_words(path: Optional[str] = None) -> frozenset:
    """One token per line; the bundled list is used when path is None."""
    path = path or DEFAULT_STOP_WORDS_PATH
    with open(path, "r", encoding="utf-8") as f:
        words = frozenset(line.strip() for line in f if line.strip())
    if not words:
        raise DataError(ERROR_MESSAGES["validation"]["empty_stop_list"])
    return words


def conversations(pairs: Iterable[DialoguePair]) -> List[List[List[str]]]:
    """Each pair becomes one document made of its two utterances."""
    return [[list(p.source), list(p.target)] for p in pairs]
