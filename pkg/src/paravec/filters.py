"""Pair scoring (trigram overlap, paraphrase score, translation score),
decile splitting, and training-set sampling."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import ParaphrasePair, TokenizedSentence
from .encoders import Encoder, cosine, encode

OVERLAP = "overlap"
PARA = "para"
TRANS = "trans"
CRITERIA = (OVERLAP, PARA, TRANS)


def _word_trigrams(tokens: list[str]) -> Counter:
    return Counter(tuple(tokens[i : i + 3]) for i in range(len(tokens) - 2))


def trigram_overlap(a: TokenizedSentence, b: TokenizedSentence) -> float:
    """Shared word-trigram count over the smaller side's trigram count.

    Multiset semantics: a trigram occurring twice on both sides is shared
    twice.  Either side shorter than 3 tokens has no trigrams, giving 0.0.
    """
    if len(a.tokens) < 3 or len(b.tokens) < 3:
        return 0.0
    ta = _word_trigrams(a.tokens)
    tb = _word_trigrams(b.tokens)
    shared = sum((ta & tb).values())
    return shared / min(sum(ta.values()), sum(tb.values()))


def paraphrase_score(pair: ParaphrasePair, encoder: Encoder) -> float:
    """Cosine of the two sentence encodings (0.0 in zero-vector cases)."""
    return cosine(encode(pair.reference, encoder), encode(pair.translation, encoder))


def translation_score(pair: ParaphrasePair) -> float:
    """Decoder log-probability normalized by translation token count."""
    if pair.translation_logprob is None:
        raise ValueError("pair has no translation logprob")
    n = len(pair.translation.tokens)
    if n == 0:
        raise ValueError("translation has no tokens")
    return pair.translation_logprob / n


@dataclass
class DecileSplit:
    """Ten contiguous score-ascending bins of original indices."""

    bins: list[list[int]]

    def bin_of(self) -> dict[int, int]:
        return {i: b for b, members in enumerate(self.bins) for i in members}


def split_deciles(scores: Sequence[float]) -> DecileSplit:
    """Stable ascending sort (ties keep input order), then contiguous tenths.

    Bin sizes are ceil(n/10) or floor(n/10), larger bins first, so bin 0
    holds the lowest-scoring tenth.
    """
    n = len(scores)
    if n < 10:
        raise ValueError(f"need at least 10 items to split into tenths, got {n}")
    order = np.argsort(np.asarray(scores, dtype=np.float64), kind="stable")
    q, r = divmod(n, 10)
    sizes = [q + 1] * r + [q] * (10 - r)
    bins = []
    pos = 0
    for size in sizes:
        bins.append([int(i) for i in order[pos : pos + size]])
        pos += size
    return DecileSplit(bins=bins)


def sample_training_set(
    pairs: Sequence[ParaphrasePair],
    scores: Sequence[float],
    bins: Sequence[int],
    max_len: int,
    n: int,
    seed: int,
) -> tuple[list[ParaphrasePair], int]:
    """Seeded uniform sample (without replacement) of length-compliant pairs
    from the given decile bins; returns (sample in corpus order, shortfall)."""
    if len(pairs) != len(scores):
        raise ValueError("pairs and scores differ in length")
    if max_len < 1 or n < 1:
        raise ValueError("max_len and n must be positive")
    split = split_deciles(scores)
    eligible = sorted(
        i
        for b in bins
        for i in split.bins[b]
        if len(pairs[i].reference.tokens) <= max_len
        and len(pairs[i].translation.tokens) <= max_len
    )
    if len(eligible) <= n:
        return [pairs[i] for i in eligible], n - len(eligible)
    rng = np.random.default_rng(seed)
    chosen = rng.choice(len(eligible), size=n, replace=False)
    return [pairs[eligible[i]] for i in sorted(chosen)], 0
