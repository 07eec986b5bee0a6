"""Vocabularies and dense embedding matrices for word and character-trigram units."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .corpus import TokenizedSentence

WORD = "word"
CHAR_TRIGRAM = "char-trigram"
UNIT_KINDS = (WORD, CHAR_TRIGRAM)


def token_trigrams(token: str) -> list[str]:
    """Character trigrams of the token padded as ^token$ (multiset, in order)."""
    padded = f"^{token}$"
    return [padded[i : i + 3] for i in range(len(padded) - 2)]


@dataclass
class Vocabulary:
    units: list[str]
    kind: str
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        if self.kind not in UNIT_KINDS:
            raise ValueError(f"unknown unit kind {self.kind!r}")
        self.index = {u: i for i, u in enumerate(self.units)}
        if len(self.index) != len(self.units):
            raise ValueError("duplicate units in vocabulary")

    def __len__(self) -> int:
        return len(self.units)

    def __contains__(self, unit: str) -> bool:
        return unit in self.index

    def unit_at(self, i: int) -> str:
        return self.units[i]

    def sentence_units(self, sentence: TokenizedSentence) -> list[str]:
        """The unit occurrences this vocabulary reads off a sentence (OOV included)."""
        if self.kind == WORD:
            return sentence.tokens
        units: list[str] = []
        for token in sentence.tokens:
            units.extend(token_trigrams(token))
        return units

    def sentence_indices(self, sentence: TokenizedSentence) -> np.ndarray:
        """Indices of the in-vocabulary unit occurrences of a sentence."""
        idx = self.index
        return np.array(
            [idx[u] for u in self.sentence_units(sentence) if u in idx], dtype=np.int64
        )


def build_vocab(
    corpus: Iterable[TokenizedSentence], kind: str, min_count: int = 1
) -> Vocabulary:
    """Vocabulary of units with frequency >= min_count, ordered by
    (descending frequency, then unit string) for determinism."""
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    counts: dict[str, int] = {}
    n_sentences = 0
    for sent in corpus:
        n_sentences += 1
        if kind == WORD:
            units = sent.tokens
        elif kind == CHAR_TRIGRAM:
            units = [t for token in sent.tokens for t in token_trigrams(token)]
        else:
            raise ValueError(f"unknown unit kind {kind!r}")
        for u in units:
            counts[u] = counts.get(u, 0) + 1
    if n_sentences == 0:
        raise ValueError("cannot build a vocabulary from an empty corpus")
    kept = sorted(
        (u for u, c in counts.items() if c >= min_count),
        key=lambda u: (-counts[u], u),
    )
    if not kept:
        raise ValueError(f"no unit reaches min_count={min_count}")
    return Vocabulary(units=kept, kind=kind)


@dataclass
class EmbeddingMatrix:
    vocab: Vocabulary
    values: np.ndarray

    def __post_init__(self):
        self.values = np.ascontiguousarray(self.values, dtype=np.float64)
        if self.values.ndim != 2 or self.values.shape[0] != len(self.vocab):
            raise ValueError(
                f"matrix shape {self.values.shape} does not match vocabulary size {len(self.vocab)}"
            )
        if not np.all(np.isfinite(self.values)):
            raise ValueError("embedding matrix contains non-finite entries")

    @property
    def dim(self) -> int:
        return self.values.shape[1]


def init_matrix(vocab: Vocabulary, dim: int, seed: int) -> EmbeddingMatrix:
    """Seeded i.i.d. uniform [-0.1, 0.1] initialization; same seed, same matrix."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    rng = np.random.default_rng(seed)
    values = rng.uniform(-0.1, 0.1, size=(len(vocab), dim))
    return EmbeddingMatrix(vocab=vocab, values=values)


def load_pretrained(path: str | os.PathLike, kind: str = WORD) -> EmbeddingMatrix:
    """Load text-format embeddings: optional "<count> <dim>" header, then
    "<unit> v1 ... v_dim" per line, whitespace separated."""
    path = os.fspath(path)
    units: list[str] = []
    rows: list[list[float]] = []
    dim: int | None = None
    seen: set[str] = set()
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            fields = line.split()
            if not fields:
                continue
            if lineno == 1 and len(fields) == 2 and _all_ints(fields):
                continue  # word2vec-style count/dim header
            unit, values = fields[0], fields[1:]
            if dim is None:
                dim = len(values)
                if dim == 0:
                    raise ValueError(f"{path}:{lineno}: row has no values")
            elif len(values) != dim:
                raise ValueError(
                    f"{path}:{lineno}: expected {dim} values, got {len(values)}"
                )
            if unit in seen:
                raise ValueError(f"{path}:{lineno}: duplicate unit {unit!r}")
            seen.add(unit)
            units.append(unit)
            rows.append([float(v) for v in values])
    if not units:
        raise ValueError(f"{path}: no embedding rows found")
    vocab = Vocabulary(units=units, kind=kind)
    return EmbeddingMatrix(vocab=vocab, values=np.array(rows, dtype=np.float64))


def _all_ints(fields: list[str]) -> bool:
    try:
        [int(f) for f in fields]
        return True
    except ValueError:
        return False


def write_store_section(handle: TextIO, store: EmbeddingMatrix) -> None:
    handle.write(f"store {store.vocab.kind} {len(store.vocab)} {store.dim}\n")
    for unit, row in zip(store.vocab.units, store.values):
        # repr() of a Python float is the shortest exact round-trip form
        handle.write(unit + " " + " ".join(repr(float(v)) for v in row) + "\n")


def read_store_section(handle: TextIO) -> EmbeddingMatrix:
    header = handle.readline().split()
    if len(header) != 4 or header[0] != "store":
        raise ValueError(f"malformed store header: {header!r}")
    kind, n, dim = header[1], int(header[2]), int(header[3])
    units = []
    values = np.empty((n, dim), dtype=np.float64)
    for i in range(n):
        fields = handle.readline().split()
        if len(fields) != dim + 1:
            raise ValueError(f"store row {i}: expected {dim + 1} fields, got {len(fields)}")
        units.append(fields[0])
        values[i] = [float(v) for v in fields[1:]]
    return EmbeddingMatrix(vocab=Vocabulary(units=units, kind=kind), values=values)
