"""Averaging sentence encoders: word, character-trigram, additive, concatenative."""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .corpus import TokenizedSentence
from .store import (
    CHAR_TRIGRAM,
    WORD,
    EmbeddingMatrix,
    read_store_section,
    write_store_section,
)

WORD_AVG = "word_avg"
TRIGRAM_AVG = "trigram_avg"
ADDITIVE = "additive"
CONCAT = "concat"
ENCODER_KINDS = (WORD_AVG, TRIGRAM_AVG, ADDITIVE, CONCAT)

MODEL_MAGIC = "paranmt-model"
MODEL_VERSION = "v1"


@dataclass
class Encoder:
    """A compositional sentence encoder: unit stores plus a combination rule.

    word_avg and trigram_avg average the embeddings of in-vocabulary unit
    occurrences; additive sums the two component vectors; concat concatenates
    them.  A sentence with no in-vocabulary units encodes to the zero vector.
    """

    kind: str
    word_store: EmbeddingMatrix | None = None
    trigram_store: EmbeddingMatrix | None = None

    def __post_init__(self):
        if self.kind not in ENCODER_KINDS:
            raise ValueError(f"unknown encoder kind {self.kind!r}")
        if self.kind in (WORD_AVG, ADDITIVE, CONCAT) and self.word_store is None:
            raise ValueError(f"{self.kind} requires a word store")
        if self.kind in (TRIGRAM_AVG, ADDITIVE, CONCAT) and self.trigram_store is None:
            raise ValueError(f"{self.kind} requires a trigram store")
        if self.kind == ADDITIVE and self.word_store.dim != self.trigram_store.dim:
            raise ValueError(
                "additive combination needs equal dims, got "
                f"{self.word_store.dim} and {self.trigram_store.dim}"
            )

    @property
    def stores(self) -> dict[str, EmbeddingMatrix]:
        """Active component stores keyed by unit kind, in fixed order."""
        out: dict[str, EmbeddingMatrix] = {}
        if self.kind in (WORD_AVG, ADDITIVE, CONCAT):
            out[WORD] = self.word_store
        if self.kind in (TRIGRAM_AVG, ADDITIVE, CONCAT):
            out[CHAR_TRIGRAM] = self.trigram_store
        return out

    @property
    def output_dim(self) -> int:
        if self.kind == WORD_AVG:
            return self.word_store.dim
        if self.kind == TRIGRAM_AVG:
            return self.trigram_store.dim
        if self.kind == ADDITIVE:
            return self.word_store.dim
        return self.word_store.dim + self.trigram_store.dim


def flat_indices(
    store: EmbeddingMatrix, sentences: Sequence[TokenizedSentence]
) -> tuple[np.ndarray, np.ndarray]:
    """Flattened in-vocabulary unit indices plus segment offsets for a batch."""
    per_sentence = [store.vocab.sentence_indices(s) for s in sentences]
    lengths = np.fromiter(
        (ix.size for ix in per_sentence), dtype=np.int64, count=len(per_sentence)
    )
    offsets = np.zeros(len(sentences) + 1, dtype=np.int64)
    np.cumsum(lengths, out=offsets[1:])
    if per_sentence:
        idx = np.concatenate(per_sentence)
    else:
        idx = np.empty(0, dtype=np.int64)
    return idx, offsets


def component_vectors(
    encoder: Encoder, sentences: Sequence[TokenizedSentence]
) -> dict[str, np.ndarray]:
    """Mean-pooled component vectors per store, before combination."""
    out = {}
    for unit_kind, store in encoder.stores.items():
        idx, offsets = flat_indices(store, sentences)
        out[unit_kind] = kernels.mean_rows(store.values, idx, offsets)
    return out


def combine(encoder: Encoder, components: dict[str, np.ndarray]) -> np.ndarray:
    if encoder.kind == WORD_AVG:
        return components[WORD]
    if encoder.kind == TRIGRAM_AVG:
        return components[CHAR_TRIGRAM]
    if encoder.kind == ADDITIVE:
        return components[WORD] + components[CHAR_TRIGRAM]
    return np.hstack([components[WORD], components[CHAR_TRIGRAM]])


def encode_batch(sentences: Sequence[TokenizedSentence], encoder: Encoder) -> np.ndarray:
    """Encode a batch of sentences into a (n, output_dim) matrix."""
    return combine(encoder, component_vectors(encoder, sentences))


def encode(sentence: TokenizedSentence, encoder: Encoder) -> np.ndarray:
    return encode_batch([sentence], encoder)[0]


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity in [-1, 1]; 0.0 when either vector has zero norm."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = float(np.dot(u, u))
    nv = float(np.dot(v, v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    # sqrt(nu*nv) keeps cosine(u, u) at exactly 1.0
    c = float(np.dot(u, v)) / float(np.sqrt(nu * nv))
    return min(1.0, max(-1.0, c))


def save_model(path: str | os.PathLike, encoder: Encoder) -> None:
    """Write a model file; save -> load preserves every value exactly."""
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        handle.write(f"{MODEL_MAGIC} {MODEL_VERSION} {encoder.kind} {encoder.output_dim}\n")
        for store in encoder.stores.values():
            write_store_section(handle, store)


def load_model(path: str | os.PathLike) -> Encoder:
    with open(path, encoding="utf-8") as handle:
        header = handle.readline().split()
        if len(header) != 4 or header[0] != MODEL_MAGIC or header[1] != MODEL_VERSION:
            raise ValueError(f"{os.fspath(path)}: not a {MODEL_MAGIC} {MODEL_VERSION} file")
        kind = header[2]
        if kind not in ENCODER_KINDS:
            raise ValueError(f"{os.fspath(path)}: unknown encoder kind {kind!r}")
        stores = {}
        n_stores = 2 if kind in (ADDITIVE, CONCAT) else 1
        for _ in range(n_stores):
            store = read_store_section(handle)
            stores[store.vocab.kind] = store
    encoder = Encoder(
        kind=kind,
        word_store=stores.get(WORD),
        trigram_store=stores.get(CHAR_TRIGRAM),
    )
    if encoder.output_dim != int(header[3]):
        raise ValueError(
            f"{os.fspath(path)}: header dim {header[3]} does not match stores"
        )
    return encoder
