"""Reading, tokenizing and writing paraphrase-pair and evaluation corpora.

All file formats are plain UTF-8 TSV with LF line endings and no header.
Lines starting with ``#`` are provenance comments and are skipped by every
loader here.
"""

from __future__ import annotations

import math
import os
import unicodedata
from dataclasses import dataclass
from typing import Iterable, Iterator


class CorpusFormatError(ValueError):
    """A corpus file violates its format contract (names file/line when known)."""


@dataclass
class TokenizedSentence:
    raw: str
    tokens: list[str]

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class ParaphrasePair:
    reference: TokenizedSentence
    translation: TokenizedSentence
    translation_logprob: float | None = None


@dataclass
class StsExample:
    sentence_a: TokenizedSentence
    sentence_b: TokenizedSentence
    gold: float


@dataclass
class ParsedSentence:
    sentence: TokenizedSentence
    bracketed_parse: str


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize(raw: str) -> TokenizedSentence:
    """Lowercase, split on Unicode whitespace, isolate punctuation characters.

    Every character of Unicode category P becomes its own token, so
    "it's gonna be ...... classic." tokenizes to
    [it ' s gonna be . . . . . . classic .].  Deterministic; empty input
    yields an empty token list.
    """
    tokens: list[str] = []
    current: list[str] = []
    for ch in raw.lower():
        if ch.isspace():
            if current:
                tokens.append("".join(current))
                current = []
        elif _is_punct(ch):
            if current:
                tokens.append("".join(current))
                current = []
            tokens.append(ch)
        else:
            current.append(ch)
    if current:
        tokens.append("".join(current))
    return TokenizedSentence(raw=raw, tokens=tokens)


def _parse_logprob(text: str, where: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise CorpusFormatError(f"{where}: unparsable logprob {text!r}") from None
    if math.isnan(value) or math.isinf(value) or value > 0.0:
        raise CorpusFormatError(f"{where}: logprob must be finite and <= 0, got {text!r}")
    return value


class PairReader:
    """Streams ParaphrasePair records from a pairs TSV.

    Lines have 2 or 3 tab-separated columns: reference, translation and an
    optional decoder log-probability.  Pairs where either side tokenizes to
    nothing are counted in ``n_skipped`` and not yielded.  Single-consumer;
    create one reader per iteration.
    """

    def __init__(self, path: str | os.PathLike):
        self.path = os.fspath(path)
        self.n_skipped = 0

    def __iter__(self) -> Iterator[ParaphrasePair]:
        with open(self.path, encoding="utf-8") as handle:
            for lineno, line in enumerate(handle, start=1):
                line = line.rstrip("\n")
                if line.startswith("#"):
                    continue
                cols = line.split("\t")
                if len(cols) not in (2, 3):
                    raise CorpusFormatError(
                        f"{self.path}:{lineno}: expected 2 or 3 columns, got {len(cols)}"
                    )
                logprob = None
                if len(cols) == 3:
                    logprob = _parse_logprob(cols[2], f"{self.path}:{lineno}")
                pair = ParaphrasePair(
                    reference=tokenize(cols[0]),
                    translation=tokenize(cols[1]),
                    translation_logprob=logprob,
                )
                if not pair.reference.tokens or not pair.translation.tokens:
                    self.n_skipped += 1
                    continue
                yield pair


def load_pairs(path: str | os.PathLike) -> tuple[list[ParaphrasePair], int]:
    """Load a pairs TSV; returns (pairs, number of degenerate lines skipped)."""
    reader = PairReader(path)
    pairs = list(reader)
    return pairs, reader.n_skipped


def format_pair(pair: ParaphrasePair) -> str:
    cols = [pair.reference.raw, pair.translation.raw]
    if pair.translation_logprob is not None:
        cols.append(repr(pair.translation_logprob))
    return "\t".join(cols)


def write_pairs(path: str | os.PathLike, pairs: Iterable[ParaphrasePair], header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        if header is not None:
            handle.write(header + "\n")
        for pair in pairs:
            handle.write(format_pair(pair) + "\n")


def load_sts(manifest_path: str | os.PathLike) -> dict[tuple[str, str], list[StsExample]]:
    """Load STS data grouped by (year, dataset-name), preserving file order.

    The manifest has rows ``data-file-path \\t year \\t name``; relative data
    paths are resolved against the manifest's directory.  Each data file has
    rows ``sentence_a \\t sentence_b \\t gold`` with gold in [0, 5].
    """
    manifest_path = os.fspath(manifest_path)
    base = os.path.dirname(os.path.abspath(manifest_path))
    groups: dict[tuple[str, str], list[StsExample]] = {}
    with open(manifest_path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if line.startswith("#") or not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise CorpusFormatError(
                    f"{manifest_path}:{lineno}: expected 3 columns, got {len(cols)}"
                )
            data_path, year, name = cols
            if not os.path.isabs(data_path):
                data_path = os.path.join(base, data_path)
            key = (year, name)
            groups.setdefault(key, []).extend(_load_sts_file(data_path))
    if not groups:
        raise CorpusFormatError(f"{manifest_path}: manifest lists no datasets")
    return groups


def _load_sts_file(path: str) -> list[StsExample]:
    examples = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise CorpusFormatError(f"{path}:{lineno}: expected 3 columns, got {len(cols)}")
            try:
                gold = float(cols[2])
            except ValueError:
                raise CorpusFormatError(f"{path}:{lineno}: non-numeric gold {cols[2]!r}") from None
            if math.isnan(gold) or not 0.0 <= gold <= 5.0:
                raise CorpusFormatError(f"{path}:{lineno}: gold {cols[2]} outside [0, 5]")
            examples.append(StsExample(tokenize(cols[0]), tokenize(cols[1]), gold))
    return examples


def load_parsed(path: str | os.PathLike) -> list[ParsedSentence]:
    """Load a parsed corpus: rows ``sentence \\t bracketed-parse``."""
    path = os.fspath(path)
    out = []
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            cols = line.split("\t")
            if len(cols) != 2:
                raise CorpusFormatError(f"{path}:{lineno}: expected 2 columns, got {len(cols)}")
            out.append(ParsedSentence(tokenize(cols[0]), cols[1]))
    return out


def load_sentences(path: str | os.PathLike) -> list[TokenizedSentence]:
    """Load a plain text corpus, one sentence per line."""
    out = []
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if line.startswith("#"):
                continue
            out.append(tokenize(line))
    return out
