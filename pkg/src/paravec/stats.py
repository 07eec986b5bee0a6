"""Corpus comparison statistics: sentence length, IDF, entropies, parse templates.

Conventions pinned here: IDF is ln(N/df) with one sentence per document and
no smoothing; unknown tokens score ln(N) at lookup time; entropies are base 2;
standard deviations are population (divide by n).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .corpus import ParaphrasePair, ParsedSentence, TokenizedSentence


class ParseError(ValueError):
    """A bracketed parse is malformed."""


@dataclass
class IdfTable:
    idf: dict[str, float]
    n_documents: int

    def lookup(self, token: str) -> float:
        """IDF of a token; unknown tokens fall back to ln(N) (df treated as 1)."""
        return self.idf.get(token, math.log(self.n_documents))


@dataclass
class CorpusReport:
    n_sentences: int
    avg_length: float
    std_length: float
    avg_idf: float
    std_idf: float
    vocab_entropy_bits: float
    avg_para_score: float | None = None
    std_para_score: float | None = None
    parse_entropy_bits: float | None = None


def _mean_std(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = sum(values) / n
    var = sum((v - mean) ** 2 for v in values) / n
    return mean, math.sqrt(var)


def build_idf(documents: Iterable[TokenizedSentence]) -> IdfTable:
    """Document-frequency table over a sentence stream, one document per sentence."""
    df: dict[str, int] = {}
    n = 0
    for sent in documents:
        n += 1
        for token in set(sent.tokens):
            df[token] = df.get(token, 0) + 1
    if n == 0:
        raise ValueError("cannot build IDF table from an empty stream")
    return IdfTable(idf={t: math.log(n / c) for t, c in df.items()}, n_documents=n)


def avg_idf(corpus: Iterable[TokenizedSentence], table: IdfTable) -> tuple[float, float]:
    """Mean and population std of per-sentence mean IDF.

    Sentences with no tokens are skipped (a mean over zero tokens is undefined).
    """
    if not table.idf:
        raise ValueError("IDF table is empty")
    per_sentence = [
        sum(table.lookup(t) for t in sent.tokens) / len(sent.tokens)
        for sent in corpus
        if sent.tokens
    ]
    if not per_sentence:
        raise ValueError("corpus has no non-empty sentences")
    return _mean_std(per_sentence)


def _entropy_bits(counts: dict[str, int]) -> float:
    total = sum(counts.values())
    if total == 0:
        raise ValueError("cannot compute entropy of an empty distribution")
    # Sorted keys make the float summation order independent of insertion order.
    h = 0.0
    for key in sorted(counts):
        p = counts[key] / total
        h -= p * math.log2(p)
    return h


def vocab_entropy(corpus: Iterable[TokenizedSentence]) -> float:
    """Base-2 Shannon entropy of the unigram token-type distribution."""
    counts: dict[str, int] = {}
    for sent in corpus:
        for token in sent.tokens:
            counts[token] = counts.get(token, 0) + 1
    return _entropy_bits(counts)


def _parse_node(text: str, pos: int) -> tuple[str, list, int]:
    """Parse one '(' label child* ')' node starting at text[pos] == '('."""
    assert text[pos] == "("
    pos += 1
    # label: run of characters up to whitespace or a paren
    start = pos
    while pos < len(text) and not text[pos].isspace() and text[pos] not in "()":
        pos += 1
    label = text[start:pos]
    if not label:
        raise ParseError(f"missing node label at position {start}")
    children: list = []
    while True:
        while pos < len(text) and text[pos].isspace():
            pos += 1
        if pos >= len(text):
            raise ParseError("unbalanced parentheses: unexpected end of input")
        if text[pos] == ")":
            return label, children, pos + 1
        if text[pos] == "(":
            child_label, child_children, pos = _parse_node(text, pos)
            children.append((child_label, child_children))
        else:
            # bare leaf word; recorded as None so templates can skip it
            start = pos
            while pos < len(text) and not text[pos].isspace() and text[pos] not in "()":
                pos += 1
            children.append((None, text[start:pos]))


def parse_template(parse: ParsedSentence | str) -> str:
    """Reduce a bracketed parse to its root label plus ordered child labels.

    "(S (NP (DT the) (NN dog)) (VP (VBZ runs)))" becomes "(S(NP)(VP))"; all
    structure below the root's children is discarded, as are bare leaf words.
    """
    text = parse.bracketed_parse if isinstance(parse, ParsedSentence) else parse
    pos = 0
    while pos < len(text) and text[pos].isspace():
        pos += 1
    if pos >= len(text) or text[pos] != "(":
        raise ParseError("parse must start with '('")
    label, children, pos = _parse_node(text, pos)
    while pos < len(text) and text[pos].isspace():
        pos += 1
    if pos != len(text):
        raise ParseError(f"trailing content after root at position {pos}")
    parts = [f"({c_label})" for c_label, _ in children if c_label is not None]
    return f"({label}" + "".join(parts) + ")"


def parse_entropy(corpus: Iterable[ParsedSentence]) -> float:
    """Base-2 entropy of the empirical distribution over parse templates."""
    counts: dict[str, int] = {}
    n = 0
    for i, parsed in enumerate(corpus, start=1):
        n += 1
        try:
            template = parse_template(parsed)
        except ParseError as exc:
            raise ParseError(f"line {i}: {exc}") from None
        counts[template] = counts.get(template, 0) + 1
    if n == 0:
        raise ValueError("cannot compute parse entropy of an empty corpus")
    return _entropy_bits(counts)


def corpus_report(
    corpus: Sequence[TokenizedSentence] | Sequence[ParaphrasePair],
    idf_table: IdfTable,
    parses: Sequence[ParsedSentence] | None = None,
    encoder=None,
) -> CorpusReport:
    """Assemble the per-corpus comparison statistics.

    When paraphrase pairs are supplied, length/IDF/vocabulary statistics are
    computed over the reference sides, and the paraphrase-score columns are
    filled if an encoder is supplied as well.
    """
    if len(corpus) == 0:
        raise ValueError("empty corpus")
    pairs: Sequence[ParaphrasePair] | None = None
    if isinstance(corpus[0], ParaphrasePair):
        pairs = corpus  # type: ignore[assignment]
        sentences = [p.reference for p in pairs]
    else:
        sentences = list(corpus)  # type: ignore[arg-type]

    avg_len, std_len = _mean_std([len(s.tokens) for s in sentences])
    mean_idf, std_idf = avg_idf(sentences, idf_table)
    report = CorpusReport(
        n_sentences=len(sentences),
        avg_length=avg_len,
        std_length=std_len,
        avg_idf=mean_idf,
        std_idf=std_idf,
        vocab_entropy_bits=vocab_entropy(sentences),
    )
    if pairs is not None and encoder is not None:
        from .filters import paraphrase_score

        scores = [paraphrase_score(p, encoder) for p in pairs]
        report.avg_para_score, report.std_para_score = _mean_std(scores)
    if parses is not None:
        report.parse_entropy_bits = parse_entropy(parses)
    return report
