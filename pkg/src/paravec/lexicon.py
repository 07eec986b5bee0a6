"""Paraphrase lexicon extraction via cross-sentence and adjusted PMI.

Counting conventions (pinned):

- Only pairs with paraphrase score >= ``min_para_score`` and both sides at
  most ``max_len`` tokens contribute.
- Cross counts are over unique types: each (u in reference, v in translation)
  combination increments #(u,v) and #(v,u) by one and the cross total by two.
- Within-sentence counts accumulate per side (references and translations
  separately) over unordered pairs of distinct types.
- The marginal #(u) is the number of sentences containing u, both sides
  pooled.
- PMIs use natural log.  PMI_cross(u,v) = ln(#(u,v) * #(.,.) / (#(u) * #(v))).
  A side's ordinary PMI is ln(joint * side_total / (#(u) * #(v))); when the
  pair never co-occurs on that side it contributes the floor ln(1/side_total)
  (0.0 if the side has no co-occurrences at all).  Adjusted PMI subtracts the
  mean of the two side PMIs from the cross PMI.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .corpus import ParaphrasePair
from .encoders import Encoder
from .filters import paraphrase_score

REF_SIDE = "ref"
TRANS_SIDE = "trans"


@dataclass
class PmiCounts:
    cross: dict[tuple[str, str], int] = field(default_factory=dict)
    cross_total: int = 0
    side_joint: dict[str, dict[tuple[str, str], int]] = field(
        default_factory=lambda: {REF_SIDE: {}, TRANS_SIDE: {}}
    )
    side_total: dict[str, int] = field(default_factory=lambda: {REF_SIDE: 0, TRANS_SIDE: 0})
    sent_freq: dict[str, int] = field(default_factory=dict)
    n_pairs_counted: int = 0
    n_pairs_filtered: int = 0


@dataclass
class LexiconEntry:
    u: str
    v: str
    pmi_cross: float
    pmi_adjusted: float
    joint_count: int


def count_pmi(
    pairs: Iterable[ParaphrasePair],
    scorer: Encoder | None = None,
    min_para_score: float = 0.35,
    max_len: int = 30,
) -> PmiCounts:
    """Accumulate PMI count tables over the surviving pairs.

    Pairs scoring below ``min_para_score`` (when a scorer is given) or with a
    side longer than ``max_len`` tokens are dropped.
    """
    counts = PmiCounts()
    for pair in pairs:
        if len(pair.reference.tokens) > max_len or len(pair.translation.tokens) > max_len:
            counts.n_pairs_filtered += 1
            continue
        if scorer is not None and paraphrase_score(pair, scorer) < min_para_score:
            counts.n_pairs_filtered += 1
            continue
        counts.n_pairs_counted += 1
        ref_types = set(pair.reference.tokens)
        trans_types = set(pair.translation.tokens)
        for u in ref_types:
            for v in trans_types:
                counts.cross[(u, v)] = counts.cross.get((u, v), 0) + 1
                counts.cross[(v, u)] = counts.cross.get((v, u), 0) + 1
                counts.cross_total += 2
        for side, types in ((REF_SIDE, ref_types), (TRANS_SIDE, trans_types)):
            ordered = sorted(types)
            table = counts.side_joint[side]
            for i, a in enumerate(ordered):
                for b in ordered[i + 1 :]:
                    table[(a, b)] = table.get((a, b), 0) + 1
                    counts.side_total[side] += 1
        for u in ref_types:
            counts.sent_freq[u] = counts.sent_freq.get(u, 0) + 1
        for v in trans_types:
            counts.sent_freq[v] = counts.sent_freq.get(v, 0) + 1
    return counts


def pmi_cross(counts: PmiCounts, u: str, v: str) -> float:
    """ln(#(u,v) * #(.,.) / (#(u) * #(v))); KeyError when #(u,v) is zero."""
    joint = counts.cross.get((u, v), 0)
    if joint == 0:
        raise KeyError(f"no cross count for ({u!r}, {v!r})")
    return math.log(joint * counts.cross_total / (counts.sent_freq[u] * counts.sent_freq[v]))


def _side_pmi(counts: PmiCounts, side: str, u: str, v: str) -> float:
    total = counts.side_total[side]
    if total == 0:
        return 0.0
    joint = counts.side_joint[side].get((min(u, v), max(u, v)), 0)
    if joint == 0:
        return math.log(1.0 / total)
    return math.log(joint * total / (counts.sent_freq[u] * counts.sent_freq[v]))


def pmi_adjusted(counts: PmiCounts, u: str, v: str) -> float:
    """Cross-sentence PMI minus the mean of the two per-side ordinary PMIs."""
    side_mean = (_side_pmi(counts, REF_SIDE, u, v) + _side_pmi(counts, TRANS_SIDE, u, v)) / 2.0
    return pmi_cross(counts, u, v) - side_mean


def build_lexicon(counts: PmiCounts, min_joint: int = 10) -> list[LexiconEntry]:
    """Ranked entries (adjusted PMI descending) with joint count >= min_joint.

    Counts are symmetric by construction, so each unordered pair appears once
    with u <= v.
    """
    entries = []
    for (u, v), joint in counts.cross.items():
        if u > v or joint < min_joint:
            continue
        entries.append(
            LexiconEntry(
                u=u,
                v=v,
                pmi_cross=pmi_cross(counts, u, v),
                pmi_adjusted=pmi_adjusted(counts, u, v),
                joint_count=joint,
            )
        )
    entries.sort(key=lambda e: (-e.pmi_adjusted, -e.pmi_cross, e.u, e.v))
    return entries


def eval_simlex(
    lexicon: Sequence[LexiconEntry], word_pairs: Sequence[tuple[str, str, float]]
) -> float:
    """Spearman's rho between gold similarities and lexicon predictions.

    A pair found in either order predicts its adjusted PMI (the mean when
    both orders are present); unseen pairs predict 0.
    """
    scores: dict[tuple[str, str], float] = {}
    for entry in lexicon:
        scores[(entry.u, entry.v)] = entry.pmi_adjusted
    preds = []
    gold = []
    for u, v, g in word_pairs:
        found = [scores[key] for key in ((u, v), (v, u)) if key in scores]
        preds.append(sum(found) / len(found) if found else 0.0)
        gold.append(g)
    from .evaluation import spearman

    return spearman(preds, gold)


def write_lexicon(path: str | os.PathLike, entries: Iterable[LexiconEntry], header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as handle:
        if header is not None:
            handle.write(header + "\n")
        for e in entries:
            handle.write(
                f"{e.u}\t{e.v}\t{e.pmi_adjusted!r}\t{e.pmi_cross!r}\t{e.joint_count}\n"
            )


def read_lexicon(path: str | os.PathLike) -> list[LexiconEntry]:
    entries = []
    path = os.fspath(path)
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if line.startswith("#") or not line:
                continue
            cols = line.split("\t")
            if len(cols) != 5:
                raise ValueError(f"{path}:{lineno}: expected 5 columns, got {len(cols)}")
            entries.append(
                LexiconEntry(
                    u=cols[0],
                    v=cols[1],
                    pmi_adjusted=float(cols[2]),
                    pmi_cross=float(cols[3]),
                    joint_count=int(cols[4]),
                )
            )
    return entries


def read_word_pairs(path: str | os.PathLike) -> list[tuple[str, str, float]]:
    """SimLex-style gold file: rows ``word1 \\t word2 \\t similarity``."""
    out = []
    path = os.fspath(path)
    with open(path, encoding="utf-8") as handle:
        for lineno, line in enumerate(handle, start=1):
            line = line.rstrip("\n")
            if line.startswith("#") or not line:
                continue
            cols = line.split("\t")
            if len(cols) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(cols)}")
            gold = float(cols[2])
            if math.isnan(gold) or math.isinf(gold):
                raise ValueError(f"{path}:{lineno}: gold similarity must be finite")
            out.append((cols[0], cols[1], gold))
    return out
