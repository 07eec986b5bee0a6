"""Correlation measures and the STS evaluation harness."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import StsExample
from .encoders import Encoder, cosine, encode_batch


def _as_vector(x: Sequence[float], name: str) -> np.ndarray:
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    return v


def pearson(x: Sequence[float], y: Sequence[float]) -> float:
    """Sample Pearson correlation; errors on constant input."""
    xv = _as_vector(x, "x")
    yv = _as_vector(y, "y")
    if xv.size != yv.size:
        raise ValueError(f"length mismatch: {xv.size} vs {yv.size}")
    if xv.size < 2:
        raise ValueError("need at least 2 points")
    xc = xv - xv.mean()
    yc = yv - yv.mean()
    denom = np.sqrt((xc * xc).sum() * (yc * yc).sum())
    if denom == 0.0:
        raise ValueError("correlation undefined: constant input")
    r = float((xc * yc).sum() / denom)
    return min(1.0, max(-1.0, r))


def rank_with_ties(x: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    xv = _as_vector(x, "x")
    order = np.argsort(xv, kind="stable")
    ranks = np.empty(xv.size, dtype=np.float64)
    i = 0
    while i < xv.size:
        j = i
        while j + 1 < xv.size and xv[order[j + 1]] == xv[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Spearman's rho: Pearson correlation of tie-averaged ranks."""
    return pearson(rank_with_ties(x), rank_with_ties(y))


@dataclass
class EvalReport:
    """Per-dataset Pearson r plus unweighted per-year and grand means."""

    rows: list[tuple[str, str, int, float]]  # (year, dataset, n, r)
    year_means: dict[str, float]
    grand_mean: float


def evaluate_sts(
    groups: dict[tuple[str, str], list[StsExample]], encoder: Encoder
) -> EvalReport:
    """Score every dataset by cosine of independently encoded sentences.

    Gold values are read only to correlate against; nothing is trained or
    tuned here.
    """
    rows = []
    by_year: dict[str, list[float]] = {}
    for (year, name), examples in groups.items():
        if not examples:
            raise ValueError(f"dataset ({year}, {name}) is empty")
        a = encode_batch([e.sentence_a for e in examples], encoder)
        b = encode_batch([e.sentence_b for e in examples], encoder)
        preds = [cosine(a[i], b[i]) for i in range(len(examples))]
        gold = [e.gold for e in examples]
        r = pearson(preds, gold)
        rows.append((year, name, len(examples), r))
        by_year.setdefault(year, []).append(r)
    year_means = {year: sum(rs) / len(rs) for year, rs in by_year.items()}
    all_r = [r for _, _, _, r in rows]
    return EvalReport(rows=rows, year_means=year_means, grand_mean=sum(all_r) / len(all_r))
