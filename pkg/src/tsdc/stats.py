"""Two-sided Wilcoxon rank-sum test.

Small samples use the exact null distribution of the rank sum, counted over
all equally likely assignments of the pooled (mid)ranks to the first sample;
larger ones use the normal approximation with tie and continuity
corrections.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.stats import rankdata

__all__ = ["EXACT_MAX_TOTAL", "RankSumResult", "rank_sum_test", "wilcoxon_rank_sum", "exact_null_counts"]

# pooled size up to which the exact distribution is used by default
EXACT_MAX_TOTAL = 20


@dataclass(frozen=True)
class RankSumResult:
    statistic: float  # rank sum of the first sample
    p_value: float
    method: str  # "exact" or "normal"


def exact_null_counts(doubled_ranks: Sequence[int], n1: int) -> dict[int, int]:
    """Number of size-``n1`` subsets per doubled-rank sum."""
    # table[k] maps a doubled sum to the number of k-subsets reaching it
    table: list[dict[int, int]] = [dict() for _ in range(n1 + 1)]
    table[0][0] = 1
    for r in doubled_ranks:
        for k in range(n1, 0, -1):
            src, dst = table[k - 1], table[k]
            for s, c in src.items():
                dst[s + r] = dst.get(s + r, 0) + c
    return table[n1]


def rank_sum_test(a: Sequence[float], b: Sequence[float], method: str = "auto") -> RankSumResult:
    """Rank-sum test of ``a`` against ``b``.

    ``method`` is ``"exact"``, ``"normal"`` or ``"auto"`` (exact when the
    pooled size is at most :data:`EXACT_MAX_TOTAL`).
    """
    x = np.asarray(a, dtype=float).ravel()
    y = np.asarray(b, dtype=float).ravel()
    if x.size < 1 or y.size < 1:
        raise ValueError("both samples need at least one observation")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("samples must be finite")
    if method not in ("auto", "exact", "normal"):
        raise ValueError(f"unknown method {method!r}")
    n1, n2 = x.size, y.size
    total = n1 + n2
    ranks = rankdata(np.concatenate([x, y]))  # midranks, multiples of 1/2
    doubled = [int(round(2 * r)) for r in ranks]
    w2 = sum(doubled[:n1])
    centre2 = n1 * (total + 1)  # twice the null mean
    if method == "auto":
        method = "exact" if total <= EXACT_MAX_TOTAL else "normal"

    if method == "exact":
        counts = exact_null_counts(doubled, n1)
        dev = abs(w2 - centre2)
        hits = sum(c for s, c in counts.items() if abs(s - centre2) >= dev)
        p = Fraction(hits, math.comb(total, n1))
        return RankSumResult(w2 / 2, float(min(p, Fraction(1))), "exact")

    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(np.sum(tie_counts**3 - tie_counts)) / (total * (total - 1))
    var = n1 * n2 / 12.0 * ((total + 1) - tie_term)
    if var <= 0:
        return RankSumResult(w2 / 2, 1.0, "normal")
    z = max(abs(w2 - centre2) / 2 - 0.5, 0.0) / math.sqrt(var)
    return RankSumResult(w2 / 2, min(1.0, math.erfc(z / math.sqrt(2.0))), "normal")


def wilcoxon_rank_sum(a: Sequence[float], b: Sequence[float], method: str = "auto") -> float:
    """Two-sided p-value of the rank-sum test."""
    return rank_sum_test(a, b, method).p_value
