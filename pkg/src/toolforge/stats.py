"""Nonparametric statistics: exact Wilcoxon signed-rank and Bonferroni.

Zero differences are dropped before ranking; ties in |difference| get
midranks. W is the sum of positive ranks. For n_effective <= ``exact_limit``
the two-sided p-value is exact, from the full sign-assignment distribution
(computed by dynamic programming over doubled ranks so midranks stay
integral); above that a normal approximation with tie correction is used.

The doubling rule for the two-sided p, ``min(1, 2 * min(P(W<=w), P(W>=w)))``,
is shared by the exact and approximate branches.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence


@dataclass(frozen=True)
class StatResult:
    W: float
    n_effective: int
    p_two_sided: float
    p_adjusted: float | None = None
    effect_size_r: float | None = None
    degenerate: bool = False
    method: str = "exact"


def bonferroni_adjust(p: float, m: int) -> float:
    """min(1, p * m) for m comparisons."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    return min(1.0, p * m)


def midranks(values: Sequence[float]) -> list[float]:
    """Ranks of values with ties sharing the average of their rank positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j + 2) / 2  # rank positions are 1-based
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _exact_tail_counts(ranks2: list[int], w2: int) -> tuple[int, int]:
    """(#assignments with sum <= w2, #assignments with sum >= w2) over all
    2^n subsets of the doubled ranks."""
    dist: Counter[int] = Counter({0: 1})
    for r in ranks2:
        nxt: Counter[int] = Counter()
        for s, c in dist.items():
            nxt[s] += c
            nxt[s + r] += c
        dist = nxt
    le = sum(c for s, c in dist.items() if s <= w2)
    ge = sum(c for s, c in dist.items() if s >= w2)
    return le, ge


def wilcoxon_signed_rank(
    pairs: Sequence[tuple[float, float]], exact_limit: int = 20
) -> StatResult:
    """Paired two-sided signed-rank test over (x, y) samples."""
    if not pairs:
        raise ValueError("at least one pair is required")
    diffs = [x - y for x, y in pairs if x != y]
    n = len(diffs)
    if n == 0:
        return StatResult(W=0.0, n_effective=0, p_two_sided=1.0, degenerate=True)

    abs_diffs = [abs(d) for d in diffs]
    ranks = midranks(abs_diffs)
    w = sum(r for r, d in zip(ranks, diffs) if d > 0)

    # Normal approximation quantities (also used for the effect size).
    mean = n * (n + 1) / 4
    tie_counts = Counter(abs_diffs).values()
    tie_term = sum(t**3 - t for t in tie_counts)
    variance = n * (n + 1) * (2 * n + 1) / 24 - tie_term / 48
    z = (w - mean) / math.sqrt(variance) if variance > 0 else 0.0
    effect_r = abs(z) / math.sqrt(n) if n >= 6 else None

    if n <= exact_limit:
        ranks2 = [round(2 * r) for r in ranks]
        w2 = round(2 * w)
        le, ge = _exact_tail_counts(ranks2, w2)
        total = 2**n
        p = min(1.0, 2 * min(le, ge) / total)
        method = "exact"
    else:
        p = min(1.0, 2 * (1 - _normal_cdf(abs(z))))
        method = "normal"
    return StatResult(
        W=w, n_effective=n, p_two_sided=p, effect_size_r=effect_r, method=method
    )


def _normal_cdf(x: float) -> float:
    return 0.5 * (1 + math.erf(x / math.sqrt(2)))
