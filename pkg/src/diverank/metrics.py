"""Per-list diversity and relevance metrics.

All functions score one user's list; averaging across users is left to the
caller. Every metric lies in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, Sequence

from .aspects import DistanceModel, UserAspects
from .errors import EmptyList, InvalidAlpha

DEFAULT_ALPHA = 0.5
# gains closer than this count as tied in the greedy ideal (ties: lower item id)
TIE_EPS = 1e-12


@dataclass(frozen=True)
class MetricValue:
    name: str
    n: int
    value: float


def ild(items: Sequence[int], distance_model: DistanceModel) -> float:
    """Mean distance over unordered pairs; 0 for a single item."""
    items = list(items)
    if not items:
        raise EmptyList("ILD of an empty list is undefined")
    if len(items) == 1:
        return 0.0
    D = distance_model.matrix(items)
    n = len(items)
    total = math.fsum(D[r, c] for r in range(n) for c in range(r + 1, n))
    return total / (n * (n - 1) / 2)


def _discount(rank: int) -> float:
    return 1.0 / math.log2(rank + 1)


def _relevant_aspects(
    i: int,
    aspects: Sequence[Hashable],
    membership: Mapping[Hashable, frozenset[int]],
    rel_u: frozenset[int],
) -> list[int]:
    if i not in rel_u:
        return []
    return [k for k, a in enumerate(aspects) if i in membership[a]]


def alpha_dcg(
    items: Sequence[int],
    aspects: Sequence[Hashable],
    membership: Mapping[Hashable, frozenset[int]],
    rel_u: frozenset[int],
    alpha: float = DEFAULT_ALPHA,
) -> float:
    """Unnormalized alpha-DCG: redundancy-discounted aspect gains."""
    seen = [0] * len(aspects)
    total = 0.0
    for rank, i in enumerate(items, start=1):
        gain = 0.0
        for k in _relevant_aspects(i, aspects, membership, rel_u):
            gain += (1.0 - alpha) ** seen[k]
            seen[k] += 1
        total += gain * _discount(rank)
    return total


def ideal_alpha_dcg(
    n: int,
    aspects: Sequence[Hashable],
    membership: Mapping[Hashable, frozenset[int]],
    rel_u: frozenset[int],
    alpha: float = DEFAULT_ALPHA,
) -> float:
    """Greedy approximation of the best alpha-DCG over lists of length ``n``.

    Only relevant items can earn gain, so the ideal pool is ``rel_u``; padding
    with non-relevant items does not change the value. At each position the
    item with the largest marginal gain is taken (ties within ``TIE_EPS``:
    ascending item id).
    """
    pool = {i: _relevant_aspects(i, aspects, membership, rel_u) for i in sorted(rel_u)}
    pool = {i: ks for i, ks in pool.items() if ks}
    seen = [0] * len(aspects)
    total = 0.0
    for rank in range(1, n + 1):
        if not pool:
            break
        best_item, best_gain = None, -1.0
        for i, ks in pool.items():
            g = sum((1.0 - alpha) ** seen[k] for k in ks)
            if g > best_gain + TIE_EPS:
                best_item, best_gain = i, g
        for k in pool.pop(best_item):
            seen[k] += 1
        total += best_gain * _discount(rank)
    return total


def alpha_ndcg(
    items: Sequence[int],
    aspects: UserAspects,
    rel_u: Iterable[int],
    alpha: float = DEFAULT_ALPHA,
    n: int | None = None,
) -> float:
    """alpha-nDCG of ``items`` over the user's aspects.

    ``n`` is the cutoff used to size the ideal list (defaults to the list
    length). Users without aspects score 0. The ratio is capped at 1 because
    the greedy ideal is not guaranteed optimal.
    """
    if not 0.0 <= alpha <= 1.0:
        raise InvalidAlpha(f"alpha must be in [0, 1], got {alpha}")
    if not aspects.has_aspects():
        return 0.0
    rel_u = frozenset(rel_u)
    items = list(items)
    n = len(items) if n is None else n
    ideal = ideal_alpha_dcg(n, aspects.aspects, aspects.membership, rel_u, alpha)
    if ideal == 0.0:
        return 0.0
    actual = alpha_dcg(items[:n], aspects.aspects, aspects.membership, rel_u, alpha)
    return min(1.0, actual / ideal)


def precision(items: Sequence[int], rel_u: Iterable[int]) -> float:
    items = list(items)
    if not items:
        return 0.0
    rel_u = frozenset(rel_u)
    return sum(1 for i in items if i in rel_u) / len(items)


def mrr(items: Sequence[int], rel_u: Iterable[int]) -> float:
    """Reciprocal rank of the first relevant item within the list (0 if none)."""
    rel_u = frozenset(rel_u)
    for rank, i in enumerate(items, start=1):
        if i in rel_u:
            return 1.0 / rank
    return 0.0


def one_call(items: Sequence[int], rel_u: Iterable[int]) -> int:
    rel_u = frozenset(rel_u)
    return int(any(i in rel_u for i in items))
