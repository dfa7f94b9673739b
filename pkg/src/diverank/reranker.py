"""Greedy relevance/diversity re-ranking of a baseline candidate set.

At every step the remaining candidate maximizing

    (1 - lam) * s(u, i) + lam * div(i, RL)

is appended to the result list ``RL``. Ties go to the higher baseline score,
then to the lower item id. Diversity functions expose a direct evaluation
``div(i, rl)`` and an incremental tracker used by the greedy loop.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .aspects import DistanceModel, UserAspects
from .errors import EmptyCandidates
from .factorizer import ScoredCandidates

NONE = "none"
MMR = "mmr"
IA_FEATURES = "intent_aware_features"
IA_SUBPROFILES = "intent_aware_subprofiles"
DIVERSITY_KINDS = (NONE, MMR, IA_FEATURES, IA_SUBPROFILES)


@dataclass(frozen=True)
class GreedyConfig:
    lam: float = 0.5
    n: int = 10
    diversity_kind: str = NONE
    normalize_scores: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must be in [0, 1], got {self.lam}")
        if self.n < 1:
            raise ValueError(f"N must be positive, got {self.n}")
        if self.diversity_kind not in DIVERSITY_KINDS:
            raise ValueError(f"unknown diversity kind {self.diversity_kind!r}")


@dataclass(frozen=True)
class RankedList:
    user_id: int
    items: tuple[int, ...]

    def __post_init__(self):
        if len(set(self.items)) != len(self.items):
            raise ValueError("ranked list contains duplicate items")

    def rank(self, i: int) -> int | None:
        """1-based position of ``i``, or None when absent."""
        try:
            return self.items.index(i) + 1
        except ValueError:
            return None

    def truncate(self, n: int) -> "RankedList":
        return RankedList(self.user_id, self.items[:n])

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self):
        return iter(self.items)


def objective(score: float, div_value: float, lam: float) -> float:
    return (1.0 - lam) * score + lam * div_value


def mmr_div(i: int, rl: Sequence[int], distance_model: DistanceModel) -> float:
    """Largest distance from ``i`` to an already selected item; 1.0 for empty ``rl``."""
    if not rl:
        return 1.0
    return max(distance_model.distance(i, j) for j in rl)


def ia_div(i: int, rl: Sequence[int], aspects: UserAspects) -> float:
    """Intent-aware marginal gain, evaluated directly from the probabilities."""
    total = 0.0
    for a in aspects.aspects:
        w = aspects.p_aspect(a)
        if w == 0.0:
            continue
        p = aspects.p_item(i, a)
        if p == 0.0:
            continue
        remaining = 1.0
        for j in rl:
            remaining *= 1.0 - aspects.p_item(j, a)
        total += w * p * remaining
    return total


class MMRDiversity:
    def __init__(self, distance_model: DistanceModel):
        self.distance_model = distance_model

    def __call__(self, i: int, rl: Sequence[int]) -> float:
        return mmr_div(i, rl, self.distance_model)

    def tracker(self, items: Sequence[int]) -> "_MMRTracker":
        return _MMRTracker(self.distance_model.matrix(items))


class _MMRTracker:
    def __init__(self, D: np.ndarray):
        self.D = D
        self.best = np.ones(D.shape[0])
        self.empty = True

    def gains(self) -> np.ndarray:
        return self.best

    def add(self, k: int) -> None:
        if self.empty:
            self.best = self.D[:, k].copy()
            self.empty = False
        else:
            np.maximum(self.best, self.D[:, k], out=self.best)


class IntentAwareDiversity:
    """xQuAD (feature aspects) or SPAD (subprofile aspects) diversity."""

    def __init__(self, aspects: UserAspects):
        self.aspects = aspects

    def __call__(self, i: int, rl: Sequence[int]) -> float:
        return ia_div(i, rl, self.aspects)

    def tracker(self, items: Sequence[int]) -> "_IATracker":
        return _IATracker(*self.aspects.prob_matrix(items))


class _IATracker:
    # keeps prod_{j in RL} (1 - p(j|u,a)) per aspect
    def __init__(self, P: np.ndarray, w: np.ndarray):
        self.P = P
        self.w = w
        self.remaining = np.ones(len(w))

    def gains(self) -> np.ndarray:
        if self.P.shape[1] == 0:
            return np.zeros(self.P.shape[0])
        return (self.P * (self.w * self.remaining)).sum(axis=1)

    def add(self, k: int) -> None:
        self.remaining = self.remaining * (1.0 - self.P[k])


def relevance_scores(rs: ScoredCandidates, normalize: bool = False) -> np.ndarray:
    s = np.array(rs.scores, dtype=np.float64)
    if normalize and len(s):
        lo, hi = s.min(), s.max()
        s = (s - lo) / (hi - lo) if hi > lo else np.zeros_like(s)
    return s


def greedy_rerank(rs: ScoredCandidates, config: GreedyConfig, diversity=None) -> RankedList:
    """Re-rank ``rs`` into a list of ``min(N, |RS|)`` items.

    ``diversity`` must provide ``tracker(items)``; it is ignored when the
    configured kind is ``none`` (the baseline order is returned).
    """
    if len(rs) == 0:
        raise EmptyCandidates(f"no candidates for user {rs.user_id}")
    items = rs.items
    n = min(config.n, len(items))
    if config.diversity_kind == NONE:
        return RankedList(rs.user_id, tuple(items[:n]))
    if diversity is None:
        raise ValueError(f"diversity kind {config.diversity_kind!r} needs a diversity function")

    ids = np.array(items, dtype=np.int64)
    raw = np.array(rs.scores, dtype=np.float64)
    rel = relevance_scores(rs, config.normalize_scores)
    tracker = diversity.tracker(items)
    available = np.ones(len(items), dtype=bool)
    lam = config.lam
    chosen: list[int] = []
    for _ in range(n):
        obj = (1.0 - lam) * rel + lam * tracker.gains()
        obj = np.where(available, obj, -np.inf)
        tied = np.flatnonzero(obj == obj.max())
        if len(tied) > 1:
            # objective, then raw score, then ascending id
            tied = tied[raw[tied] == raw[tied].max()]
            tied = tied[[int(np.argmin(ids[tied]))]]
        k = int(tied[0])
        chosen.append(int(ids[k]))
        available[k] = False
        tracker.add(k)
    return RankedList(rs.user_id, tuple(chosen))


def make_diversity(kind: str, distance_model: DistanceModel | None = None, aspects: UserAspects | None = None):
    if kind == NONE:
        return None
    if kind == MMR:
        return MMRDiversity(distance_model)
    return IntentAwareDiversity(aspects)
