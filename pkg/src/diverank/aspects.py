"""Aspect families, item distances and the intent-aware probability model.

Two aspect families are supported:

* features: aspects are item feature labels (genres); membership is global.
* subprofiles: aspects are per-user sets of liked items mined from an
  item-item neighbourhood graph; an item belongs to a subprofile when it is
  one of the ``coverage_k`` nearest neighbours of some member.

For each user the model carries ``p(a|u)`` (``weights``) and, per aspect,
``p(i|u,a)`` over the candidate set (``item_probs``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Hashable, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from .corpus import ItemFeatures, Rating
from .factorizer import ScoredCandidates

FEATURES = "features"
SUBPROFILES = "subprofiles"


class DistanceModel:
    """``1 - cosine`` over binary feature vectors.

    An item without features is at distance 1 from every other item and 0
    from itself. Items absent from the catalogue are treated as featureless.
    """

    def __init__(self, item_features: Iterable[ItemFeatures] | Mapping[int, Iterable[str]]):
        if isinstance(item_features, Mapping):
            feats = {int(i): frozenset(f) for i, f in item_features.items()}
        else:
            feats = {it.item_id: frozenset(it.features) for it in item_features}
        self.features: dict[int, frozenset[str]] = feats
        self.vocabulary: tuple[str, ...] = tuple(sorted(set().union(*feats.values()))) if feats else ()

    def features_of(self, i: int) -> frozenset[str]:
        return self.features.get(i, frozenset())

    def distance(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        fi, fj = self.features_of(i), self.features_of(j)
        if not fi or not fj:
            return 1.0
        cos = len(fi & fj) / math.sqrt(len(fi) * len(fj))
        return min(1.0, max(0.0, 1.0 - cos))

    __call__ = distance

    def matrix(self, items: Sequence[int]) -> np.ndarray:
        """Pairwise distance matrix for ``items``, equal entrywise to :meth:`distance`."""
        col = {f: k for k, f in enumerate(self.vocabulary)}
        B = np.zeros((len(items), len(self.vocabulary)))
        for r, i in enumerate(items):
            for f in self.features_of(i):
                B[r, col[f]] = 1.0
        counts = B.sum(axis=1)
        inter = B @ B.T
        denom = np.sqrt(np.outer(counts, counts))
        with np.errstate(divide="ignore", invalid="ignore"):
            cos = np.where(denom > 0, inter / np.where(denom > 0, denom, 1.0), 0.0)
        D = np.clip(1.0 - cos, 0.0, 1.0)
        ids = np.asarray(items)
        D[ids[:, None] == ids[None, :]] = 0.0
        return D


def item_distance(i: int, j: int, distance_model: DistanceModel) -> float:
    return distance_model.distance(i, j)


class ItemSimilarity:
    """Cosine similarity between items' binary co-rating vectors.

    Neighbour lists exclude the item itself and items with zero similarity,
    and are ordered by descending similarity then ascending item id.
    """

    def __init__(self, train_ratings: Iterable[Rating]):
        ratings = list(train_ratings)
        users = sorted({r.user_id for r in ratings})
        self.item_ids = np.array(sorted({r.item_id for r in ratings}), dtype=np.int64)
        uidx = {u: k for k, u in enumerate(users)}
        self._iidx = {int(i): k for k, i in enumerate(self.item_ids)}
        rows = [self._iidx[r.item_id] for r in ratings]
        cols = [uidx[r.user_id] for r in ratings]
        X = sp.csr_matrix(
            (np.ones(len(ratings)), (rows, cols)), shape=(len(self.item_ids), len(users))
        )
        X.data[:] = 1.0  # duplicate (user, item) pairs collapse to one co-rating
        co = (X @ X.T).toarray()
        counts = np.diag(co).copy()
        denom = np.sqrt(np.outer(counts, counts))
        self.sim = np.where(denom > 0, co / np.where(denom > 0, denom, 1.0), 0.0)
        self._nbr_cache: dict[int, np.ndarray] = {}

    @classmethod
    def from_matrix(cls, item_ids: Sequence[int], sim: np.ndarray) -> "ItemSimilarity":
        obj = cls.__new__(cls)
        obj.item_ids = np.asarray(item_ids, dtype=np.int64)
        obj._iidx = {int(i): k for k, i in enumerate(obj.item_ids)}
        obj.sim = np.asarray(sim, dtype=np.float64)
        obj._nbr_cache = {}
        return obj

    def similarity(self, i: int, j: int) -> float:
        a, b = self._iidx.get(i), self._iidx.get(j)
        if a is None or b is None:
            return 0.0
        return float(self.sim[a, b])

    def _ranked(self, i: int) -> np.ndarray:
        a = self._iidx.get(i)
        if a is None:
            return np.empty(0, dtype=np.int64)
        cached = self._nbr_cache.get(a)
        if cached is None:
            row = self.sim[a]
            keep = (row > 0) & (self.item_ids != i)
            ids, vals = self.item_ids[keep], row[keep]
            cached = ids[np.lexsort((ids, -vals))]
            self._nbr_cache[a] = cached
        return cached

    def neighbours(self, i: int, k: int) -> list[int]:
        return self._ranked(i)[:k].tolist()


@dataclass(frozen=True)
class Subprofile:
    owner: int
    members: frozenset[int]

    def __len__(self) -> int:
        return len(self.members)

    def sort_key(self):
        return tuple(sorted(self.members))


def mine_subprofiles(
    user: int,
    liked: Iterable[int],
    item_similarity,
    knn_k: int = 10,
) -> list[Subprofile]:
    """Mine set-maximal subprofiles from a user's liked items.

    Each liked item seeds ``{i} | (liked items among its knn_k neighbours)``;
    candidates strictly contained in another candidate are discarded and
    duplicates collapse. Result order is by sorted member tuple.
    """
    liked = frozenset(liked)
    candidates = set()
    for i in sorted(liked):
        nbrs = item_similarity.neighbours(i, knn_k)
        candidates.add(frozenset([i, *(j for j in nbrs if j in liked)]))
    maximal = [s for s in candidates if not any(s < t for t in candidates)]
    subs = [Subprofile(user, s) for s in maximal]
    subs.sort(key=Subprofile.sort_key)
    return subs


@dataclass
class UserAspects:
    """One user's slice of an aspect model."""

    user: int
    family: str
    aspects: tuple[Hashable, ...]
    membership: Mapping[Hashable, frozenset[int]]
    weights: dict[Hashable, float] = field(default_factory=dict)
    item_probs: dict[Hashable, dict[int, float]] = field(default_factory=dict)

    def p_aspect(self, a) -> float:
        return self.weights.get(a, 0.0)

    def p_item(self, i: int, a) -> float:
        return self.item_probs.get(a, {}).get(i, 0.0)

    def has_aspects(self) -> bool:
        return bool(self.weights)

    def prob_matrix(self, items: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
        """``(P, w)`` with ``P[k, a] = p(items[k]|u,a)`` and ``w[a] = p(a|u)``
        over the aspects that carry positive weight, in ``self.aspects`` order."""
        active = [a for a in self.aspects if self.weights.get(a, 0.0) > 0.0]
        w = np.array([self.weights[a] for a in active], dtype=np.float64)
        P = np.zeros((len(items), len(active)))
        for c, a in enumerate(active):
            probs = self.item_probs.get(a, {})
            for r, i in enumerate(items):
                P[r, c] = probs.get(i, 0.0)
        return P, w


@dataclass
class AspectModel:
    family: str
    users: dict[int, UserAspects] = field(default_factory=dict)

    def for_user(self, u: int) -> UserAspects:
        return self.users[u]

    def add(self, ua: UserAspects) -> None:
        self.users[ua.user] = ua


def _normalize(counts: Mapping[Hashable, float]) -> dict[Hashable, float]:
    total = math.fsum(counts.values())
    if total <= 0:
        return {}
    return {a: c / total for a, c in counts.items() if c > 0}


def _item_probs(affinity: Mapping[int, float]) -> dict[int, float]:
    """Normalize non-negative per-candidate affinities into ``p(i|u,a)``."""
    return _normalize({i: max(0.0, v) for i, v in affinity.items()})


def feature_aspects(
    user: int,
    distance_model: DistanceModel,
    liked: Iterable[int],
    candidates: ScoredCandidates | None = None,
) -> UserAspects:
    """Feature-family aspects for one user.

    ``p(a|u)`` is proportional to the number of liked items carrying ``a``;
    ``p(i|u,a)`` is proportional to ``max(s(u,i), 0)`` over the candidates
    carrying ``a`` and zero elsewhere.
    """
    vocab = distance_model.vocabulary
    membership = _feature_membership(distance_model)
    counts: dict[str, float] = {}
    for i in sorted(liked):
        for f in distance_model.features_of(i):
            counts[f] = counts.get(f, 0.0) + 1.0
    weights = _normalize(counts)
    probs: dict[str, dict[int, float]] = {}
    if candidates is not None and weights:
        for a in weights:
            probs[a] = _item_probs(
                {i: s for i, s in candidates.entries if a in distance_model.features_of(i)}
            )
    return UserAspects(user, FEATURES, vocab, membership, weights, probs)


def _feature_membership(distance_model: DistanceModel) -> dict[str, frozenset[int]]:
    cached = getattr(distance_model, "_membership", None)
    if cached is None:
        members: dict[str, set[int]] = {f: set() for f in distance_model.vocabulary}
        for i, fs in distance_model.features.items():
            for f in fs:
                members[f].add(i)
        cached = {f: frozenset(s) for f, s in members.items()}
        distance_model._membership = cached
    return cached


def subprofile_affinity(i: int, sub: Subprofile, item_similarity, coverage_k: int) -> float:
    """Max neighbourhood similarity between ``i`` and any member of ``sub``.

    ``sim(i, j)`` only counts when ``i`` is among member ``j``'s
    ``coverage_k`` nearest neighbours; members themselves have affinity 1.
    """
    if i in sub.members:
        return 1.0
    best = 0.0
    for j in sorted(sub.members):
        if i in item_similarity.neighbours(j, coverage_k):
            best = max(best, item_similarity.similarity(i, j))
    return best


def subprofile_coverage(sub: Subprofile, item_similarity, coverage_k: int) -> frozenset[int]:
    covered = set(sub.members)
    for j in sub.members:
        covered.update(item_similarity.neighbours(j, coverage_k))
    return frozenset(covered)


def subprofile_aspects(
    user: int,
    subprofiles: Sequence[Subprofile],
    candidates: ScoredCandidates | None,
    item_similarity,
    coverage_k: int = 10,
) -> UserAspects:
    """Subprofile-family aspects for one user.

    ``p(a|u)`` is proportional to subprofile size; ``p(i|u,a)`` is
    proportional to ``max(s(u,i), 0) * affinity(i, a)`` over the candidates.
    """
    subs = tuple(subprofiles)
    membership = {a: subprofile_coverage(a, item_similarity, coverage_k) for a in subs}
    weights = _normalize({a: float(len(a)) for a in subs})
    probs: dict[Subprofile, dict[int, float]] = {}
    if candidates is not None:
        for a in subs:
            probs[a] = _item_probs(
                {
                    i: s * subprofile_affinity(i, a, item_similarity, coverage_k)
                    for i, s in candidates.entries
                    if i in membership[a]
                }
            )
    return UserAspects(user, SUBPROFILES, subs, membership, weights, probs)
