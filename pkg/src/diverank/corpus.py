"""Ratings/item-feature parsing, per-user holdout split and relevance judgments.

Both input formats are the MovieLens 1M ``::``-delimited files::

    ratings.dat   UserID::MovieID::Rating::Timestamp
    movies.dat    MovieID::Title::Genre1|Genre2|...

Titles in the 1M distribution are not UTF-8 clean, so every line is decoded
as Latin-1; only ids, ratings and timestamps are parsed numerically.
"""

from __future__ import annotations

import io
import math
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Mapping

import numpy as np

from .errors import EmptyCorpus, MalformedLine

DELIMITER = "::"
ENCODING = "latin-1"
DEFAULT_THRESHOLD = 4
DEFAULT_HOLDOUT = 0.2


@dataclass(frozen=True, slots=True)
class Rating:
    user_id: int
    item_id: int
    value: int
    timestamp: int


@dataclass(frozen=True, slots=True)
class ItemFeatures:
    item_id: int
    features: frozenset[str]
    title: str = ""


@dataclass(frozen=True)
class SplitCorpus:
    train: tuple[Rating, ...]
    test: tuple[Rating, ...]
    users: frozenset[int]
    items: frozenset[int]

    def train_by_user(self) -> dict[int, list[Rating]]:
        return _group(self.train)

    def test_by_user(self) -> dict[int, list[Rating]]:
        return _group(self.test)


@dataclass(frozen=True)
class RelevanceJudgments:
    rel: Mapping[int, frozenset[int]]
    threshold: int = DEFAULT_THRESHOLD

    def __getitem__(self, user: int) -> frozenset[int]:
        return self.rel.get(user, frozenset())

    def users(self) -> list[int]:
        return sorted(self.rel)


def _group(ratings: Iterable[Rating]) -> dict[int, list[Rating]]:
    out: dict[int, list[Rating]] = defaultdict(list)
    for r in ratings:
        out[r.user_id].append(r)
    return dict(out)


def _lines(source) -> Iterator[str]:
    """Yield decoded lines from a binary stream, text stream, bytes or str."""
    if isinstance(source, bytes):
        source = io.BytesIO(source)
    elif isinstance(source, str):
        source = io.StringIO(source)
    for raw in source:
        if isinstance(raw, bytes):
            raw = raw.decode(ENCODING)
        yield raw.rstrip("\r\n")


def _positive_int(text: str, lineno: int, line: str, what: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise MalformedLine(lineno, line, f"non-numeric {what}") from None
    if value <= 0:
        raise MalformedLine(lineno, line, f"{what} must be positive")
    return value


def parse_ratings(source: BinaryIO | bytes | str | Iterable) -> list[Rating]:
    """Parse ``user::item::rating::timestamp`` lines in file order.

    Blank lines are ignored. Any other line that does not have exactly four
    integer fields (or whose rating falls outside 1..5) aborts the parse with
    :class:`MalformedLine` carrying the 1-based line number.
    """
    ratings = []
    for lineno, line in enumerate(_lines(source), start=1):
        if not line.strip():
            continue
        parts = line.split(DELIMITER)
        if len(parts) != 4:
            raise MalformedLine(lineno, line, f"expected 4 fields, got {len(parts)}")
        user = _positive_int(parts[0], lineno, line, "user id")
        item = _positive_int(parts[1], lineno, line, "item id")
        try:
            value = int(parts[2])
            ts = int(parts[3])
        except ValueError:
            raise MalformedLine(lineno, line, "non-numeric rating or timestamp") from None
        if not 1 <= value <= 5:
            raise MalformedLine(lineno, line, "rating outside 1..5")
        if ts < 0:
            raise MalformedLine(lineno, line, "negative timestamp")
        ratings.append(Rating(user, item, value, ts))
    return ratings


def parse_item_features(source: BinaryIO | bytes | str | Iterable) -> list[ItemFeatures]:
    items = []
    for lineno, line in enumerate(_lines(source), start=1):
        if not line.strip():
            continue
        parts = line.split(DELIMITER)
        if len(parts) != 3:
            raise MalformedLine(lineno, line, f"expected 3 fields, got {len(parts)}")
        item = _positive_int(parts[0], lineno, line, "item id")
        labels = frozenset(f for f in parts[2].split("|") if f)
        items.append(ItemFeatures(item, labels, parts[1]))
    return items


def write_ratings(ratings: Iterable[Rating]) -> bytes:
    """Canonical writer, the inverse of :func:`parse_ratings`."""
    lines = [
        f"{r.user_id}{DELIMITER}{r.item_id}{DELIMITER}{r.value}{DELIMITER}{r.timestamp}\n"
        for r in ratings
    ]
    return "".join(lines).encode(ENCODING)


def read_ratings(path: str | Path) -> list[Rating]:
    with open(path, "rb") as fh:
        return parse_ratings(fh)


def read_item_features(path: str | Path) -> list[ItemFeatures]:
    with open(path, "rb") as fh:
        return parse_item_features(fh)


def split(
    ratings: Iterable[Rating],
    holdout_fraction: float = DEFAULT_HOLDOUT,
    seed: int = 0,
) -> SplitCorpus:
    """Per-user random holdout.

    For every user with at least two ratings, ``floor(holdout_fraction * n_u)``
    ratings chosen uniformly at random go to the test side. Users are visited
    in ascending id order and each user's ratings keep their input order before
    the seeded permutation, so the result depends only on the inputs and seed.
    """
    if not 0.0 < holdout_fraction < 1.0:
        raise ValueError(f"holdout_fraction must be in (0, 1), got {holdout_fraction}")
    ratings = list(ratings)
    if not ratings:
        raise EmptyCorpus("cannot split an empty ratings collection")

    rng = np.random.default_rng(seed)
    by_user = _group(ratings)
    train: list[Rating] = []
    test: list[Rating] = []
    for user in sorted(by_user):
        rows = by_user[user]
        n_test = math.floor(holdout_fraction * len(rows)) if len(rows) >= 2 else 0
        if n_test == 0:
            train.extend(rows)
            continue
        perm = rng.permutation(len(rows))
        held = set(perm[:n_test].tolist())
        for k, r in enumerate(rows):
            (test if k in held else train).append(r)

    return SplitCorpus(
        train=tuple(train),
        test=tuple(test),
        users=frozenset(by_user),
        items=frozenset(r.item_id for r in ratings),
    )


def judgments(corpus: SplitCorpus, threshold: int = DEFAULT_THRESHOLD) -> RelevanceJudgments:
    """Relevant items per user: test ratings at or above ``threshold``."""
    if threshold not in range(1, 6):
        raise ValueError(f"threshold must be in 1..5, got {threshold}")
    rel: dict[int, set[int]] = {u: set() for u in corpus.users}
    for r in corpus.test:
        if r.value >= threshold:
            rel[r.user_id].add(r.item_id)
    return RelevanceJudgments({u: frozenset(s) for u, s in rel.items()}, threshold)


def liked_profiles(ratings: Iterable[Rating], threshold: int = DEFAULT_THRESHOLD) -> dict[int, frozenset[int]]:
    """Train-side counterpart of :func:`judgments`: items each user rated >= threshold."""
    liked: dict[int, set[int]] = defaultdict(set)
    for r in ratings:
        if r.value >= threshold:
            liked[r.user_id].add(r.item_id)
    return {u: frozenset(s) for u, s in liked.items()}
