"""Sudden Death scoring: per user, the algorithms with the earliest hit win.

For user ``u`` let ``i*`` be the smallest position (1..N) at which any
compared algorithm has a relevant item in its top-``i*`` prefix. Every
algorithm hitting at ``i*`` gets an award of 1 for that user, all others 0;
when nobody hits within N, nobody scores. An algorithm's score is its mean
award over users. Scores are only meaningful relative to the roster they
were computed with, so reports always carry the roster.

Positions 1..N inclusive are scanned, so a hit exactly at rank N counts.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from .corpus import RelevanceJudgments
from .errors import DataError, EmptyUserSet, PositionOutOfRange


@dataclass(frozen=True)
class RunSet:
    algorithms: tuple[str, ...]
    lists: Mapping[tuple[int, str], Sequence[int]]
    n: int
    judgments: RelevanceJudgments | Mapping[int, frozenset[int]]

    def __post_init__(self):
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ValueError("duplicate algorithm in roster")
        if self.n < 1:
            raise ValueError("N must be positive")

    @property
    def users(self) -> list[int]:
        return sorted({u for u, _ in self.lists})

    def relevant(self, u: int) -> frozenset[int]:
        if isinstance(self.judgments, RelevanceJudgments):
            return self.judgments[u]
        return frozenset(self.judgments.get(u, ()))

    def top(self, u: int, a: str) -> Sequence[int]:
        return self.lists.get((u, a), ())[: self.n]

    def validate(self) -> None:
        users = self.users
        for u in users:
            for a in self.algorithms:
                if (u, a) not in self.lists:
                    raise DataError(f"missing list for user {u}, algorithm {a!r}")
        for (u, a), lst in self.lists.items():
            if a not in self.algorithms:
                raise DataError(f"list for algorithm {a!r} not in roster")
            if len(lst) > self.n:
                raise DataError(f"list for ({u}, {a!r}) is longer than N={self.n}")


@dataclass(frozen=True)
class SDReport:
    algorithms: tuple[str, ...]
    n: int
    scores: dict[str, float]
    awards: dict[int, dict[str, int]] = field(repr=False)
    earliest: dict[int, int | None] = field(repr=False)
    totals: dict[str, int] = field(default_factory=dict)

    @property
    def users(self) -> list[int]:
        return sorted(self.awards)

    def exact(self, a: str) -> Fraction:
        return Fraction(self.totals[a], len(self.awards))

    def roster(self) -> str:
        return "|".join(self.algorithms)


def hit(i: int, u: int, a: str, runset: RunSet) -> bool:
    """True iff one of the first ``i`` items of ``a``'s list for ``u`` is relevant."""
    if not 1 <= i <= runset.n:
        raise PositionOutOfRange(f"position {i} outside 1..{runset.n}")
    rel = runset.relevant(u)
    return any(item in rel for item in runset.top(u, a)[:i])


def first_hit(u: int, a: str, runset: RunSet) -> int | None:
    """Earliest hit position of ``a`` for ``u`` within 1..N, or None."""
    rel = runset.relevant(u)
    for pos, item in enumerate(runset.top(u, a), start=1):
        if item in rel:
            return pos
    return None


def sd_user(u: int, runset: RunSet) -> dict[str, int]:
    firsts = {a: first_hit(u, a, runset) for a in runset.algorithms}
    hits = [p for p in firsts.values() if p is not None]
    if not hits:
        return {a: 0 for a in runset.algorithms}
    best = min(hits)
    return {a: int(firsts[a] == best) for a in runset.algorithms}


def sd_scores(runset: RunSet, users: Iterable[int] | None = None) -> SDReport:
    """Sudden Death score of every algorithm, averaged over ``users``
    (default: every user with at least one list in the run set)."""
    users = runset.users if users is None else sorted(users)
    if not users:
        raise EmptyUserSet("Sudden Death needs at least one user")
    awards: dict[int, dict[str, int]] = {}
    earliest: dict[int, int | None] = {}
    totals = {a: 0 for a in runset.algorithms}
    for u in users:
        awards[u] = sd_user(u, runset)
        hits = [p for a in runset.algorithms if (p := first_hit(u, a, runset)) is not None]
        earliest[u] = min(hits) if hits else None
        for a, v in awards[u].items():
            totals[a] += v
    scores = {a: totals[a] / len(users) for a in runset.algorithms}
    return SDReport(runset.algorithms, runset.n, scores, awards, earliest, totals)


def read_runs(path, n: int | None = None) -> tuple[tuple[str, ...], dict[tuple[int, str], list[int]]]:
    """Read an ``algorithm,user,rank,item`` CSV (header required).

    Algorithms are returned in first-appearance order. Ranks must be
    distinct positive integers per (user, algorithm); the list is ordered by
    rank and, when ``n`` is given, cut to the top ``n``. A user missing a list
    for some algorithm gets an empty list for it.
    """
    rows: dict[tuple[int, str], list[tuple[int, int]]] = {}
    algorithms: list[str] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["algorithm", "user", "rank", "item"]:
            raise DataError(f"{path}: expected header algorithm,user,rank,item")
        for lineno, rec in enumerate(reader, start=2):
            try:
                a = rec["algorithm"].strip()
                u, rank, item = int(rec["user"]), int(rec["rank"]), int(rec["item"])
            except (TypeError, ValueError, AttributeError):
                raise DataError(f"{path}:{lineno}: malformed run row") from None
            if not a or rank < 1:
                raise DataError(f"{path}:{lineno}: malformed run row")
            if a not in algorithms:
                algorithms.append(a)
            rows.setdefault((u, a), []).append((rank, item))
    lists: dict[tuple[int, str], list[int]] = {}
    for key, entries in rows.items():
        entries.sort()
        ranks = [r for r, _ in entries]
        if len(set(ranks)) != len(ranks):
            raise DataError(f"{path}: duplicate rank for user {key[0]}, algorithm {key[1]!r}")
        items = [i for _, i in entries]
        lists[key] = items[:n] if n is not None else items
    for u in {u for u, _ in lists}:
        for a in algorithms:
            lists.setdefault((u, a), [])
    return tuple(algorithms), lists


def read_judgments(path) -> dict[int, frozenset[int]]:
    """Read a ``user,item`` CSV of relevant pairs (header required)."""
    rel: dict[int, set[int]] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or [f.strip() for f in reader.fieldnames] != ["user", "item"]:
            raise DataError(f"{path}: expected header user,item")
        for lineno, rec in enumerate(reader, start=2):
            try:
                rel.setdefault(int(rec["user"]), set()).add(int(rec["item"]))
            except (TypeError, ValueError):
                raise DataError(f"{path}:{lineno}: malformed judgment row") from None
    return {u: frozenset(s) for u, s in rel.items()}
