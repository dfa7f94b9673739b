"""Biased matrix factorization baseline trained with sequential SGD.

The model predicts ``mu + b_u + b_i + p_u . q_i`` and is fit by stochastic
gradient descent on squared error with L2 regularization on biases and
factors. Training is single-threaded and seeded: the initial factors are
drawn from N(0, 0.1^2) and the per-epoch visiting order is a seeded
permutation, so two runs with the same seed give bitwise-identical models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

import numba
import numpy as np

from .corpus import Rating
from .errors import DataError, EmptyPool, InvalidConfig, PreconditionError

CHECKPOINT_MAGIC = "diverank-mf"
CHECKPOINT_VERSION = 1
INIT_STD = 0.1


@dataclass(frozen=True)
class MFConfig:
    d: int = 32
    learning_rate: float = 0.01
    regularization: float = 0.05
    epochs: int = 30
    seed: int = 0

    def validate(self) -> None:
        if self.d < 1:
            raise InvalidConfig(f"d must be >= 1, got {self.d}")
        if not self.learning_rate > 0:
            raise InvalidConfig(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.regularization < 0:
            raise InvalidConfig("regularization must be non-negative")
        if self.epochs < 0:
            raise InvalidConfig("epochs must be non-negative")


@dataclass
class MFModel:
    user_ids: np.ndarray
    item_ids: np.ndarray
    user_factors: np.ndarray
    item_factors: np.ndarray
    user_bias: np.ndarray
    item_bias: np.ndarray
    global_mean: float
    seen: Mapping[int, frozenset[int]] = field(default_factory=dict)

    def __post_init__(self):
        self._uidx = {int(u): k for k, u in enumerate(self.user_ids)}
        self._iidx = {int(i): k for k, i in enumerate(self.item_ids)}

    @property
    def d(self) -> int:
        return self.user_factors.shape[1]

    def user_index(self, u: int) -> int | None:
        return self._uidx.get(u)

    def item_index(self, i: int) -> int | None:
        return self._iidx.get(i)


@dataclass(frozen=True)
class ScoredCandidates:
    user_id: int
    entries: tuple[tuple[int, float], ...]

    @property
    def items(self) -> list[int]:
        return [i for i, _ in self.entries]

    @property
    def scores(self) -> list[float]:
        return [s for _, s in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _index(ratings: list[Rating]):
    user_ids = np.array(sorted({r.user_id for r in ratings}), dtype=np.int64)
    item_ids = np.array(sorted({r.item_id for r in ratings}), dtype=np.int64)
    uidx = {int(u): k for k, u in enumerate(user_ids)}
    iidx = {int(i): k for k, i in enumerate(item_ids)}
    us = np.array([uidx[r.user_id] for r in ratings], dtype=np.int64)
    its = np.array([iidx[r.item_id] for r in ratings], dtype=np.int64)
    vals = np.array([r.value for r in ratings], dtype=np.float64)
    return user_ids, item_ids, us, its, vals


def init_model(ratings: Iterable[Rating], config: MFConfig) -> MFModel:
    """Untrained model: zero biases, Gaussian factors, train mean."""
    config.validate()
    ratings = list(ratings)
    if not ratings:
        raise DataError("cannot train on an empty ratings collection")
    user_ids, item_ids, _, _, vals = _index(ratings)
    rng = np.random.default_rng(config.seed)
    P = rng.normal(0.0, INIT_STD, size=(len(user_ids), config.d))
    Q = rng.normal(0.0, INIT_STD, size=(len(item_ids), config.d))
    seen: dict[int, set[int]] = {}
    for r in ratings:
        seen.setdefault(r.user_id, set()).add(r.item_id)
    return MFModel(
        user_ids=user_ids,
        item_ids=item_ids,
        user_factors=P,
        item_factors=Q,
        user_bias=np.zeros(len(user_ids)),
        item_bias=np.zeros(len(item_ids)),
        global_mean=float(vals.mean()),
        seen={u: frozenset(s) for u, s in seen.items()},
    )


@numba.njit(cache=True)
def _sgd_epoch(order, us, its, vals, P, Q, bu, bi, mu, lr, reg):
    d = P.shape[1]
    for k in order:
        u = us[k]
        i = its[k]
        pred = mu + bu[u] + bi[i]
        for f in range(d):
            pred += P[u, f] * Q[i, f]
        err = vals[k] - pred
        bu[u] += lr * (err - reg * bu[u])
        bi[i] += lr * (err - reg * bi[i])
        for f in range(d):
            pu = P[u, f]
            qi = Q[i, f]
            P[u, f] += lr * (err * qi - reg * pu)
            Q[i, f] += lr * (err * pu - reg * qi)


def train(train_ratings: Iterable[Rating], config: MFConfig = MFConfig()) -> MFModel:
    """Fit a biased MF model by sequential SGD.

    Each update follows the negative gradient of the per-rating loss
    ``0.5 * err^2 + 0.5 * reg * (b_u^2 + b_i^2 + |p_u|^2 + |q_i|^2)``; the
    global mean is fixed to the training average.
    """
    ratings = list(train_ratings)
    model = init_model(ratings, config)
    _, _, us, its, vals = _index(ratings)
    rng = np.random.default_rng([config.seed, 1])
    for _ in range(config.epochs):
        order = rng.permutation(len(ratings))
        _sgd_epoch(
            order, us, its, vals,
            model.user_factors, model.item_factors,
            model.user_bias, model.item_bias,
            model.global_mean, config.learning_rate, config.regularization,
        )
    if not (np.isfinite(model.user_factors).all() and np.isfinite(model.item_factors).all()):
        raise InvalidConfig("SGD diverged; lower the learning rate")
    return model


def rating_loss(model: MFModel, u: int, i: int, value: float, reg: float) -> float:
    """Regularized squared error of one rating (the quantity SGD descends)."""
    ui, ii = model.user_index(u), model.item_index(i)
    err = value - score(model, u, i)
    penalty = (
        model.user_bias[ui] ** 2
        + model.item_bias[ii] ** 2
        + float(model.user_factors[ui] @ model.user_factors[ui])
        + float(model.item_factors[ii] @ model.item_factors[ii])
    )
    return 0.5 * err * err + 0.5 * reg * penalty


def score(model: MFModel, u: int, i: int) -> float:
    """Predicted relevance s(u, i); unknown ids contribute zero bias and factors."""
    ui, ii = model.user_index(u), model.item_index(i)
    s = model.global_mean
    if ui is not None:
        s += model.user_bias[ui]
    if ii is not None:
        s += model.item_bias[ii]
    if ui is not None and ii is not None:
        s += float(model.user_factors[ui] @ model.item_factors[ii])
    return float(s)


def score_items(model: MFModel, u: int, items) -> np.ndarray:
    """Vectorized :func:`score` over a sequence of item ids."""
    items = list(items)
    ui = model.user_index(u)
    idx = np.array([model._iidx.get(i, -1) for i in items], dtype=np.int64)
    known = idx >= 0
    out = np.full(len(items), model.global_mean, dtype=np.float64)
    if ui is not None:
        out += model.user_bias[ui]
    out[known] += model.item_bias[idx[known]]
    if ui is not None and known.any():
        out[known] += model.item_factors[idx[known]] @ model.user_factors[ui]
    return out


def rank_entries(items, scores) -> tuple[tuple[int, float], ...]:
    """Sort (item, score) pairs by descending score, then ascending item id."""
    items = np.asarray(list(items), dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    order = np.lexsort((items, -scores))
    return tuple((int(items[k]), float(scores[k])) for k in order)


def candidates(model: MFModel, u: int, pool: Iterable[int], k: int = 100) -> ScoredCandidates:
    """The ``k`` highest-scoring pool items for ``u`` (all of them if fewer)."""
    if k < 1:
        raise ValueError("k must be positive")
    pool = sorted(set(pool))
    if not pool:
        raise EmptyPool(f"empty candidate pool for user {u}")
    rated = model.seen.get(u, frozenset()).intersection(pool)
    if rated:
        raise PreconditionError(
            f"pool for user {u} contains {len(rated)} train item(s), e.g. {min(rated)}"
        )
    entries = rank_entries(pool, score_items(model, u, pool))
    return ScoredCandidates(u, entries[:k])


def rmse(model: MFModel, ratings: Iterable[Rating]) -> float:
    ratings = list(ratings)
    sq = sum((r.value - score(model, r.user_id, r.item_id)) ** 2 for r in ratings)
    return math.sqrt(sq / len(ratings))


# Checkpoint format (text, UTF-8):
#   diverank-mf 1
#   n_users n_items d global_mean
#   one line per user:  user_id bias f_1 ... f_d
#   one line per item:  item_id bias f_1 ... f_d
# Floats are written with repr(), which round-trips exactly.


def save_model(model: MFModel, path: str | Path) -> None:
    lines = [
        f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}",
        f"{len(model.user_ids)} {len(model.item_ids)} {model.d} {model.global_mean!r}",
    ]
    for ids, bias, factors in (
        (model.user_ids, model.user_bias, model.user_factors),
        (model.item_ids, model.item_bias, model.item_factors),
    ):
        for k, ident in enumerate(ids):
            row = " ".join(repr(float(x)) for x in factors[k])
            lines.append(f"{int(ident)} {float(bias[k])!r} {row}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> MFModel:
    """Inverse of :func:`save_model`. The train-item history is not stored."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    magic = lines[0].split()
    if len(magic) != 2 or magic[0] != CHECKPOINT_MAGIC or int(magic[1]) != CHECKPOINT_VERSION:
        raise DataError(f"unrecognized checkpoint header: {lines[0]!r}")
    n_users, n_items, d, mu = lines[1].split()
    n_users, n_items, d = int(n_users), int(n_items), int(d)

    def table(rows):
        arr = np.array([[float(x) for x in row.split()] for row in rows]).reshape(len(rows), d + 2)
        return arr[:, 0].astype(np.int64), arr[:, 1].copy(), np.ascontiguousarray(arr[:, 2:])

    uids, ub, P = table(lines[2 : 2 + n_users])
    iids, ib, Q = table(lines[2 + n_users : 2 + n_users + n_items])
    return MFModel(uids, iids, P, Q, ub, ib, float(mu))
