"""End-to-end experiment: split, train, re-rank, evaluate, compare.

Every (algorithm, lambda) list is re-ranked once up to the largest cutoff and
truncated for smaller cutoffs; greedy selection is prefix-stable, so this is
identical to re-ranking per cutoff. Per-user work can run in a process pool;
results are reduced in ascending user order regardless of completion order.
"""

from __future__ import annotations

import logging
import math
from contextlib import contextmanager
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .. import corpus as corpus_mod
from .. import factorizer, metrics
from ..aspects import (
    DistanceModel,
    ItemSimilarity,
    UserAspects,
    feature_aspects,
    mine_subprofiles,
    subprofile_aspects,
)
from ..errors import DataError, DiverankError, StageError
from ..reranker import NONE, GreedyConfig, greedy_rerank, make_diversity
from ..suddendeath import RunSet, SDReport, sd_scores
from .config import ALGORITHMS, ExperimentConfig

log = logging.getLogger(__name__)

ILD = "ILD"
ANDCG_F = "alpha-nDCG-F"
ANDCG_S = "alpha-nDCG-S"
PRECISION = "precision"
MRR = "MRR"
ONE_CALL = "1-call"
METRICS = (ILD, ANDCG_F, ANDCG_S, PRECISION, MRR, ONE_CALL)
DIVERSITY_METRICS = (ILD, ANDCG_F, ANDCG_S)
RELEVANCE_METRICS = (PRECISION, MRR, ONE_CALL)


@dataclass(frozen=True)
class ResultRow:
    algorithm: str
    lam: float
    n: int
    metric: str
    value: float


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    rows: list[ResultRow]
    reports: dict[tuple[float, int], SDReport]
    users: list[int] = field(default_factory=list)

    def value(self, algorithm: str, lam: float, n: int, metric: str) -> float:
        for r in self.rows:
            if (r.algorithm, r.lam, r.n, r.metric) == (algorithm, lam, n, metric):
                return r.value
        raise KeyError((algorithm, lam, n, metric))

    def table(self, lam: float, n: int) -> dict[str, dict[str, float]]:
        out: dict[str, dict[str, float]] = {}
        for r in self.rows:
            if r.lam == lam and r.n == n:
                out.setdefault(r.algorithm, {})[r.metric] = r.value
        return out


@dataclass
class _Context:
    config: ExperimentConfig
    model: factorizer.MFModel
    distances: DistanceModel
    similarity: ItemSimilarity
    liked: dict[int, frozenset[int]]
    catalogue: frozenset[int]
    rel: corpus_mod.RelevanceJudgments


@dataclass
class UserOutcome:
    user: int
    lists: dict[tuple[str, float], tuple[int, ...]]
    values: dict[tuple[str, float, int, str], float]


@contextmanager
def _stage(name: str):
    """Label errors escaping a pipeline stage with the stage name."""
    try:
        yield
    except StageError:
        raise
    except (DiverankError, ValueError, OSError) as exc:
        raise StageError(name, exc) from exc


def prepare(config: ExperimentConfig) -> tuple[_Context, list[int]]:
    with _stage("corpus"):
        if config.ratings is None or config.items is None:
            raise DataError("config must name both 'ratings' and 'items' files")
        ratings = corpus_mod.read_ratings(config.ratings)
        item_features = corpus_mod.read_item_features(config.items)
        split = corpus_mod.split(ratings, config.holdout_fraction, config.seed)
        rel = corpus_mod.judgments(split, config.relevance_threshold)
        liked = corpus_mod.liked_profiles(split.train, config.relevance_threshold)
        log.info("corpus: %d train / %d test ratings", len(split.train), len(split.test))

    with _stage("factorizer"):
        model = factorizer.train(split.train, config.mf)

    with _stage("aspects"):
        distances = DistanceModel(item_features)
        similarity = ItemSimilarity(split.train)

    catalogue = frozenset(int(i) for i in model.item_ids)
    users = [u for u in rel.users() if rel[u] and model.user_index(u) is not None]
    if not users:
        raise StageError("corpus", DataError("no test user has a relevant item"))
    ctx = _Context(config, model, distances, similarity, liked, catalogue, rel)
    return ctx, users


def evaluate_user(ctx: _Context, u: int) -> UserOutcome:
    cfg = ctx.config
    with _stage("factorizer"):
        pool = ctx.catalogue - ctx.model.seen.get(u, frozenset())
        rs = factorizer.candidates(ctx.model, u, pool, cfg.candidates)

    with _stage("aspects"):
        liked = ctx.liked.get(u, frozenset())
        feats = feature_aspects(u, ctx.distances, liked, rs)
        subs = mine_subprofiles(u, liked, ctx.similarity, cfg.knn_k)
        subasp = subprofile_aspects(u, subs, rs, ctx.similarity, cfg.coverage_k)

    lists: dict[tuple[str, float], tuple[int, ...]] = {}
    with _stage("reranker"):
        for alg in cfg.algorithms:
            kind = ALGORITHMS[alg]
            aspects = feats if alg == "xQuAD" else subasp
            div = make_diversity(kind, ctx.distances, aspects)
            lams = cfg.lambdas if kind != NONE else cfg.lambdas[:1]
            for lam in lams:
                gc = GreedyConfig(lam, cfg.max_n, kind, cfg.normalize_scores)
                lists[(alg, lam)] = greedy_rerank(rs, gc, div).items
            if kind == NONE:
                for lam in cfg.lambdas[1:]:
                    lists[(alg, lam)] = lists[(alg, cfg.lambdas[0])]

    values: dict[tuple[str, float, int, str], float] = {}
    rel_u = ctx.rel[u]
    cache: dict[tuple[int, ...], dict[tuple[int, str], float]] = {}
    with _stage("metrics"):
        for (alg, lam), full in lists.items():
            per_list = cache.get(full)
            if per_list is None:
                per_list = {}
                for n in cfg.cutoffs:
                    top = full[:n]
                    per_list[(n, ILD)] = metrics.ild(top, ctx.distances)
                    per_list[(n, ANDCG_F)] = metrics.alpha_ndcg(top, feats, rel_u, cfg.alpha, n)
                    per_list[(n, ANDCG_S)] = metrics.alpha_ndcg(top, subasp, rel_u, cfg.alpha, n)
                    per_list[(n, PRECISION)] = metrics.precision(top, rel_u)
                    per_list[(n, MRR)] = metrics.mrr(top, rel_u)
                    per_list[(n, ONE_CALL)] = float(metrics.one_call(top, rel_u))
                cache[full] = per_list
            for (n, m), v in per_list.items():
                values[(alg, lam, n, m)] = v
    return UserOutcome(u, lists, values)


_WORKER_CTX: _Context | None = None


def _init_worker(ctx: _Context) -> None:
    global _WORKER_CTX
    _WORKER_CTX = ctx


def _evaluate_in_worker(u: int) -> UserOutcome:
    return evaluate_user(_WORKER_CTX, u)


def evaluate_users(ctx: _Context, users: list[int]) -> list[UserOutcome]:
    if ctx.config.workers <= 1 or len(users) < 2:
        return [evaluate_user(ctx, u) for u in users]
    with ProcessPoolExecutor(ctx.config.workers, initializer=_init_worker, initargs=(ctx,)) as ex:
        # map() yields in input order, so the reduction below is order-stable
        return list(ex.map(_evaluate_in_worker, users, chunksize=max(1, len(users) // (4 * ctx.config.workers))))


def aggregate(config: ExperimentConfig, outcomes: list[UserOutcome]) -> list[ResultRow]:
    outcomes = sorted(outcomes, key=lambda o: o.user)
    rows = []
    for alg in config.algorithms:
        for lam in config.lambdas:
            for n in config.cutoffs:
                for m in METRICS:
                    vals = [o.values[(alg, lam, n, m)] for o in outcomes]
                    rows.append(ResultRow(alg, lam, n, m, math.fsum(vals) / len(vals)))
    return rows


def sudden_death(config: ExperimentConfig, outcomes: list[UserOutcome], rel) -> dict[tuple[float, int], SDReport]:
    users = sorted(o.user for o in outcomes)
    by_user = {o.user: o for o in outcomes}
    reports = {}
    for lam in config.lambdas:
        for n in config.cutoffs:
            lists = {
                (u, alg): by_user[u].lists[(alg, lam)][:n]
                for u in users
                for alg in config.algorithms
            }
            runset = RunSet(tuple(config.algorithms), lists, n, rel)
            reports[(lam, n)] = sd_scores(runset, users)
    return reports


def run_experiment(config: ExperimentConfig) -> ExperimentResult:
    """Run the whole pipeline in memory; see :func:`diverank.harness.run` to also write files."""
    config.validate()
    ctx, users = prepare(config)
    log.info("evaluating %d users", len(users))
    outcomes = evaluate_users(ctx, users)
    rows = aggregate(config, outcomes)
    with _stage("sudden-death"):
        reports = sudden_death(config, outcomes, ctx.rel)
    return ExperimentResult(config, rows, reports, users)
