"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line that is printed in the pytest terminal
summary (see ``conftest.pytest_terminal_summary``). Run just this module with

    pytest tests/test_acceptance.py -v
"""

import csv
import dataclasses
import itertools
import random
import re
import time
import xml.etree.ElementTree as ET
from contextlib import contextmanager
from fractions import Fraction

import numpy as np
import pytest

from diverank.aspects import (
    DistanceModel,
    ItemSimilarity,
    UserAspects,
    feature_aspects,
    mine_subprofiles,
    subprofile_aspects,
)
from diverank import corpus, factorizer
from diverank.cli import run
from diverank.factorizer import ScoredCandidates
from diverank.harness import load_config
from diverank.harness.output import METRICS_HEADER, SD_HEADER
from diverank.harness.pipeline import METRICS
from diverank.metrics import alpha_ndcg, ild, mrr, one_call, precision
from diverank.reranker import (
    IA_FEATURES,
    MMR,
    GreedyConfig,
    IntentAwareDiversity,
    MMRDiversity,
    greedy_rerank,
    ia_div,
)
from diverank.suddendeath import RunSet, sd_scores, sd_user

from . import oracles

VERDICTS: list[str] = []


@contextmanager
def criterion(tag: str, title: str):
    try:
        yield
    except BaseException as exc:
        first = str(exc).strip().splitlines()[0] if str(exc).strip() else type(exc).__name__
        VERDICTS.append(f"FAIL  {tag}  {title}  -- {first}")
        raise
    VERDICTS.append(f"PASS  {tag}  {title}")


# -- 1 -----------------------------------------------------------------------


def test_ac1_sd_reduces_to_one_call():
    with criterion("AC1", "SD with a singleton roster equals mean 1-call (1000 users, N=10, <1 s)"):
        rnd = random.Random(20190916)
        n, pool = 10, 200
        lists, rel = {}, {}
        for u in range(1, 1001):
            rel[u] = frozenset(rnd.sample(range(pool), rnd.randint(0, 15)))
            lists[(u, "a")] = rnd.sample(range(pool), n)
        start = time.perf_counter()
        report = sd_scores(RunSet(("a",), lists, n, rel))
        elapsed = time.perf_counter() - start
        hits = sum(one_call(lists[(u, "a")], rel[u]) for u in rel)
        assert report.exact("a") == Fraction(hits, 1000)
        assert abs(report.scores["a"] - hits / 1000) <= 1e-12
        assert elapsed < 1.0, f"took {elapsed:.3f}s"


# -- 2 -----------------------------------------------------------------------


def test_ac2_sudden_death_golden_traces():
    with criterion("AC2", "Sudden Death golden traces incl. hit exactly at rank N"):
        rel = {1: frozenset({1, 2})}

        def rs(a, b, n=5):
            return RunSet(("A", "B"), {(1, "A"): a, (1, "B"): b}, n, rel)

        assert sd_user(1, rs([9, 1, 8], [9, 8, 1])) == {"A": 1, "B": 0}
        assert sd_user(1, rs([1, 9], [2, 9])) == {"A": 1, "B": 1}
        assert sd_user(1, rs([9, 8], [7, 6])) == {"A": 0, "B": 0}
        edge = rs([9, 8, 7, 1], [6, 5, 4, 3], n=4)
        assert sd_user(1, edge) == {"A": 1, "B": 0}
        assert sd_scores(edge).scores["A"] == 1.0


# -- 3 -----------------------------------------------------------------------


class RandomDistances:
    def __init__(self, rnd, items):
        self.d = {}
        for i, j in itertools.combinations(items, 2):
            self.d[frozenset((i, j))] = rnd.random()
        self.items = items

    def distance(self, i, j):
        return 0.0 if i == j else self.d[frozenset((i, j))]

    def matrix(self, items):
        return np.array([[self.distance(i, j) for j in items] for i in items])


def random_user_aspects(rnd, items):
    names = tuple(f"a{k}" for k in range(rnd.randint(1, 4)))
    w = [rnd.random() for _ in names]
    total = sum(w)
    probs = {a: {i: rnd.random() for i in items if rnd.random() < 0.7} for a in names}
    return UserAspects(
        1, "random", names, {a: frozenset(p) for a, p in probs.items()},
        {a: x / total for a, x in zip(names, w)}, probs,
    )


def test_ac3_greedy_matches_exhaustive_argmax():
    with criterion("AC3", "greedy steps equal exhaustive argmax; incremental IA within 1e-12 (500 instances)"):
        rnd = random.Random(3)
        worst = 0.0
        for trial in range(500):
            m = rnd.randint(1, 8)
            items = rnd.sample(range(1, 50), m)
            scores = {i: rnd.choice([rnd.random(), round(rnd.random(), 1)]) for i in items}
            rs = ScoredCandidates(1, tuple(sorted(scores.items(), key=lambda e: (-e[1], e[0]))))
            n = rnd.randint(1, 4)
            lam = rnd.choice([0.0, 1.0, rnd.random()])
            if trial % 2:
                dm = RandomDistances(rnd, items)
                div, kind = MMRDiversity(dm), MMR
                gain = lambda i, rl, dm=dm: oracles.max_distance_gain(i, rl, dm.distance)
            else:
                ua = random_user_aspects(rnd, items)
                div, kind = IntentAwareDiversity(ua), IA_FEATURES
                gain = lambda i, rl, ua=ua: oracles.intent_aware_gain(i, rl, ua.weights, ua.item_probs)
                tracker = div.tracker(rs.items)
            got = greedy_rerank(rs, GreedyConfig(lam, n, kind), div).items
            for step, chosen in enumerate(got):
                prefix = list(got[:step])
                remaining = [i for i in rs.items if i not in prefix]
                best = max(remaining, key=lambda i: ((1 - lam) * scores[i] + lam * gain(i, prefix), scores[i], -i))
                assert chosen == best, f"trial {trial} step {step}: chose {chosen}, exhaustive {best}"
                if kind == IA_FEATURES:
                    g = tracker.gains()
                    for idx, i in enumerate(rs.items):
                        direct = ia_div(i, prefix, ua)
                        worst = max(worst, abs(g[idx] - direct))
                    tracker.add(rs.items.index(chosen))
        assert worst <= 1e-12, f"incremental vs direct differ by {worst:g}"


# -- 4 -----------------------------------------------------------------------


def test_ac4_metric_oracles():
    with criterion("AC4", "alpha-nDCG vs naive (1e-9), ILD vs brute force, P<=1-call and MRR<=1-call (500 instances)"):
        rnd = random.Random(4)
        for trial in range(500):
            n_items = rnd.randint(1, 5)
            n_aspects = rnd.randint(1, 4)
            catalogue = list(range(1, n_items + 4))
            aspects_of = {i: {f"a{k}" for k in range(n_aspects) if rnd.random() < 0.5} for i in catalogue}
            names = tuple(sorted({a for s in aspects_of.values() for a in s}))
            rel = {i for i in catalogue if rnd.random() < 0.5}
            items = rnd.sample(catalogue, n_items)
            alpha = rnd.choice([0.5, 0.0, 1.0, rnd.random()])
            if names:
                ua = UserAspects(
                    1, "random", names,
                    {a: frozenset(i for i in catalogue if a in aspects_of[i]) for a in names},
                    {a: 1 / len(names) for a in names}, {},
                )
                got = alpha_ndcg(items, ua, rel, alpha)
                want = oracles.alpha_ndcg_naive(items, aspects_of, rel, alpha)
                assert abs(got - want) <= 1e-9, f"trial {trial}: {got} vs {want}"
                assert 0.0 <= got <= 1.0
            feats = {i: {g for g in "ABCDE" if rnd.random() < 0.4} for i in catalogue}
            dm = DistanceModel(feats)
            assert abs(ild(items, dm) - oracles.ild_bruteforce(items, dm.distance)) <= 1e-12
            oc = one_call(items, rel)
            assert precision(items, rel) <= oc and mrr(items, rel) <= oc


# -- 5 -----------------------------------------------------------------------


def test_ac5_property_suites(toy_corpus):
    with criterion("AC5", "IA submodularity (1000), SD monotone in roster (500), ILD permutation, sum p(a|u)=1"):
        rnd = random.Random(5)
        for trial in range(1000):
            items = list(range(1, rnd.randint(2, 10) + 1))
            ua = random_user_aspects(rnd, items)
            i = rnd.choice(items)
            others = [j for j in items if j != i]
            big = rnd.sample(others, rnd.randint(0, len(others)))
            small = rnd.sample(big, rnd.randint(0, len(big)))
            lo, hi = ia_div(i, big, ua), ia_div(i, small, ua)
            # products taken in different orders may differ by one ulp
            assert hi >= lo - 1e-15 and lo >= 0.0, f"trial {trial}: {hi} < {lo}"

        for trial in range(500):
            algs = [f"a{k}" for k in range(rnd.randint(1, 4))]
            users = range(1, rnd.randint(1, 25) + 1)
            n = rnd.randint(1, 10)
            lists, rel = {}, {}
            for u in users:
                rel[u] = frozenset(rnd.sample(range(40), rnd.randint(0, 5)))
                for a in algs + ["new"]:
                    lists[(u, a)] = rnd.sample(range(40), n)
            before_lists = {k: v for k, v in lists.items() if k[1] != "new"}
            before = sd_scores(RunSet(tuple(algs), before_lists, n, rel))
            after = sd_scores(RunSet(tuple(algs + ["new"]), lists, n, rel))
            for u in users:
                for a in algs:
                    assert after.awards[u][a] <= before.awards[u][a]
            for a in algs:
                assert after.scores[a] <= before.scores[a]

        for _ in range(200):
            feats = {i: {g for g in "ABCDEF" if rnd.random() < 0.35} for i in range(1, rnd.randint(1, 12) + 1)}
            dm = DistanceModel(feats)
            lst = list(feats)
            shuffled = lst[:]
            rnd.shuffle(shuffled)
            assert abs(ild(lst, dm) - ild(shuffled, dm)) <= 1e-12

        ratings = corpus.read_ratings(toy_corpus[0])
        dm = DistanceModel(corpus.read_item_features(toy_corpus[1]))
        sc = corpus.split(ratings, 0.2, 0)
        liked = corpus.liked_profiles(sc.train)
        model = factorizer.train(sc.train, factorizer.MFConfig(d=4, epochs=5))
        sim = ItemSimilarity(sc.train)
        families = {"features": 0, "subprofiles": 0}
        for u, prof in sorted(liked.items()):
            pool = {int(i) for i in model.item_ids} - model.seen[u]
            rs = factorizer.candidates(model, u, pool, 30)
            for ua in (
                feature_aspects(u, dm, prof, rs),
                subprofile_aspects(u, mine_subprofiles(u, prof, sim, 10), rs, sim, 10),
            ):
                if ua.weights:
                    assert abs(sum(ua.weights.values()) - 1.0) <= 1e-9
                    families[ua.family] += 1
        assert all(families.values()), families


# -- 6, 7, 8: MovieLens 100K end to end ----------------------------------------


@pytest.fixture(scope="module")
def ml_run(ml100k, tmp_path_factory):
    out = tmp_path_factory.mktemp("ml100k")
    cfg = load_config(None, ratings=ml100k[0], items=ml100k[1], out=out / "run1")
    start = time.perf_counter()
    result = run(cfg)
    return cfg, result, time.perf_counter() - start


def format_table(result, lam, n):
    table = result.table(lam, n)
    sd = result.reports[(lam, n)].scores
    head = "algorithm " + " ".join(f"{m:>13s}" for m in METRICS) + f" {'SD':>9s}"
    lines = [head]
    for alg, vals in table.items():
        lines.append(f"{alg:9s} " + " ".join(f"{vals[m]:13.6f}" for m in METRICS) + f" {sd[alg]:9.6f}")
    return "\n".join(lines)


TABLES: list[str] = []


@pytest.mark.slow
def test_ac6_metric_leaders_on_movielens(ml_run):
    cfg, result, elapsed = ml_run
    table = result.table(0.5, 10)
    text = format_table(result, 0.5, 10)
    TABLES.append(f"MovieLens 100K, lambda=0.5, N=10, {len(result.users)} users, {elapsed:.0f}s:\n{text}")

    def leader(metric):
        return max(table, key=lambda a: table[a][metric])

    checks = [
        ("AC6a", "MMR has the highest ILD", "ILD", "MMR"),
        ("AC6b", "xQuAD has the highest alpha-nDCG-F", "alpha-nDCG-F", "xQuAD"),
        ("AC6c", "SPAD has the highest alpha-nDCG-S", "alpha-nDCG-S", "SPAD"),
    ]
    failures = []
    for tag, title, metric, expected in checks:
        try:
            with criterion(tag, title):
                got = leader(metric)
                assert got == expected, f"{metric} leader is {got}, not {expected}"
        except AssertionError as exc:
            failures.append(str(exc))
    with criterion("AC6d", "end-to-end runtime under 30 minutes"):
        assert elapsed < 30 * 60, f"{elapsed:.0f}s"
    assert not failures, "; ".join(failures) + "\n" + text


@pytest.mark.slow
def test_ac7_determinism(ml_run, tmp_path):
    with criterion("AC7", "two full runs with the same seed give byte-identical CSVs"):
        cfg, _, _ = ml_run
        again = dataclasses.replace(cfg, out=tmp_path / "run2")
        run(again)
        for name in ("metrics.csv", "sd.csv"):
            assert (cfg.out / name).read_bytes() == (again.out / name).read_bytes(), name


@pytest.mark.slow
def test_ac8_output_contract(ml_run):
    with criterion("AC8", "metrics.csv/sd.csv schemas, row-count formula, SVG well-formed"):
        cfg, result, _ = ml_run
        raw = (cfg.out / "metrics.csv").read_bytes()
        assert b"\r\n" not in raw
        raw.decode("utf-8")
        with open(cfg.out / "metrics.csv", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            assert tuple(next(reader)) == METRICS_HEADER
            rows = list(reader)
        expected = len(cfg.algorithms) * len(cfg.lambdas) * len(cfg.cutoffs) * len(METRICS)
        assert len(rows) == expected, f"{len(rows)} rows, expected {expected}"
        for r in rows:
            assert r[0] in cfg.algorithms and r[3] in METRICS
            assert float(r[1]) in cfg.lambdas and int(r[2]) in cfg.cutoffs
            assert re.fullmatch(r"-?\d+\.\d{6}", r[4])
        with open(cfg.out / "sd.csv", newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            assert tuple(next(reader)) == SD_HEADER
            sd_rows = list(reader)
        assert len(sd_rows) == len(cfg.algorithms) * len(cfg.lambdas) * len(cfg.cutoffs)
        roster = "|".join(cfg.algorithms)
        for r in sd_rows:
            assert r[4] == roster
            assert re.fullmatch(r"\d+\.\d{6}", r[3])
        svgs = sorted(cfg.out.glob("*.svg"))
        assert len(svgs) == 10
        for p in svgs:
            root = ET.parse(p).getroot()
            assert root.tag == "{http://www.w3.org/2000/svg}svg"
