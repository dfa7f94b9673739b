import os
import subprocess
import sys
from pathlib import Path

import pytest

from diverank.harness.synthetic import make_corpus

ROOT = Path(__file__).resolve().parents[1]
ML100K = Path(os.environ.get("DIVERANK_ML100K", ROOT / "data" / "ml-100k"))


@pytest.fixture(scope="session")
def toy_corpus(tmp_path_factory):
    """20-user synthetic corpus in MovieLens 1M layout."""
    d = tmp_path_factory.mktemp("toy")
    ratings, movies = make_corpus(d, n_users=20, n_items=60, ratings_per_user=25, seed=7)
    return ratings, movies


@pytest.fixture(scope="session")
def ml100k():
    """MovieLens 100K in ``::`` format, converted on first use."""
    ratings, movies = ML100K / "ratings.dat", ML100K / "movies.dat"
    if not (ratings.exists() and movies.exists()):
        subprocess.run(
            [sys.executable, str(ROOT / "scripts" / "prepare_ml100k.py"), str(ML100K)],
            check=True,
        )
    return ratings, movies


def pytest_terminal_summary(terminalreporter):
    from . import test_acceptance as acc

    if not acc.VERDICTS and not acc.TABLES:
        return
    terminalreporter.section("acceptance criteria")
    for line in acc.VERDICTS:
        terminalreporter.write_line(line)
    for table in acc.TABLES:
        terminalreporter.write_line("")
        for line in table.splitlines():
            terminalreporter.write_line(line)
