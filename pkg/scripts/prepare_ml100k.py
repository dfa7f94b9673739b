"""Write MovieLens 100K as ``::``-delimited ratings.dat / movies.dat.

MovieLens cannot be fetched from grouplens.org in every environment, but the
``pytorch-widedeep`` wheel on PyPI bundles the 100K ratings and item tables.
This script downloads that wheel (without installing it), reads the two
parquet tables and converts them to the 1M file layout:

    ratings.dat  user::item::rating::timestamp
    movies.dat   item::title::Genre1|Genre2|...

The "unknown" genre flag is dropped, so those items end up featureless.

Usage: python scripts/prepare_ml100k.py [OUT_DIR]   (default: data/ml-100k)
"""

from __future__ import annotations

import io
import subprocess
import sys
import tempfile
import zipfile
from pathlib import Path

import pandas as pd

WHEEL = "pytorch-widedeep==1.7.0"
MEMBERS = {
    "ratings": "pytorch_widedeep/datasets/data/MovieLens100k_data.parquet.brotli",
    "items": "pytorch_widedeep/datasets/data/MovieLens100k_items.parquet.brotli",
}
GENRES = [
    "Action", "Adventure", "Animation", "Children's", "Comedy", "Crime",
    "Documentary", "Drama", "Fantasy", "Film-Noir", "Horror", "Musical",
    "Mystery", "Romance", "Sci-Fi", "Thriller", "War", "Western",
]


def fetch_tables() -> tuple[pd.DataFrame, pd.DataFrame]:
    with tempfile.TemporaryDirectory() as tmp:
        subprocess.run(
            [sys.executable, "-m", "pip", "download", "--no-deps", "--quiet", "-d", tmp, WHEEL],
            check=True,
        )
        wheel = next(Path(tmp).glob("*.whl"))
        with zipfile.ZipFile(wheel) as zf:
            ratings = pd.read_parquet(io.BytesIO(zf.read(MEMBERS["ratings"])))
            items = pd.read_parquet(io.BytesIO(zf.read(MEMBERS["items"])))
    return ratings, items


def write(out: Path) -> None:
    ratings, items = fetch_tables()
    out.mkdir(parents=True, exist_ok=True)
    lines = [
        f"{r.user_id}::{r.movie_id}::{r.rating}::{r.timestamp}\n"
        for r in ratings.itertuples(index=False)
    ]
    (out / "ratings.dat").write_bytes("".join(lines).encode("latin-1"))
    rows = []
    for rec in items.to_dict("records"):
        genres = "|".join(g for g in GENRES if int(rec[g]))
        rows.append(f"{rec['movie_id']}::{rec['movie_title']}::{genres}\n")
    (out / "movies.dat").write_bytes("".join(rows).encode("latin-1", errors="replace"))


def main(argv: list[str]) -> int:
    out = Path(argv[1]) if len(argv) > 1 else Path("data/ml-100k")
    write(out)
    print(f"wrote {out / 'ratings.dat'} and {out / 'movies.dat'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main(sys.argv))
