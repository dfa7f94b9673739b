"""Small synthetic MovieLens-format corpora for tests and demos."""

from __future__ import annotations

from pathlib import Path

import numpy as np

GENRES = ("Action", "Comedy", "Drama", "Horror", "Romance", "Sci-Fi")


def make_corpus(
    out_dir: str | Path,
    n_users: int = 20,
    n_items: int = 60,
    ratings_per_user: int = 25,
    seed: int = 0,
) -> tuple[Path, Path]:
    """Write ``ratings.dat`` and ``movies.dat`` with genre-driven tastes.

    Each item gets one to three genres; each user prefers two genres and rates
    items carrying them higher. Returns the two file paths.
    """
    rng = np.random.default_rng(seed)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    item_genres = []
    for _ in range(n_items):
        k = int(rng.integers(1, 4))
        item_genres.append(sorted(rng.choice(len(GENRES), size=k, replace=False).tolist()))
    movie_lines = [
        f"{i + 1}::Item {i + 1} (2000)::{'|'.join(GENRES[g] for g in gs)}\n"
        for i, gs in enumerate(item_genres)
    ]
    rating_lines = []
    ts = 978300000
    for u in range(n_users):
        liked = set(rng.choice(len(GENRES), size=2, replace=False).tolist())
        items = rng.choice(n_items, size=min(ratings_per_user, n_items), replace=False)
        for i in items.tolist():
            match = len(liked.intersection(item_genres[i]))
            value = int(np.clip(round(2 + 1.2 * match + rng.normal(0, 0.8)), 1, 5))
            ts += int(rng.integers(1, 500))
            rating_lines.append(f"{u + 1}::{i + 1}::{value}::{ts}\n")
    ratings_path, movies_path = out / "ratings.dat", out / "movies.dat"
    ratings_path.write_bytes("".join(rating_lines).encode("latin-1"))
    movies_path.write_bytes("".join(movie_lines).encode("latin-1"))
    return ratings_path, movies_path
