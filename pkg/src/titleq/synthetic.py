"""Synthetic title corpora and embedding tables with known labeling rules.

Conciseness is ``1[word count <= 8]`` and clarity is ``1[title mentions a word
of its own category]``, each flipped with probability ``noise``.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .corpus import Record, write_csv
from .embed import EmbeddingStore

COUNTRIES = ("my", "ph", "sg")
LEVELS = ("basic", "premium")
_CATEGORIES = {
    "fashion": ("women", "men"),
    "electronics": ("audio", "mobile"),
    "home": ("kitchen", "garden"),
}
_SYLLABLES = ("ka", "lo", "mi", "ra", "te", "su", "no", "vi", "pe", "zu", "an", "or")


def _words(rng: np.random.Generator, n: int) -> list[str]:
    seen: dict[str, None] = {}
    while len(seen) < n:
        k = int(rng.integers(2, 4))
        seen["".join(rng.choice(_SYLLABLES, size=k))] = None
    return list(seen)


def make_vocabulary(seed: int = 0, words_per_topic: int = 12, n_generic: int = 40):
    """Topic word lists per category plus generic filler words."""
    rng = np.random.default_rng([seed, 11])
    topics = {}
    for cat1, subs in _CATEGORIES.items():
        for cat2 in subs:
            topics[(cat1, cat2)] = _words(rng, words_per_topic)
    generic = [w for w in _words(rng, n_generic + 200) if all(w not in t for t in topics.values())][:n_generic]
    return topics, generic


def make_embeddings(dim: int = 16, seed: int = 0) -> EmbeddingStore:
    """Clustered random vectors: topic words sit near their category's centre."""
    rng = np.random.default_rng([seed, 12])
    topics, generic = make_vocabulary(seed)
    table: dict[str, np.ndarray] = {}
    for (cat1, cat2), words in topics.items():
        centre = rng.normal(size=dim)
        for w in (cat1, cat2):
            table.setdefault(w, centre + 0.3 * rng.normal(size=dim))
        for w in words:
            table[w] = centre + 0.5 * rng.normal(size=dim)
    for w in generic:
        table[w] = rng.normal(size=dim)
    for w in ("set", "new", "sale"):
        table.setdefault(w, rng.normal(size=dim))
    return EmbeddingStore.from_dict(table, dim)


def make_records(n: int, seed: int = 0, noise: float = 0.05) -> list[Record]:
    rng = np.random.default_rng([seed, 13])
    topics, generic = make_vocabulary(seed)
    keys = sorted(topics)
    out = []
    for _ in range(n):
        cat1, cat2 = keys[int(rng.integers(len(keys)))]
        length = int(rng.integers(2, 16))
        on_topic = bool(rng.random() < 0.5)
        pool = topics[(cat1, cat2)] if on_topic else generic
        words = list(rng.choice(pool, size=length))
        if rng.random() < 0.2:
            words.insert(int(rng.integers(len(words) + 1)), "SALE!")
        title = " ".join(w.capitalize() if rng.random() < 0.3 else w for w in words)
        wc = len(title.split())
        concise = int(wc <= 8)
        clear = int(on_topic)
        if rng.random() < noise:
            concise = 1 - concise
        if rng.random() < noise:
            clear = 1 - clear
        out.append(Record(
            country=COUNTRIES[int(rng.integers(len(COUNTRIES)))],
            title=title,
            cat1=cat1,
            cat2=cat2,
            cat3=f"{cat2} {rng.choice(('items', 'goods'))}",
            price=float(np.round(np.exp(rng.normal(3.0, 1.0)), 2)) + 0.01,
            level=LEVELS[int(rng.integers(len(LEVELS)))],
            clarity_label=clear,
            conciseness_label=concise,
        ))
    return out


def write_embeddings(path: str | Path, store: EmbeddingStore) -> None:
    inv = sorted(store.index, key=store.index.get)
    with Path(path).open("w", encoding="utf-8") as fh:
        for tok in inv:
            vec = store.vectors[store.index[tok]]
            fh.write(tok + " " + " ".join(repr(float(v)) for v in vec) + "\n")


def write_fixture(directory: str | Path, n: int = 200, dim: int = 16, seed: int = 0, noise: float = 0.05) -> dict:
    """Write train/test CSVs and an embedding file; return their paths."""
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    records = make_records(n, seed, noise)
    n_test = max(1, n // 10)
    write_csv(d / "train.csv", records[n_test:], with_labels=True)
    write_csv(d / "test.csv", records[:n_test], with_labels=False)
    write_embeddings(d / "vectors.txt", make_embeddings(dim, seed))
    return {"train": str(d / "train.csv"), "test": str(d / "test.csv"), "embeddings": str(d / "vectors.txt")}
