"""The 45 engineered title/category features and the per-task subsets.

Feature ids are 1-based and fixed; ``FeatureVector`` values live at slot
``id - 1``. Categorical columns carry integer codes (0 = unseen).
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

import numpy as np

from .corpus import Record, TokenizedTitle, tokenize
from .embed import EmbeddingStore, avg_vector, cosine_sim, norm01, phrase_matrix
from .jaro import pairwise_jaro_winkler
from .tensor.layers import attentive_pool_forward

N_FEATURES = 45
NEUTRAL = 0.5
HIGH_CUT = 0.85
LOW_CUT = 0.1
# "equal to one" is judged with this slack so float cosines of identical
# vectors (0.9999999999999998) still count as full matches
FULL_MATCH_TOL = 1e-12
P2M_TITLE_LEN = 45
P2M_CAT_LEN = 10

CATEGORICAL_FIELDS = ("country", "level", "cat1", "cat2", "cat3")


@dataclass(frozen=True)
class FeatureSpec:
    id: int
    name: str
    group: str
    kind: str = "numeric"  # or "categorical"
    scale: str | None = None  # "percent" -> [0, 100], "unit" -> [0, 1]


def _registry() -> tuple[FeatureSpec, ...]:
    e = []
    add = lambda name, group, kind="numeric", scale=None: e.append(FeatureSpec(len(e) + 1, name, group, kind, scale))
    add("country", "Given", "categorical")
    add("log_price_norm", "Given")
    add("level", "Given", "categorical")
    add("category_1", "Given", "categorical")
    add("category_2", "Given", "categorical")
    add("category_3", "Given", "categorical")
    for tag in ("ac", "bc"):
        add(f"n_words_{tag}", "TitleCounts")
        add(f"max_word_len_{tag}", "TitleCounts")
        add(f"min_word_len_{tag}", "TitleCounts")
        add(f"avg_word_len_{tag}", "TitleCounts")
    add("contains_digit", "TitleCounts")
    add("non_alpha_pct", "TitleCounts", scale="percent")
    add("jw_mean", "StringMatch", scale="unit")
    add("jw_pct_high", "StringMatch", scale="percent")
    add("jw_pct_low", "StringMatch", scale="percent")
    add("jw_pct_full", "StringMatch", scale="percent")
    add("jw_sum", "StringMatch")
    add("sem_mean", "SemMatch", scale="unit")
    add("sem_pct_high", "SemMatch", scale="percent")
    add("sem_pct_low", "SemMatch", scale="percent")
    add("sem_pct_full", "SemMatch", scale="percent")
    add("pct_in_vocab", "SemMatch", scale="percent")
    add("pct_unique_oov", "SemMatch", scale="percent")
    for lvl in (1, 2, 3):
        add(f"avg_sem_title_cat{lvl}", "TitleCatSem", scale="unit")
    for stat in ("sum", "max", "min"):
        for lvl in (1, 2):
            add(f"other_cat{lvl}_{stat}", "TitleOtherCat", scale=None if stat == "sum" else "unit")
    for lvl in (1, 2, 3):
        add(f"title_cat{lvl}_matrix_max", "TitleCatMatrix", scale="unit")
    for k in (1, 2, 3, 4):
        add(f"attn_v{k}", "ShallowAttention", scale="unit")
    add("has_sexy", "Others")
    add("capital_pct", "Others", scale="percent")
    return tuple(e)


REGISTRY: tuple[FeatureSpec, ...] = _registry()
assert [s.id for s in REGISTRY] == list(range(1, N_FEATURES + 1))

CLARITY_IDS: tuple[int, ...] = (*range(1, 12), 15, 16, 28, 29, 30, 37, 38, 39, 40, 42, 43, 44, 45)
CONCISENESS_IDS: tuple[int, ...] = tuple(i for i in range(1, N_FEATURES + 1) if i not in (37, 38, 39))


def task_ids(task: str) -> tuple[int, ...]:
    if task == "clarity":
        return CLARITY_IDS
    if task == "conciseness":
        return CONCISENESS_IDS
    raise ValueError(f"unknown task {task!r}")


def task_registry(task: str) -> list[FeatureSpec]:
    return [REGISTRY[i - 1] for i in task_ids(task)]


# ----------------------------------------------------------- building blocks


def pair_stats(mat: np.ndarray) -> tuple[float, float, float, float, float]:
    """(mean, % > 0.85, % < 0.1, % == 1, sum) over the strict upper triangle."""
    n = mat.shape[0]
    if n < 2:
        return 0.0, 0.0, 0.0, 0.0, 0.0
    vals = mat[np.triu_indices(n, k=1)]
    npairs = vals.size
    return (
        float(vals.mean()),
        100.0 * np.count_nonzero(vals > HIGH_CUT) / npairs,
        100.0 * np.count_nonzero(vals < LOW_CUT) / npairs,
        100.0 * np.count_nonzero(vals >= 1.0 - FULL_MATCH_TOL) / npairs,
        float(vals.sum()),
    )


def sem_matrix(tokens, store: EmbeddingStore) -> np.ndarray:
    """norm01 cosine between every pair of in-vocabulary tokens (OOV dropped)."""
    U = store.unit_matrix(tokens)
    return norm01(np.clip(U @ U.T, -1.0, 1.0))


def cross_sem_matrix(tokens_a, tokens_b, store: EmbeddingStore) -> np.ndarray:
    A = store.unit_matrix(tokens_a)
    B = store.unit_matrix(tokens_b)
    return norm01(np.clip(A @ B.T, -1.0, 1.0))


def f_title_counts(title: str, tok: TokenizedTitle) -> list[float]:
    out = []
    for toks in (tok.tokens_ac, tok.tokens_bc):
        if toks:
            lens = [len(t) for t in toks]
            out += [len(toks), max(lens), min(lens), sum(lens) / len(lens)]
        else:
            out += [0, 0, 0, 0.0]
    out.append(1.0 if re.search(r"[0-9]", title) else 0.0)
    if title:
        n_alpha = sum(1 for c in title if ("a" <= c <= "z") or ("A" <= c <= "Z"))
        out.append(100.0 * (len(title) - n_alpha) / len(title))
    else:
        out.append(0.0)
    return [float(v) for v in out]


def f_string_match(tokens_ac) -> list[float]:
    return list(pair_stats(pairwise_jaro_winkler(tokens_ac)))


def f_semantic_match(tokens_ac, store: EmbeddingStore) -> list[float]:
    mean, high, low, full, _ = pair_stats(sem_matrix(tokens_ac, store))
    n = len(tokens_ac)
    oov = [t for t in tokens_ac if t not in store]
    pct_in = 100.0 * (n - len(oov)) / n if n else 0.0
    pct_unique_oov = 100.0 * len(set(oov)) / len(oov) if oov else 0.0
    return [mean, high, low, full, pct_in, pct_unique_oov]


def f_title_cat_sem(tokens_ac, cat_tokens, store: EmbeddingStore) -> list[float]:
    t = avg_vector(tokens_ac, store)
    out = []
    for ct in cat_tokens:
        c = avg_vector(ct, store)
        if t.n_hits == 0 or c.n_hits == 0:
            out.append(NEUTRAL)
        else:
            out.append(float(norm01(cosine_sim(t.vec, c.vec))))
    return out


def f_title_cat_matrix(tokens_ac, cat_tokens, store: EmbeddingStore) -> list[float]:
    out = []
    for ct in cat_tokens:
        m = cross_sem_matrix(tokens_ac, ct, store)
        out.append(float(m.max()) if m.size else NEUTRAL)
    return out


def other_cat_list(tokens_ac, own_cat: str, level_cats: list[str], store: EmbeddingStore) -> list[float]:
    """Mean title-vs-category similarity for every category state except ``own_cat``."""
    T = store.unit_matrix(tokens_ac)
    L = []
    for cat in level_cats:
        if cat == own_cat:
            continue
        C = store.unit_matrix(tokenize(cat).tokens_ac)
        if T.shape[0] == 0 or C.shape[0] == 0:
            L.append(NEUTRAL)
        else:
            L.append(float(norm01(np.clip(T @ C.T, -1.0, 1.0)).mean()))
    return L


def _summarize(L):
    if not L:
        return 0.0, 0.0, 0.0
    return float(sum(L)), float(max(L)), float(min(L))


def f_title_other_cats(tokens_ac, own_cat: str, level_cats: list[str], store: EmbeddingStore) -> tuple[float, float, float]:
    """(sum, max, min) of the foreign-category mean similarities; zeros when none."""
    return _summarize(other_cat_list(tokens_ac, own_cat, level_cats, store))


def attention_similarity(T: np.ndarray, C: np.ndarray) -> float:
    """norm01 cosine of the identity-bilinear attentive pooling of a P2M pair."""
    if T.shape[1] == 0 or C.shape[1] == 0:
        return NEUTRAL
    (rT, rC), _ = attentive_pool_forward(T, C, np.eye(T.shape[0]))
    return float(norm01(cosine_sim(rT, rC)))


def f_shallow_attention(title_mat: np.ndarray, cat_mats, merged_mat: np.ndarray) -> list[float]:
    return [attention_similarity(title_mat, C) for C in cat_mats] + [attention_similarity(title_mat, merged_mat)]


def f_others(title: str, tokens_ac) -> list[float]:
    sexy = 1.0 if "sexy" in tokens_ac else 0.0
    caps = 100.0 * sum(1 for c in title if "A" <= c <= "Z") / len(title) if title else 0.0
    return [sexy, caps]


# ----------------------------------------------------------------- extractor


@dataclass
class FittedStats:
    """Train-split vocabularies (index 0 reserved for unseen) and log-price range."""

    vocabs: dict[str, list[str]] = field(default_factory=dict)
    log_price_min: float = 0.0
    log_price_max: float = 0.0

    def code(self, field_name: str, value: str) -> int:
        lookup = self.__dict__.setdefault("_lookup", {})
        table = lookup.get(field_name)
        if table is None:
            table = lookup[field_name] = {v: i for i, v in enumerate(self.vocabs[field_name]) if i > 0}
        return table.get(value, 0)

    def norm_log_price(self, price: float) -> float:
        span = self.log_price_max - self.log_price_min
        if span <= 0:
            return 0.0
        return (math.log(price) - self.log_price_min) / span

    def to_json(self) -> dict:
        return {"vocabs": self.vocabs, "log_price_min": self.log_price_min, "log_price_max": self.log_price_max}

    @classmethod
    def from_json(cls, d: dict) -> "FittedStats":
        return cls(vocabs={k: list(v) for k, v in d["vocabs"].items()},
                   log_price_min=float(d["log_price_min"]), log_price_max=float(d["log_price_max"]))


def fit_stats(records: list[Record]) -> FittedStats:
    if not records:
        raise ValueError("cannot fit feature statistics on zero records")
    vocabs = {f: [""] + sorted({getattr(r, f) for r in records}) for f in CATEGORICAL_FIELDS}
    logs = [math.log(r.price) for r in records]
    return FittedStats(vocabs=vocabs, log_price_min=min(logs), log_price_max=max(logs))


def f_given(record: Record, stats: FittedStats) -> list[float]:
    return [
        float(stats.code("country", record.country)),
        stats.norm_log_price(record.price),
        float(stats.code("level", record.level)),
        float(stats.code("cat1", record.cat1)),
        float(stats.code("cat2", record.cat2)),
        float(stats.code("cat3", record.cat3)),
    ]


class _LevelIndex:
    """All category names of one level, pre-embedded for batched similarity."""

    def __init__(self, cats: list[str], store: EmbeddingStore):
        self.cats = cats
        blocks = [store.unit_matrix(tokenize(c).tokens_ac) for c in cats]
        self.lengths = np.array([b.shape[0] for b in blocks], dtype=np.int64)
        self.starts = np.concatenate([[0], np.cumsum(self.lengths)[:-1]]).astype(np.int64)
        self.units = np.vstack(blocks) if blocks else np.zeros((0, store.dim))

    def foreign_means(self, T: np.ndarray, own_cat: str) -> list[float]:
        means = np.full(len(self.cats), NEUTRAL)
        nonempty = self.lengths > 0
        if T.shape[0] and nonempty.any():
            colsum = norm01(np.clip(T @ self.units.T, -1.0, 1.0)).sum(axis=0)
            seg = np.add.reduceat(colsum, self.starts[nonempty])
            means[nonempty] = seg / (T.shape[0] * self.lengths[nonempty])
        return [float(m) for m, c in zip(means, self.cats) if c != own_cat]


class FeatureExtractor:
    """Computes full 45-slot feature vectors for records.

    ``store`` backs the GloVe-style similarity features; ``p2m_store`` (defaults
    to ``store``) backs the attentive-pooling features, mirroring the deep
    models' word2vec input.
    """

    def __init__(self, stats: FittedStats, store: EmbeddingStore, p2m_store: EmbeddingStore | None = None):
        self.stats = stats
        self.store = store
        self.p2m_store = p2m_store if p2m_store is not None else store
        self._levels = {lvl: _LevelIndex(stats.vocabs[f"cat{lvl}"][1:], store) for lvl in (1, 2)}

    @classmethod
    def fit(cls, records, store, p2m_store=None) -> "FeatureExtractor":
        return cls(fit_stats(records), store, p2m_store)

    def extract(self, record: Record) -> np.ndarray:
        tok = tokenize(record.title)
        ac = tok.tokens_ac
        cats = [tokenize(c).tokens_ac for c in (record.cat1, record.cat2, record.cat3)]
        v: list[float] = []
        v += f_given(record, self.stats)
        v += f_title_counts(record.title, tok)
        v += f_string_match(ac)
        v += f_semantic_match(ac, self.store)
        v += f_title_cat_sem(ac, cats, self.store)
        T = self.store.unit_matrix(ac)
        o1 = _summarize(self._levels[1].foreign_means(T, record.cat1))
        o2 = _summarize(self._levels[2].foreign_means(T, record.cat2))
        v += [o1[0], o2[0], o1[1], o2[1], o1[2], o2[2]]
        v += f_title_cat_matrix(ac, cats, self.store)
        tmat = phrase_matrix(ac, self.p2m_store, P2M_TITLE_LEN)
        cmats = [phrase_matrix(c, self.p2m_store, P2M_CAT_LEN) for c in cats]
        merged = phrase_matrix([t for c in cats for t in c], self.p2m_store, P2M_CAT_LEN)
        v += f_shallow_attention(tmat, cmats, merged)
        v += f_others(record.title, ac)
        return np.asarray(v, dtype=np.float64)

    def transform(self, records) -> np.ndarray:
        if not records:
            return np.zeros((0, N_FEATURES))
        return np.vstack([self.extract(r) for r in records])


def assemble(records, task: str, extractor: FeatureExtractor, full: np.ndarray | None = None):
    """Model-ready matrix for ``task``: (rows, task columns) plus the registry slice.

    Pass ``full`` to reuse an already-extracted 45-column matrix.
    """
    specs = task_registry(task)
    for s in specs:
        if not 1 <= s.id <= N_FEATURES:
            raise AssertionError(f"feature id {s.id} not implemented")
    if full is None:
        full = extractor.transform(records)
    cols = [s.id - 1 for s in specs]
    return full[:, cols], specs


def categorical_mask(specs) -> np.ndarray:
    return np.array([s.kind == "categorical" for s in specs], dtype=bool)
