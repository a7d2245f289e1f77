from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from cases import feature_case, random_table
from titleq.corpus import Record, tokenize
from titleq.embed import EmbeddingStore
from titleq.features import (CLARITY_IDS, CONCISENESS_IDS, REGISTRY, FeatureExtractor, FittedStats, assemble,
                             attention_similarity, categorical_mask, f_given, f_others, f_semantic_match,
                             f_shallow_attention, f_string_match, f_title_cat_matrix, f_title_cat_sem,
                             f_title_counts, f_title_other_cats, fit_stats)

E2 = EmbeddingStore.from_dict({"x": [1.0, 0.0], "y": [0.0, 1.0], "xx": [2.0, 0.0]})


def _rec(title="Red Apple 2kg", **kw):
    base = dict(country="my", title=title, cat1="Fruit", cat2="Apples", cat3="Red", price=10.0, level="1")
    base.update(kw)
    return Record(**base)


def test_registry_ids_and_subsets():
    assert [s.id for s in REGISTRY] == list(range(1, 46))
    assert len({s.name for s in REGISTRY}) == 45
    assert len(CLARITY_IDS) == 24
    assert set(CLARITY_IDS) == set(range(1, 12)) | {15, 16, 28, 29, 30, 37, 38, 39, 40, 42, 43, 44, 45}
    assert len(CONCISENESS_IDS) == 42
    assert set(CONCISENESS_IDS) == set(range(1, 46)) - {37, 38, 39}


def test_given_features():
    stats = FittedStats(vocabs={"country": ["", "a", "b", "my"], "level": ["", "1"], "cat1": ["", "Fruit"],
                                "cat2": [""], "cat3": [""]}, log_price_min=0.0, log_price_max=2.0)
    v = f_given(_rec(price=math.e), stats)
    assert v[0] == 3.0
    assert v[1] == pytest.approx(0.5, abs=1e-15)
    assert v[2] == 1.0 and v[3] == 1.0
    assert v[4] == 0.0 and v[5] == 0.0  # unseen -> 0
    assert f_given(_rec(country="zz"), stats)[0] == 0.0


def test_fit_stats_sorted_vocab_and_json_roundtrip():
    stats = fit_stats([_rec(country="sg"), _rec(country="my"), _rec(country="sg")])
    assert stats.vocabs["country"] == ["", "my", "sg"]
    again = FittedStats.from_json(stats.to_json())
    assert again.vocabs == stats.vocabs and again.code("country", "sg") == 2


def test_title_counts():
    t = "Red Apple 2kg"
    v = f_title_counts(t, tokenize(t))
    assert v[0] == 3 and v[1] == 5 and v[2] == 3
    assert v[3] == pytest.approx(11 / 3)
    assert v[8] == 1.0
    assert f_title_counts("abc", tokenize("abc"))[9] == 0.0
    assert f_title_counts("a1!", tokenize("a1!"))[9] == pytest.approx(66.67, abs=0.01)
    assert f_title_counts("", tokenize("")) == [0.0] * 10


def test_title_counts_bc_vs_ac():
    t = "*** Big!!"
    v = f_title_counts(t, tokenize(t))
    assert v[0] == 1 and v[4] == 2  # AC drops "***"
    assert v[5] == 5  # "Big!!"


def test_string_match_examples():
    assert f_string_match(["a", "a"]) == [1.0, 100.0, 0.0, 100.0, 1.0]
    assert f_string_match(["solo"]) == [0.0] * 5
    toks = ["martha", "marhta", "dixon"]
    v = f_string_match(toks)
    jw = [oracles.jaro_winkler(a, b) for a, b in (("martha", "marhta"), ("martha", "dixon"), ("marhta", "dixon"))]
    assert v[0] == pytest.approx(sum(jw) / 3, abs=1e-15)
    assert jw[0] == pytest.approx(0.9611, abs=1e-4)


def test_semantic_match_examples():
    assert f_semantic_match(["q", "r"], E2) == [0.0, 0.0, 0.0, 0.0, 0.0, 100.0]
    assert f_semantic_match(["q", "q"], E2)[5] == 50.0
    v = f_semantic_match(["x", "x"], E2)
    assert v[0] == pytest.approx(1.0, abs=1e-15) and v[3] == 100.0 and v[4] == 100.0
    w = f_semantic_match(["x", "y", "oov"], E2)
    assert w[0] == 0.5 and w[2] == 0.0 and w[4] == pytest.approx(200 / 3)


def test_semantic_match_three_random_tokens():
    table = random_table(5)
    store = EmbeddingStore.from_dict(table)
    toks = ["red", "phone", "dress"]
    assert f_semantic_match(toks, store)[:4] == pytest.approx(oracles.semantic_match_features(toks, table),
                                                              abs=1e-12)


def test_title_cat_sem_examples():
    assert f_title_cat_sem(["x"], [["xx"], ["oov"], ["y"]], E2) == pytest.approx([1.0, 0.5, 0.5], abs=1e-15)
    assert f_title_cat_sem(["oov"], [["x"], ["x"], ["x"]], E2) == [0.5, 0.5, 0.5]


def test_other_cats_examples():
    assert f_title_other_cats(["x"], "Own", ["Own", "X"], E2) == pytest.approx((1.0, 1.0, 1.0), abs=1e-15)
    assert f_title_other_cats(["x"], "Own", ["Own"], E2) == (0.0, 0.0, 0.0)
    table = random_table(2)
    store = EmbeddingStore.from_dict(table)
    cats = ["Own", "Red Phone", "Shoe_Women", "Apple Zzq"]
    toks = ["red", "apple", "kg", "oov"]
    got = f_title_other_cats(toks, "Own", cats, store)
    assert got == pytest.approx(oracles.other_category_features(toks, "Own", cats, table), abs=1e-12)


def test_title_cat_matrix_examples():
    assert f_title_cat_matrix(["x", "y"], [["y"], [], ["oov"]], E2) == pytest.approx([1.0, 0.5, 0.5], abs=1e-15)


def test_shallow_attention_examples():
    col = np.array([[1.0], [2.0]])
    assert attention_similarity(col, col) == pytest.approx(1.0, abs=1e-15)
    assert attention_similarity(col, np.zeros((2, 0))) == 0.5
    rng = np.random.default_rng(4)
    T, C = rng.normal(size=(3, 2)), rng.normal(size=(3, 3))
    rT, rC = oracles.attentive_pool(T.tolist(), C.tolist(), np.eye(3).tolist())
    assert attention_similarity(T, C) == pytest.approx(oracles.n01(oracles.cos(rT, rC)), abs=1e-12)
    v = f_shallow_attention(T, [C, C, np.zeros((3, 0))], C)
    assert len(v) == 4 and v[2] == 0.5 and v[0] == v[3]


def test_others_examples():
    assert f_others("Sexy Dress", ["sexy", "dress"])[0] == 1.0
    assert f_others("ABCd", ["abcd"])[1] == 75.0
    assert f_others("", []) == [0.0, 0.0]


def test_full_vector_against_oracle():
    table, records, ex = feature_case(40, seed=9)
    level1 = ex.stats.vocabs["cat1"][1:]
    level2 = ex.stats.vocabs["cat2"][1:]
    for r in records:
        v = ex.extract(r)
        toks = oracles.clean(r.title)
        assert v[16:21] == pytest.approx(oracles.string_match_features(toks), abs=1e-12)
        assert v[21:25] == pytest.approx(oracles.semantic_match_features(toks, table), abs=1e-12)
        s1, m1, n1 = oracles.other_category_features(toks, r.cat1, level1, table)
        s2, m2, n2 = oracles.other_category_features(toks, r.cat2, level2, table)
        assert v[30:36] == pytest.approx([s1, s2, m1, m2, n1, n2], abs=1e-12)
        cats = (r.cat1, r.cat2, r.cat3)
        assert v[36:39] == pytest.approx([oracles.category_matrix_max(toks, c, table) for c in cats], abs=1e-12)


def test_ranges_and_assembly():
    _, records, ex = feature_case(60, seed=1)
    full = ex.transform(records)
    assert full.shape == (60, 45) and np.all(np.isfinite(full))
    for s in REGISTRY:
        col = full[:, s.id - 1]
        if s.scale == "percent":
            assert np.all((col >= 0) & (col <= 100)), s.name
        if s.scale == "unit":
            assert np.all((col >= 0) & (col <= 1)), s.name
    Xc, specs_c = assemble(records, "clarity", ex, full)
    Xk, specs_k = assemble(records, "conciseness", ex)
    assert Xc.shape == (60, 24) and Xk.shape == (60, 42)
    assert np.array_equal(Xk, full[:, [i - 1 for i in CONCISENESS_IDS]])
    assert categorical_mask(specs_c).sum() == 5


def test_identical_records_identical_rows():
    _, records, ex = feature_case(5, seed=2)
    X, _ = assemble([records[0], records[0]], "clarity", ex)
    assert np.array_equal(X[0], X[1])


def test_unseen_categories_at_predict_time():
    _, records, ex = feature_case(10, seed=3)
    v = ex.extract(_rec(country="zz", cat1="Never Seen", cat2="Nope", cat3="No"))
    assert v[0] == 0.0 and v[3] == 0.0 and v[4] == 0.0 and v[5] == 0.0


@settings(max_examples=30, deadline=None)
@given(st.permutations(["red", "apple", "apples", "oov", "kg", "red"]))
def test_pair_features_permutation_invariant(perm):
    store = EmbeddingStore.from_dict(random_table(0))
    base = ["red", "apple", "apples", "oov", "kg", "red"]
    a = f_string_match(base) + f_semantic_match(base, store)[:4]
    b = f_string_match(list(perm)) + f_semantic_match(list(perm), store)[:4]
    assert b == pytest.approx(a, abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.text(max_size=40))
def test_extraction_is_total(title):
    _, records, ex = feature_case(5, seed=0)
    v = ex.extract(_rec(title=title))
    assert v.shape == (45,) and np.all(np.isfinite(v))


def test_separate_p2m_store_is_used():
    table = random_table(0)
    store = EmbeddingStore.from_dict(table)
    other = EmbeddingStore.from_dict({k: -np.asarray(v) for k, v in table.items()})
    rec = _rec(title="red apple", cat1="Red Apple", cat2="Apples", cat3="Red")
    a = FeatureExtractor(fit_stats([rec]), store).extract(rec)
    b = FeatureExtractor(fit_stats([rec]), store, other).extract(rec)
    assert np.array_equal(a[:39], b[:39])
