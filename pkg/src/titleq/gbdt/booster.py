"""Leaf-wise histogram gradient boosting for binary log-loss."""
from __future__ import annotations

import heapq
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from . import _kernels
from .binning import BinnedDataset, bin_features

# gains at or below this are summation noise, not structure
MIN_SPLIT_GAIN = 1e-12

NODE_FIELDS = ("feature", "threshold", "bin", "is_categorical", "categories", "left", "right", "value", "count", "gain")


@dataclass
class GbdtParams:
    learning_rate: float = 0.03
    colsample_bytree: float = 1.0
    max_depth: int = -1
    min_child_samples: int = 10
    n_estimators: int = 100
    num_leaves: int = 31
    subsample: float = 1.0
    max_bin: int = 255
    seed: int = 0

    def __post_init__(self):
        if self.num_leaves < 2:
            raise ValueError("num_leaves must be at least 2")
        if not 2 <= self.max_bin <= 255:
            raise ValueError("max_bin must lie in [2, 255]")
        for name in ("learning_rate", "colsample_bytree", "subsample"):
            v = getattr(self, name)
            if not 0.0 < v <= 1.0:
                raise ValueError(f"{name} must lie in (0, 1]")
        if self.max_depth == 0 or self.max_depth < -1:
            raise ValueError("max_depth must be positive or -1 (unbounded)")
        if self.min_child_samples < 1 or self.n_estimators < 0:
            raise ValueError("min_child_samples must be >= 1 and n_estimators >= 0")

    @classmethod
    def defaults(cls, task: str, **overrides) -> "GbdtParams":
        if task == "clarity":
            base = dict(colsample_bytree=0.6, max_depth=6, n_estimators=390, num_leaves=50)
        elif task == "conciseness":
            base = dict(colsample_bytree=0.65, max_depth=-1, n_estimators=490, num_leaves=55)
        else:
            raise ValueError(f"unknown task {task!r}")
        base.update(learning_rate=0.03, min_child_samples=10, subsample=0.88, max_bin=255)
        base.update(overrides)
        return cls(**base)

    @classmethod
    def from_dict(cls, d: dict) -> "GbdtParams":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown gbdt parameters: {sorted(unknown)}")
        return cls(**d)

    def scaled(self, n_estimators: int) -> "GbdtParams":
        """Same schedule with fewer/more trees: learning_rate * n_estimators is held fixed."""
        lr = min(1.0, self.learning_rate * self.n_estimators / n_estimators)
        return GbdtParams(**{**asdict(self), "n_estimators": n_estimators, "learning_rate": lr})


@dataclass
class Tree:
    """Flat node arrays; a node is a leaf when ``left == -1``."""

    feature: list = field(default_factory=list)
    threshold: list = field(default_factory=list)
    bin: list = field(default_factory=list)
    is_categorical: list = field(default_factory=list)
    categories: list = field(default_factory=list)
    left: list = field(default_factory=list)
    right: list = field(default_factory=list)
    value: list = field(default_factory=list)
    count: list = field(default_factory=list)
    gain: list = field(default_factory=list)

    def add_node(self, count: int) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.bin.append(-1)
        self.is_categorical.append(False)
        self.categories.append([])
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(0.0)
        self.count.append(int(count))
        self.gain.append(0.0)
        return len(self.left) - 1

    @property
    def n_nodes(self) -> int:
        return len(self.left)

    def leaves(self) -> list[int]:
        return [i for i in range(self.n_nodes) if self.left[i] < 0]

    def depth(self) -> int:
        best = 0
        stack = [(0, 0)]
        while stack:
            node, d = stack.pop()
            if self.left[node] < 0:
                best = max(best, d)
            else:
                stack += [(self.left[node], d + 1), (self.right[node], d + 1)]
        return best

    def records(self) -> list:
        return [[getattr(self, k)[i] for k in NODE_FIELDS] for i in range(self.n_nodes)]

    @classmethod
    def from_records(cls, recs) -> "Tree":
        t = cls()
        for r in recs:
            for k, v in zip(NODE_FIELDS, r):
                getattr(t, k).append(v)
        return t


@dataclass
class _Leaf:
    node: int
    rows: np.ndarray
    hist: np.ndarray
    G: float
    H: float
    depth: int
    split: tuple | None = None


class _Grower:
    def __init__(self, data: BinnedDataset, grad, hess, params: GbdtParams, feat_mask: np.ndarray):
        self.data = data
        self.grad = grad
        self.hess = hess
        self.params = params
        self.feat_mask = feat_mask
        self.max_bins = int(data.n_bins.max())

    def _hist(self, rows):
        return _kernels.build_histogram(self.data.bins, rows, self.grad, self.hess, self.max_bins)

    def _find(self, leaf: _Leaf):
        p = self.params
        if p.max_depth > 0 and leaf.depth >= p.max_depth:
            return None
        C = leaf.rows.shape[0]
        if C < 2 * p.min_child_samples or leaf.H <= 0:
            return None
        gain, f, pos, gl, hl, cl = _kernels.best_split(
            leaf.hist, self.data.n_bins, self.data.is_categorical, self.feat_mask,
            float(p.min_child_samples), leaf.G, leaf.H, float(C))
        if f < 0 or not gain > MIN_SPLIT_GAIN:
            return None
        return float(gain), int(f), int(pos), float(gl), float(hl)

    def grow_from(self, rows: np.ndarray) -> Tree:
        p = self.params
        tree = Tree()
        root = _Leaf(tree.add_node(rows.size), rows, self._hist(rows),
                     float(self.grad[rows].sum()), float(self.hess[rows].sum()), 0)
        leaves = {root.node: root}
        heap: list = []

        def consider(leaf):
            leaf.split = self._find(leaf)
            if leaf.split is not None:
                heapq.heappush(heap, (-leaf.split[0], leaf.node))

        consider(root)
        n_leaves = 1
        while heap and n_leaves < p.num_leaves:
            _, nid = heapq.heappop(heap)
            leaf = leaves.pop(nid)
            gain, f, pos, gl, hl = leaf.split
            col = self.data.bins[leaf.rows, f]
            if self.data.is_categorical[f]:
                order = _kernels.categorical_order(leaf.hist[f], int(self.data.n_bins[f]))
                cats = np.sort(order[:pos + 1])
                go_left = np.isin(col, cats)
                tree.is_categorical[nid] = True
                tree.categories[nid] = [int(c) for c in cats]
                tree.threshold[nid] = 0.0
            else:
                go_left = col <= pos
                tree.threshold[nid] = float(self.data.boundaries[f][pos])
            tree.feature[nid] = f
            tree.bin[nid] = pos
            tree.gain[nid] = gain
            lrows = leaf.rows[go_left]
            rrows = leaf.rows[~go_left]
            small, large = (lrows, rrows) if lrows.size <= rrows.size else (rrows, lrows)
            h_small = self._hist(small)
            h_large = leaf.hist - h_small
            hists = {id(small): h_small, id(large): h_large}
            children = []
            for rws, G, H in ((lrows, gl, hl), (rrows, leaf.G - gl, leaf.H - hl)):
                child = _Leaf(tree.add_node(rws.size), rws, hists[id(rws)], G, H, leaf.depth + 1)
                children.append(child)
            tree.left[nid] = children[0].node
            tree.right[nid] = children[1].node
            for child in children:
                leaves[child.node] = child
                consider(child)
            n_leaves += 1
        for leaf in leaves.values():
            tree.value[leaf.node] = -p.learning_rate * leaf.G / leaf.H if leaf.H > 0 else 0.0
        return tree


def _pack(trees: list[Tree]):
    roots, feature, threshold, is_cat, cat_start, cat_len, codes, left, right, value = ([] for _ in range(10))
    offset = 0
    for t in trees:
        roots.append(offset)
        for i in range(t.n_nodes):
            feature.append(max(t.feature[i], 0))
            threshold.append(t.threshold[i])
            is_cat.append(t.is_categorical[i])
            cat_start.append(len(codes))
            cat_len.append(len(t.categories[i]))
            codes.extend(t.categories[i])
            left.append(t.left[i] + offset if t.left[i] >= 0 else -1)
            right.append(t.right[i] + offset if t.right[i] >= 0 else -1)
            value.append(t.value[i])
        offset += t.n_nodes
    return (np.array(roots, dtype=np.int64), np.array(feature, dtype=np.int64),
            np.array(threshold, dtype=np.float64), np.array(is_cat, dtype=np.bool_),
            np.array(cat_start, dtype=np.int64), np.array(cat_len, dtype=np.int64),
            np.array(codes, dtype=np.int64), np.array(left, dtype=np.int64),
            np.array(right, dtype=np.int64), np.array(value, dtype=np.float64))


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def log_loss(y, raw) -> float:
    return float(np.mean(np.logaddexp(0.0, raw) - y * raw))


@dataclass
class BoostedModel:
    params: GbdtParams
    init_score: float
    n_features: int
    is_categorical: list
    trees: list = field(default_factory=list)
    train_loss: list = field(default_factory=list)

    def raw_score(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.n_features:
            raise ValueError(f"expected {self.n_features} feature columns, got shape {X.shape}")
        if not self.trees:
            return np.full(X.shape[0], self.init_score)
        return self.init_score + _kernels.predict_trees(X, *_pack(self.trees))

    def predict_proba(self, X) -> np.ndarray:
        return _sigmoid(self.raw_score(X))

    def to_json(self) -> dict:
        return {
            "format": "titleq-gbdt",
            "version": 1,
            "params": asdict(self.params),
            "init_score": self.init_score,
            "n_features": self.n_features,
            "is_categorical": [bool(c) for c in self.is_categorical],
            "node_fields": list(NODE_FIELDS),
            "trees": [t.records() for t in self.trees],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), separators=(",", ":"), sort_keys=True)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.dumps() + "\n", encoding="utf-8")

    @classmethod
    def from_json(cls, d: dict) -> "BoostedModel":
        if d.get("format") != "titleq-gbdt":
            raise ValueError("not a gbdt model dump")
        if list(d["node_fields"]) != list(NODE_FIELDS):
            raise ValueError("unsupported node layout")
        return cls(params=GbdtParams.from_dict(d["params"]), init_score=float(d["init_score"]),
                   n_features=int(d["n_features"]), is_categorical=list(d["is_categorical"]),
                   trees=[Tree.from_records(r) for r in d["trees"]])

    @classmethod
    def load(cls, path: str | Path) -> "BoostedModel":
        return cls.from_json(json.loads(Path(path).read_text(encoding="utf-8")))


def fit(data: BinnedDataset, params: GbdtParams) -> BoostedModel:
    """Boost ``params.n_estimators`` trees on ``data`` (labels must be set)."""
    if data.labels is None:
        raise ValueError("binned dataset has no labels")
    y = data.labels
    n = data.n_rows
    if n == 0:
        raise ValueError("cannot fit on empty data")
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("labels must be 0 or 1")
    base = float(y.mean())
    if base in (0.0, 1.0):
        raise ValueError("labels contain a single class")
    if n < 2 * params.min_child_samples:
        raise ValueError(f"need at least {2 * params.min_child_samples} rows for min_child_samples={params.min_child_samples}")
    rng = np.random.default_rng(params.seed)
    init = float(np.log(base / (1.0 - base)))
    model = BoostedModel(params=params, init_score=init, n_features=data.n_features,
                         is_categorical=[bool(c) for c in data.is_categorical])
    X = data.raw if data.raw is not None else data.bins.astype(np.float64)
    raw = np.full(n, init)
    n_rows = max(1, int(round(params.subsample * n)))
    n_cols = max(1, int(round(params.colsample_bytree * data.n_features)))
    all_rows = np.arange(n, dtype=np.int64)
    model.train_loss.append(log_loss(y, raw))
    for _ in range(params.n_estimators):
        p = _sigmoid(raw)
        grad = p - y
        hess = p * (1.0 - p)
        rows = all_rows if n_rows >= n else np.sort(rng.choice(n, size=n_rows, replace=False)).astype(np.int64)
        mask = np.zeros(data.n_features, dtype=np.bool_)
        if n_cols >= data.n_features:
            mask[:] = True
        else:
            mask[rng.choice(data.n_features, size=n_cols, replace=False)] = True
        tree = _Grower(data, grad, hess, params, mask).grow_from(rows)
        model.trees.append(tree)
        raw = raw + _kernels.predict_trees(X, *_pack([tree]))
        model.train_loss.append(log_loss(y, raw))
    return model


def train(X, y, params: GbdtParams, categorical=None) -> BoostedModel:
    return fit(bin_features(X, categorical, params.max_bin, labels=y), params)


def predict_proba(model: BoostedModel, X) -> np.ndarray:
    return model.predict_proba(X)
