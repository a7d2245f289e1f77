"""End-to-end orchestration shared by the CLI: config, training, prediction, evaluation."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import deepnet, gbdt
from .corpus import BASE_COLUMNS, LABEL_COLUMNS, DataError, Record, SplitSpec, load_csv, split_holdout, tokenize
from .embed import EmbeddingStore, load_text_vectors
from .ensemble import EnsembleSpec, combine, grid_search_weights, rmse
from .features import N_FEATURES, FeatureExtractor, FittedStats, assemble, categorical_mask

log = logging.getLogger(__name__)

TASKS = ("clarity", "conciseness")


@dataclass
class PipelineConfig:
    task: str = "clarity"
    train: str | None = None
    test: str | None = None
    embeddings: str | None = None
    w2v_embeddings: str | None = None
    model_dir: str = "models"
    embedding_dim: int = 300
    split: dict = field(default_factory=dict)
    gbdt: dict = field(default_factory=dict)
    deep: dict = field(default_factory=dict)
    ensemble: dict | None = None

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")

    @classmethod
    def from_file(cls, path: str | Path, **overrides) -> "PipelineConfig":
        path = Path(path)
        raw = json.loads(path.read_text(encoding="utf-8"))
        paths = raw.pop("paths", {})
        base = path.parent
        for key in ("train", "test", "embeddings", "w2v_embeddings", "model_dir"):
            val = paths.get(key, raw.pop(key, None))
            if val is not None:
                raw[key] = str((base / val) if not Path(val).is_absolute() else Path(val))
        raw.update({k: v for k, v in overrides.items() if v is not None})
        unknown = set(raw) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def with_seed(self, seed: int) -> "PipelineConfig":
        d = asdict(self)
        d["split"] = {**self.split, "seed": seed}
        d["gbdt"] = {**self.gbdt, "seed": seed}
        d["deep"] = {**self.deep, "seed": seed}
        return PipelineConfig(**d)

    def split_spec(self) -> SplitSpec:
        return SplitSpec(**{"holdout_fraction": 0.2, "seed": 0, **self.split})

    def gbdt_params(self) -> gbdt.GbdtParams:
        return gbdt.GbdtParams.defaults(self.task, **self.gbdt)

    def deep_hyper(self, n: int) -> deepnet.DeepHyperParams:
        return deepnet.DeepHyperParams.defaults(self.task, **{**self.deep, "n": n})

    def ensemble_spec(self) -> EnsembleSpec:
        if self.ensemble is None:
            return EnsembleSpec.defaults(self.task)
        return EnsembleSpec(float(self.ensemble["w_deep"]), float(self.ensemble["w_shallow"]))

    def require(self, name: str) -> str:
        val = getattr(self, name)
        if val is None:
            raise ValueError(f"config is missing paths.{name}")
        return val


# ------------------------------------------------------------------- helpers


def sniff_has_labels(path: str | Path) -> bool:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        header = next(csv.reader(fh), None)
    if header is None:
        raise DataError(f"{path}: missing header row")
    return tuple(h.strip().lower() for h in header) == BASE_COLUMNS + LABEL_COLUMNS


def load_stores(cfg: PipelineConfig) -> tuple[EmbeddingStore, EmbeddingStore]:
    feat_store = load_text_vectors(cfg.require("embeddings"), cfg.embedding_dim)
    if cfg.w2v_embeddings and Path(cfg.w2v_embeddings) != Path(cfg.embeddings):
        return feat_store, load_text_vectors(cfg.w2v_embeddings, cfg.embedding_dim)
    return feat_store, feat_store


def labels_of(records, task: str) -> np.ndarray:
    ys = [r.label(task) for r in records]
    if any(y is None for y in ys):
        raise DataError(f"records lack {task} labels")
    return np.asarray(ys, dtype=np.float64)


def model_paths(cfg: PipelineConfig) -> dict[str, Path]:
    d = Path(cfg.model_dir)
    t = cfg.task
    return {
        "stats": d / f"{t}_features.json",
        "gbdt": d / f"{t}_gbdt.json",
        "deep_params": d / f"{t}_deep.params",
        "deep_header": d / f"{t}_deep.json",
        "shallow_metrics": d / f"{t}_shallow_metrics.json",
        "deep_metrics": d / f"{t}_deep_metrics.json",
    }


def _write_json(path: Path, obj) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


@dataclass
class Prepared:
    train: list
    holdout: list
    extractor: FeatureExtractor
    full_train: np.ndarray
    full_holdout: np.ndarray


def prepare(cfg: PipelineConfig, feat_store, p2m_store) -> Prepared:
    records = load_csv(cfg.require("train"), has_labels=True)
    train, holdout = split_holdout(records, cfg.split_spec())
    extractor = FeatureExtractor.fit(train, feat_store, p2m_store)
    return Prepared(train, holdout, extractor, extractor.transform(train), extractor.transform(holdout))


def title_inputs(records):
    toks = [tokenize(r.title).tokens_ac for r in records]
    cats = [[tokenize(c).tokens_ac for c in (r.cat1, r.cat2, r.cat3)] for r in records]
    return toks, cats


# --------------------------------------------------------------------- steps


def extract_features(cfg: PipelineConfig, out_csv: str | Path, input_csv: str | None = None) -> Path:
    feat_store, p2m_store = load_stores(cfg)
    records = load_csv(cfg.require("train"), has_labels=sniff_has_labels(cfg.require("train")))
    train, _ = split_holdout(records, cfg.split_spec()) if len(records) >= 2 else (records, [])
    extractor = FeatureExtractor.fit(train, feat_store, p2m_store)
    target = records if input_csv is None else load_csv(input_csv, has_labels=sniff_has_labels(input_csv))
    full = extractor.transform(target)
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with out_csv.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id"] + [f"feat_{i}" for i in range(1, N_FEATURES + 1)])
        for i, row in enumerate(full):
            w.writerow([i] + [repr(float(v)) for v in row])
    sidecar = out_csv.with_suffix(".stats.json")
    _write_json(sidecar, extractor.stats.to_json())
    return out_csv


def train_shallow(cfg: PipelineConfig) -> dict:
    feat_store, p2m_store = load_stores(cfg)
    prep = prepare(cfg, feat_store, p2m_store)
    X, specs = assemble(prep.train, cfg.task, prep.extractor, prep.full_train)
    Xh, _ = assemble(prep.holdout, cfg.task, prep.extractor, prep.full_holdout)
    params = cfg.gbdt_params()
    model = gbdt.train(X, labels_of(prep.train, cfg.task), params, categorical_mask(specs))
    paths = model_paths(cfg)
    paths["gbdt"].parent.mkdir(parents=True, exist_ok=True)
    model.save(paths["gbdt"])
    _write_json(paths["stats"], prep.extractor.stats.to_json())
    metrics = {
        "task": cfg.task,
        "track": "shallow",
        "rmse_holdout": rmse(model.predict_proba(Xh), labels_of(prep.holdout, cfg.task)),
        "n_train": len(prep.train),
        "n_holdout": len(prep.holdout),
    }
    _write_json(paths["shallow_metrics"], metrics)
    return metrics


def build_deep_model(cfg, prep: Prepared, p2m_store) -> tuple[deepnet.DeepModel, list, list]:
    X, _ = assemble(prep.train, cfg.task, prep.extractor, prep.full_train)
    Xh, _ = assemble(prep.holdout, cfg.task, prep.extractor, prep.full_holdout)
    hyper = cfg.deep_hyper(p2m_store.dim)
    toks, cats = title_inputs(prep.train)
    if cfg.task == "conciseness":
        vocab, E = deepnet.build_vocab(toks, p2m_store)
        model = deepnet.DeepModel.initialize(hyper, X.shape[1], embedding=E, vocab=vocab)
    else:
        model = deepnet.DeepModel.initialize(hyper, X.shape[1])
    model.fit_standardizer(X)
    samples = model.make_samples(toks, cats, X, p2m_store)
    htoks, hcats = title_inputs(prep.holdout)
    hold_samples = model.make_samples(htoks, hcats, Xh, p2m_store)
    return model, samples, hold_samples


def train_deep(cfg: PipelineConfig) -> dict:
    feat_store, p2m_store = load_stores(cfg)
    prep = prepare(cfg, feat_store, p2m_store)
    model, samples, hold_samples = build_deep_model(cfg, prep, p2m_store)
    y = labels_of(prep.train, cfg.task)
    yh = labels_of(prep.holdout, cfg.task)
    history = deepnet.train(model, samples, y, hold_samples, yh, log=log.info)
    paths = model_paths(cfg)
    paths["deep_params"].parent.mkdir(parents=True, exist_ok=True)
    model.save(paths["deep_params"], paths["deep_header"])
    _write_json(paths["stats"], prep.extractor.stats.to_json())
    metrics = {
        "task": cfg.task,
        "track": "deep",
        "rmse_holdout": rmse(model.predict_proba(hold_samples), yh),
        "epoch_loss": history,
        "n_train": len(prep.train),
        "n_holdout": len(prep.holdout),
    }
    _write_json(paths["deep_metrics"], metrics)
    return metrics


@dataclass
class Predictions:
    p_deep: np.ndarray
    p_shallow: np.ndarray
    p_ensemble: np.ndarray


def predict_records(cfg: PipelineConfig, records: list[Record], stores=None) -> Predictions:
    paths = model_paths(cfg)
    for key in ("stats", "gbdt", "deep_params", "deep_header"):
        if not paths[key].exists():
            raise FileNotFoundError(f"missing model file {paths[key]}")
    feat_store, p2m_store = stores if stores is not None else load_stores(cfg)
    stats = FittedStats.from_json(json.loads(paths["stats"].read_text(encoding="utf-8")))
    extractor = FeatureExtractor(stats, feat_store, p2m_store)
    X, _ = assemble(records, cfg.task, extractor)
    shallow = gbdt.BoostedModel.load(paths["gbdt"])
    deep = deepnet.DeepModel.load(paths["deep_params"], paths["deep_header"])
    toks, cats = title_inputs(records)
    p_s = shallow.predict_proba(X)
    p_d = deep.predict_proba(deep.make_samples(toks, cats, X, p2m_store))
    return Predictions(p_d, p_s, combine(p_d, p_s, cfg.ensemble_spec()))


def predict(cfg: PipelineConfig, out_csv: str | Path, input_csv: str | None = None) -> Path:
    src = input_csv or cfg.require("test")
    records = load_csv(src, has_labels=sniff_has_labels(src))
    preds = predict_records(cfg, records)
    out_csv = Path(out_csv)
    out_csv.parent.mkdir(parents=True, exist_ok=True)
    with out_csv.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "p_deep", "p_shallow", "p_ensemble"])
        for i in range(len(records)):
            w.writerow([i, repr(float(preds.p_deep[i])), repr(float(preds.p_shallow[i])), repr(float(preds.p_ensemble[i]))])
    return out_csv


def evaluate(cfg: PipelineConfig, input_csv: str | None = None, search_weights: bool = False) -> dict:
    """Score both tracks and the ensemble on labeled data (default: the holdout split)."""
    if input_csv is None:
        records = load_csv(cfg.require("train"), has_labels=True)
        _, records = split_holdout(records, cfg.split_spec())
    else:
        records = load_csv(input_csv, has_labels=True)
    y = labels_of(records, cfg.task)
    preds = predict_records(cfg, records)
    spec = cfg.ensemble_spec()
    report = {
        "task": cfg.task,
        "rmse_deep": rmse(preds.p_deep, y),
        "rmse_shallow": rmse(preds.p_shallow, y),
        "rmse_ensemble": rmse(preds.p_ensemble, y),
        "weights": {"w_deep": spec.w_deep, "w_shallow": spec.w_shallow},
        "n": len(records),
    }
    if search_weights:
        best, score = grid_search_weights(preds.p_deep, preds.p_shallow, y)
        report["best_weights"] = {"w_deep": best.w_deep, "w_shallow": best.w_shallow, "rmse": score}
    return report
