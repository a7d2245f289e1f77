from __future__ import annotations

import csv
import json
import shutil
from pathlib import Path

import numpy as np
import pytest

from titleq import pipeline, synthetic
from titleq.cli import EXIT_DATA, EXIT_IO, EXIT_OK, EXIT_USAGE, main
from titleq.corpus import load_csv, write_csv
from titleq.ensemble import combine, rmse

SMALL_DEEP = {"max_title_len": 12, "max_cat_len": 5, "n_filters": 6, "lstm_hidden": 8, "mlp_layers": 2,
              "mlp_width": 8, "epochs": 2, "lr": 1e-3, "batch_size": 16}


def write_config(directory: Path, task: str, n: int = 120, seed: int = 0, **extra) -> Path:
    paths = synthetic.write_fixture(directory, n=n, dim=16, seed=seed)
    cfg = {"task": task,
           "paths": {"train": "train.csv", "test": "test.csv", "embeddings": "vectors.txt", "model_dir": "models"},
           "embedding_dim": 16, "deep": dict(SMALL_DEEP), "gbdt": {"n_estimators": 20, "learning_rate": 0.3}}
    for key, val in extra.items():
        cfg[key] = {**cfg.get(key, {}), **val} if isinstance(val, dict) else val
    assert Path(paths["train"]).parent == directory
    path = directory / "config.json"
    path.write_text(json.dumps(cfg), encoding="utf-8")
    return path


def read_rows(path: Path) -> list[list[str]]:
    with path.open(newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


@pytest.fixture(scope="module", params=["clarity", "conciseness"])
def trained(request, tmp_path_factory):
    d = tmp_path_factory.mktemp(request.param)
    cfg = write_config(d, request.param)
    assert main(["train-shallow", "--config", str(cfg)]) == EXIT_OK
    assert main(["train-deep", "--config", str(cfg)]) == EXIT_OK
    return request.param, d, cfg


def test_extract_features_three_rows_and_rerun_identical(tmp_path, capsys):
    cfg = write_config(tmp_path, "clarity")
    records = load_csv(tmp_path / "train.csv", has_labels=True)[:3]
    write_csv(tmp_path / "three.csv", records, with_labels=True)
    out_a, out_b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (out_a, out_b):
        assert main(["extract-features", "--config", str(cfg), "--input", str(tmp_path / "three.csv"),
                     "--out", str(out)]) == EXIT_OK
    rows = read_rows(out_a)
    assert rows[0] == ["id"] + [f"feat_{i}" for i in range(1, 46)]
    assert len(rows) == 4
    assert out_a.read_bytes() == out_b.read_bytes()
    assert out_a.with_suffix(".stats.json").read_bytes() == out_b.with_suffix(".stats.json").read_bytes()


def test_missing_embedding_file_is_io_error(tmp_path, capsys):
    cfg = write_config(tmp_path, "clarity")
    (tmp_path / "vectors.txt").unlink()
    assert main(["extract-features", "--config", str(cfg), "--out", str(tmp_path / "f.csv")]) == EXIT_IO
    assert "I/O" in capsys.readouterr().err


def test_missing_config_is_io_error(tmp_path):
    assert main(["train-shallow", "--config", str(tmp_path / "nope.json")]) == EXIT_IO


@pytest.mark.parametrize("argv", [[], ["bogus"], ["predict"], ["predict", "--config", "c.json", "--task", "x"]])
def test_bad_usage_exits_one(argv, capsys):
    assert main(argv) == EXIT_USAGE


def test_bad_data_exits_three(tmp_path, capsys):
    cfg = write_config(tmp_path, "clarity")
    lines = (tmp_path / "train.csv").read_text(encoding="utf-8").splitlines()
    head, first = lines[0], lines[1].rsplit(",", 2)
    lines[1] = ",".join([first[0], "7", first[2]])
    (tmp_path / "train.csv").write_text("\n".join([head] + lines[1:]) + "\n", encoding="utf-8")
    assert main(["train-shallow", "--config", str(cfg)]) == EXIT_DATA
    bad_cfg = tmp_path / "bad.json"
    bad_cfg.write_text("{not json", encoding="utf-8")
    assert main(["train-shallow", "--config", str(bad_cfg)]) == EXIT_DATA
    bad_cfg.write_text(json.dumps({"task": "clarity", "bogus": 1}), encoding="utf-8")
    assert main(["train-shallow", "--config", str(bad_cfg)]) == EXIT_DATA


def test_predict_requires_models(tmp_path, capsys):
    cfg = write_config(tmp_path, "clarity")
    assert main(["predict", "--config", str(cfg), "--out", str(tmp_path / "p.csv")]) == EXIT_IO
    assert "missing model file" in capsys.readouterr().err


def test_training_writes_artifacts_and_metrics(trained):
    task, d, _ = trained
    paths = pipeline.model_paths(pipeline.PipelineConfig.from_file(d / "config.json"))
    for p in paths.values():
        assert p.exists(), p
    for key in ("shallow_metrics", "deep_metrics"):
        m = json.loads(paths[key].read_text(encoding="utf-8"))
        assert m["task"] == task and 0.0 <= m["rmse_holdout"] <= 1.0
        assert m["n_train"] + m["n_holdout"] == 108


def test_predict_schema_identical_rows_and_ensemble_column(trained, tmp_path):
    task, d, cfg = trained
    records = load_csv(d / "test.csv", has_labels=False)
    write_csv(tmp_path / "twice.csv", [records[0], records[0]] + records[1:], with_labels=False)
    out = tmp_path / "pred.csv"
    assert main(["predict", "--config", str(cfg), "--input", str(tmp_path / "twice.csv"), "--out", str(out)]) == 0
    rows = read_rows(out)
    assert rows[0] == ["id", "p_deep", "p_shallow", "p_ensemble"]
    body = np.array([[float(v) for v in r[1:]] for r in rows[1:]])
    assert body.shape == (len(records) + 1, 3)
    assert np.all((body >= 0) & (body <= 1))
    assert np.array_equal(body[0], body[1])
    spec = pipeline.PipelineConfig.from_file(cfg).ensemble_spec()
    assert np.array_equal(combine(body[:, 0], body[:, 1], spec), body[:, 2])


def test_predict_matches_module_level(trained, tmp_path):
    task, d, cfg = trained
    out = tmp_path / "pred.csv"
    assert main(["predict", "--config", str(cfg), "--out", str(out)]) == EXIT_OK
    body = np.array([[float(v) for v in r[1:]] for r in read_rows(out)[1:]])
    conf = pipeline.PipelineConfig.from_file(cfg)
    preds = pipeline.predict_records(conf, load_csv(d / "test.csv", has_labels=False))
    assert np.array_equal(body[:, 0], preds.p_deep)
    assert np.array_equal(body[:, 1], preds.p_shallow)


def test_evaluate_json(trained, tmp_path):
    task, d, cfg = trained
    out = tmp_path / "eval.json"
    assert main(["evaluate", "--config", str(cfg), "--out", str(out), "--search-weights"]) == EXIT_OK
    rep = json.loads(out.read_text(encoding="utf-8"))
    assert {"task", "rmse_deep", "rmse_shallow", "rmse_ensemble", "weights", "n", "best_weights"} <= set(rep)
    assert rep["task"] == task and rep["n"] == 22
    assert rep["best_weights"]["rmse"] <= min(rep["rmse_deep"], rep["rmse_shallow"]) + 1e-12
    shallow = json.loads((d / "models" / f"{task}_shallow_metrics.json").read_text(encoding="utf-8"))
    assert rep["rmse_shallow"] == pytest.approx(shallow["rmse_holdout"], abs=1e-12)


def test_lr_zero_deep_equals_untrained_baseline(tmp_path, capsys):
    cfg_path = write_config(tmp_path, "conciseness", deep={"lr": 0.0})
    assert main(["train-deep", "--config", str(cfg_path)]) == EXIT_OK
    metrics = json.loads(capsys.readouterr().out)
    cfg = pipeline.PipelineConfig.from_file(cfg_path)
    stores = pipeline.load_stores(cfg)
    prep = pipeline.prepare(cfg, *stores)
    model, _, hold = pipeline.build_deep_model(cfg, prep, stores[1])
    model.fitted = True
    baseline = rmse(model.predict_proba(hold), pipeline.labels_of(prep.holdout, cfg.task))
    assert metrics["rmse_holdout"] == baseline


def test_params_override_and_seed_flag(tmp_path, capsys):
    cfg = write_config(tmp_path, "clarity")
    (tmp_path / "p.json").write_text(json.dumps({"n_estimators": 3}), encoding="utf-8")
    assert main(["train-shallow", "--config", str(cfg), "--params", str(tmp_path / "p.json"),
                 "--out", str(tmp_path / "m1")]) == EXIT_OK
    dump = json.loads((tmp_path / "m1" / "clarity_gbdt.json").read_text(encoding="utf-8"))
    assert len(dump["trees"]) == 3
    assert main(["train-shallow", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path / "m2")]) == EXIT_OK
    assert main(["train-shallow", "--config", str(cfg), "--seed", "6", "--out", str(tmp_path / "m3")]) == EXIT_OK
    a = json.loads((tmp_path / "m2" / "clarity_shallow_metrics.json").read_text(encoding="utf-8"))
    b = json.loads((tmp_path / "m3" / "clarity_shallow_metrics.json").read_text(encoding="utf-8"))
    assert a["n_holdout"] == b["n_holdout"]


def test_task_flag_overrides_config(trained, tmp_path, capsys):
    task, d, cfg = trained
    other = "conciseness" if task == "clarity" else "clarity"
    work = tmp_path / "w"
    shutil.copytree(d, work, ignore=shutil.ignore_patterns("models"))
    assert main(["train-shallow", "--config", str(work / "config.json"), "--task", other]) == EXIT_OK
    assert (work / "models" / f"{other}_gbdt.json").exists()


@pytest.mark.parametrize("task", ["clarity", "conciseness"])
def test_train_shallow_on_separable_set(tmp_path, capsys, task):
    write_csv(tmp_path / "train.csv", synthetic.make_records(400, seed=1, noise=0.0), with_labels=True)
    synthetic.write_embeddings(tmp_path / "vectors.txt", synthetic.make_embeddings(16, seed=1))
    cfg = {"task": task, "paths": {"train": "train.csv", "embeddings": "vectors.txt", "model_dir": "models"},
           "embedding_dim": 16, "gbdt": {"n_estimators": 50, "learning_rate": 0.3}}
    (tmp_path / "config.json").write_text(json.dumps(cfg), encoding="utf-8")
    assert main(["train-shallow", "--config", str(tmp_path / "config.json")]) == EXIT_OK
    assert json.loads(capsys.readouterr().out)["rmse_holdout"] < 0.2
