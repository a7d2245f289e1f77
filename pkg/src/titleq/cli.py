"""Command-line entry point: ``titleq <subcommand> --config cfg.json [flags]``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .corpus import DataError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_IO = 2
EXIT_DATA = 3
EXIT_NUMERIC = 4


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage, which here means I/O
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="pipeline config JSON")
    common.add_argument("--task", choices=pipeline.TASKS, help="override the config task")
    common.add_argument("--seed", type=int, help="seed for split, GBDT and deep training")
    common.add_argument("--out", help="output file or directory (command dependent)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="titleq", description="Product title quality scoring pipeline.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("extract-features", parents=[common], help="write the 45-column feature CSV")
    p.add_argument("--input", help="records to featurize (default: the train CSV)")

    p = sub.add_parser("train-shallow", parents=[common], help="fit the gradient-boosted trees")
    p.add_argument("--params", help="JSON file of GBDT parameter overrides")

    sub.add_parser("train-deep", parents=[common], help="fit the neural model")

    p = sub.add_parser("predict", parents=[common], help="score records with both tracks and the ensemble")
    p.add_argument("--input", help="records to score (default: the test CSV)")

    p = sub.add_parser("evaluate", parents=[common], help="RMSE of each track on labeled data")
    p.add_argument("--input", help="labeled CSV (default: the holdout split of the train CSV)")
    p.add_argument("--search-weights", action="store_true", help="also grid-search the deep weight")
    return parser


def _load_config(args) -> pipeline.PipelineConfig:
    try:
        cfg = pipeline.PipelineConfig.from_file(args.config, task=args.task)
    except json.JSONDecodeError as exc:
        raise DataError(f"{args.config}: invalid JSON ({exc})") from exc
    except TypeError as exc:
        raise DataError(f"{args.config}: {exc}") from exc
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    return cfg


def _emit_json(obj, out: str | None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def run(args) -> None:
    cfg = _load_config(args)
    if args.command == "extract-features":
        out = args.out or str(Path(cfg.model_dir) / f"{cfg.task}_features.csv")
        print(pipeline.extract_features(cfg, out, args.input))
    elif args.command in ("train-shallow", "train-deep"):
        if args.out:
            cfg.model_dir = args.out
        if args.command == "train-shallow":
            if args.params:
                overrides = json.loads(Path(args.params).read_text(encoding="utf-8"))
                cfg.gbdt = {**cfg.gbdt, **overrides}
            metrics = pipeline.train_shallow(cfg)
        else:
            metrics = pipeline.train_deep(cfg)
        _emit_json(metrics, None)
    elif args.command == "predict":
        out = args.out or str(Path(cfg.model_dir) / f"{cfg.task}_predictions.csv")
        print(pipeline.predict(cfg, out, args.input))
    elif args.command == "evaluate":
        _emit_json(pipeline.evaluate(cfg, args.input, args.search_weights), args.out)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(f"titleq: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        run(args)
    except FloatingPointError as exc:
        print(f"titleq: numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (DataError, ValueError, KeyError) as exc:
        print(f"titleq: invalid data: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"titleq: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
