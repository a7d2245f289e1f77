"""Dataset ingestion, title tokenization and holdout splitting."""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np

BASE_COLUMNS = ("country", "title", "category_1", "category_2", "category_3", "price", "level")
LABEL_COLUMNS = ("clarity", "conciseness")

_NON_ALNUM = re.compile(r"[^0-9A-Za-z]+")


class DataError(ValueError):
    """Malformed input data (bad CSV row, bad embedding line, ...)."""


@dataclass(frozen=True)
class Record:
    country: str
    title: str
    cat1: str
    cat2: str
    cat3: str
    price: float
    level: str
    clarity_label: int | None = None
    conciseness_label: int | None = None

    def label(self, task: str) -> int | None:
        if task == "clarity":
            return self.clarity_label
        if task == "conciseness":
            return self.conciseness_label
        raise ValueError(f"unknown task {task!r}")


@dataclass(frozen=True)
class TokenizedTitle:
    tokens_bc: list[str]
    tokens_ac: list[str]


@dataclass(frozen=True)
class SplitSpec:
    holdout_fraction: float = 0.2
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must lie in (0, 1)")


def clean_token(token: str) -> str:
    return _NON_ALNUM.sub("", token).lower()


def tokenize(title: str) -> TokenizedTitle:
    """Split on whitespace runs (BC), then strip non-alphanumerics and lowercase (AC).

    Tokens emptied by cleaning are dropped from the AC list.
    """
    bc = title.split()
    ac = [t for t in (clean_token(tok) for tok in bc) if t]
    return TokenizedTitle(tokens_bc=bc, tokens_ac=ac)


def _parse_label(value: str, line: int, column: str) -> int:
    value = value.strip()
    if value not in ("0", "1"):
        raise DataError(f"line {line}: {column} label must be 0 or 1, got {value!r}")
    return int(value)


def load_csv(path: str | Path, has_labels: bool) -> list[Record]:
    """Read records from a UTF-8 CSV with a header row.

    Column order is ``country,title,category_1,category_2,category_3,price,level``
    followed by ``clarity,conciseness`` when ``has_labels`` is set. Line numbers
    in error messages are 1-based physical file lines (the header is line 1).
    """
    path = Path(path)
    expected = BASE_COLUMNS + (LABEL_COLUMNS if has_labels else ())
    records: list[Record] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: missing header row") from None
        if tuple(h.strip().lower() for h in header) != expected:
            raise DataError(f"{path}: header {header!r} does not match expected columns {list(expected)}")
        while True:
            line = reader.line_num + 1
            try:
                row = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                raise DataError(f"line {line}: {exc}") from None
            if not row:
                continue
            if len(row) != len(expected):
                raise DataError(f"line {line}: expected {len(expected)} columns, got {len(row)}")
            try:
                price = float(row[5])
            except ValueError:
                raise DataError(f"line {line}: non-numeric price {row[5]!r}") from None
            if not np.isfinite(price) or price <= 0:
                raise DataError(f"line {line}: price must be positive, got {row[5]!r}")

            clarity = conciseness = None
            if has_labels:
                clarity = _parse_label(row[7], line, "clarity")
                conciseness = _parse_label(row[8], line, "conciseness")
            records.append(
                Record(
                    country=row[0],
                    title=row[1],
                    cat1=row[2],
                    cat2=row[3],
                    cat3=row[4],
                    price=price,
                    level=row[6],
                    clarity_label=clarity,
                    conciseness_label=conciseness,
                )
            )
    return records


def write_csv(path: str | Path, records: list[Record], with_labels: bool) -> None:
    cols = BASE_COLUMNS + (LABEL_COLUMNS if with_labels else ())
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for r in records:
            row = [r.country, r.title, r.cat1, r.cat2, r.cat3, repr(r.price), r.level]
            if with_labels:
                row += [r.clarity_label, r.conciseness_label]
            w.writerow(row)


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    if n < 2:
        raise ValueError("need at least 2 records to split")
    n_hold = int(round(spec.holdout_fraction * n))
    n_hold = min(max(n_hold, 1), n - 1)
    perm = np.random.default_rng(spec.seed).permutation(n)
    return np.sort(perm[n_hold:]), np.sort(perm[:n_hold])


def split_holdout(records: list, spec: SplitSpec) -> tuple[list, list]:
    """Seeded shuffle, then cut ``round(fraction * N)`` records off as holdout.

    Both sides keep the original relative order of the input.
    """
    train_idx, hold_idx = split_indices(len(records), spec)
    return [records[i] for i in train_idx], [records[i] for i in hold_idx]
