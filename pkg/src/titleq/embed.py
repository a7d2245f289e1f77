"""Pretrained word vectors: text-format loader, lookup and cosine helpers."""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import DataError


@dataclass
class EmbeddingStore:
    dim: int
    vectors: np.ndarray = field(repr=False)  # (V, dim) float64
    index: dict[str, int] = field(repr=False)

    def __post_init__(self):
        if self.vectors.shape != (len(self.index), self.dim):
            raise ValueError("vector table does not match index/dim")
        self.vectors.setflags(write=False)
        norms = np.linalg.norm(self.vectors, axis=1)
        safe = np.where(norms > 0, norms, 1.0)
        self._unit = self.vectors / safe[:, None]
        self._unit.setflags(write=False)

    @classmethod
    def from_dict(cls, table: dict[str, "np.typing.ArrayLike"], dim: int | None = None) -> "EmbeddingStore":
        keys = list(table)
        if dim is None:
            if not keys:
                raise ValueError("dim required for an empty table")
            dim = len(np.asarray(table[keys[0]]))
        mat = np.zeros((len(keys), dim))
        for i, k in enumerate(keys):
            v = np.asarray(table[k], dtype=np.float64)
            if v.shape != (dim,):
                raise ValueError(f"vector for {k!r} has shape {v.shape}, expected ({dim},)")
            mat[i] = v
        return cls(dim=dim, vectors=mat, index={k: i for i, k in enumerate(keys)})

    def __len__(self) -> int:
        return len(self.index)

    def __contains__(self, token: str) -> bool:
        return token.lower() in self.index

    def get(self, token: str) -> np.ndarray | None:
        i = self.index.get(token.lower())
        return None if i is None else self.vectors[i]

    def ids(self, tokens) -> list[int]:
        """Row ids of the in-vocabulary tokens, in order (OOV tokens skipped)."""
        out = []
        for t in tokens:
            i = self.index.get(t.lower())
            if i is not None:
                out.append(i)
        return out

    def matrix(self, tokens) -> np.ndarray:
        """Stack in-vocabulary vectors as rows, shape (hits, dim)."""
        return self.vectors[self.ids(tokens)]

    def unit_matrix(self, tokens) -> np.ndarray:
        return self._unit[self.ids(tokens)]


def load_text_vectors(path: str | Path, expected_dim: int) -> EmbeddingStore:
    """Parse ``token v1 ... v_dim`` lines. Duplicate tokens keep the first vector.

    A leading word2vec-style ``<count> <dim>`` header line is tolerated.
    """
    path = Path(path)
    index: dict[str, int] = {}
    rows: list[np.ndarray] = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2 and parts[0].isdigit() and parts[1].isdigit():
                continue
            if len(parts) - 1 != expected_dim:
                raise DataError(f"{path} line {lineno}: expected {expected_dim} values, got {len(parts) - 1}")
            token = parts[0]
            if token in index:
                continue
            try:
                vec = np.array(parts[1:], dtype=np.float64)
            except ValueError:
                raise DataError(f"{path} line {lineno}: non-numeric vector component") from None
            index[token] = len(rows)
            rows.append(vec)
    mat = np.vstack(rows) if rows else np.zeros((0, expected_dim))
    return EmbeddingStore(dim=expected_dim, vectors=mat, index=index)


def cosine_sim(a, b) -> float:
    """Cosine similarity; 0.0 when either vector is all zeros."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError("vectors must have equal length")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


def norm01(s):
    """Map a cosine similarity from [-1, 1] onto [0, 1]."""
    return (s + 1.0) / 2.0


def cosine_matrix(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Pairwise cosine between rows of A and rows of B (zero rows give 0)."""
    na = np.linalg.norm(A, axis=1)
    nb = np.linalg.norm(B, axis=1)
    au = A / np.where(na > 0, na, 1.0)[:, None]
    bu = B / np.where(nb > 0, nb, 1.0)[:, None]
    return np.clip(au @ bu.T, -1.0, 1.0)


@dataclass(frozen=True)
class PhraseVector:
    vec: np.ndarray
    n_hits: int


def avg_vector(tokens, store: EmbeddingStore) -> PhraseVector:
    ids = store.ids(tokens)
    if not ids:
        return PhraseVector(np.zeros(store.dim), 0)
    return PhraseVector(store.vectors[ids].mean(axis=0), len(ids))


def phrase_matrix(tokens, store: EmbeddingStore, max_len: int | None = None) -> np.ndarray:
    """Phrase2Mat: in-vocabulary vectors as columns, shape (dim, hits).

    Truncated to ``max_len`` columns when given; may have zero columns.
    """
    ids = store.ids(tokens)
    if max_len is not None:
        ids = ids[:max_len]
    return np.ascontiguousarray(store.vectors[ids].T)
