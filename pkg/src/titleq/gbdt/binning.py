from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class BinnedDataset:
    """Per-row bin indices plus the mapping needed to turn a bin split back into a threshold.

    For numeric feature ``f``, bin ``b`` holds values in
    ``(boundaries[f][b-1], boundaries[f][b]]``. Categorical features use the
    integer code itself as the bin index.
    """

    bins: np.ndarray  # (n_rows, n_features) int32
    n_bins: np.ndarray  # (n_features,) int32
    boundaries: list
    is_categorical: np.ndarray  # (n_features,) bool
    labels: np.ndarray | None = None
    raw: np.ndarray | None = None

    @property
    def n_rows(self) -> int:
        return self.bins.shape[0]

    @property
    def n_features(self) -> int:
        return self.bins.shape[1]


def _numeric_boundaries(col: np.ndarray, max_bin: int) -> np.ndarray:
    distinct = np.unique(col)
    if distinct.size <= max_bin:
        # one bin per distinct value: split thresholds sit halfway between neighbours
        mids = (distinct[:-1] + distinct[1:]) / 2.0
        # halfway can round onto the upper neighbour for adjacent floats
        return np.where(mids < distinct[1:], mids, distinct[:-1])
    qs = np.quantile(col, np.linspace(0.0, 1.0, max_bin + 1)[1:-1])
    b = np.unique(qs)
    return b[b < distinct[-1]]


def bin_features(X, categorical=None, max_bin: int = 255, labels=None) -> BinnedDataset:
    """Quantile-bin numeric columns (exact when a column has <= max_bin distinct values)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("feature matrix must be 2-D")
    if not np.all(np.isfinite(X)):
        raise ValueError("feature matrix contains non-finite values")
    if not 2 <= max_bin <= 255:
        raise ValueError("max_bin must lie in [2, 255]")
    n, nf = X.shape
    cat = np.zeros(nf, dtype=bool) if categorical is None else np.asarray(categorical, dtype=bool)
    if cat.shape != (nf,):
        raise ValueError("categorical mask length does not match feature count")
    bins = np.zeros((n, nf), dtype=np.int32)
    n_bins = np.ones(nf, dtype=np.int32)
    boundaries = []
    for f in range(nf):
        col = X[:, f]
        if cat[f]:
            codes = col.astype(np.int64)
            if np.any(codes != col) or np.any(codes < 0):
                raise ValueError(f"categorical feature {f} must hold non-negative integer codes")
            bins[:, f] = codes
            n_bins[f] = int(codes.max()) + 1 if n else 1
            boundaries.append(np.zeros(0))
        else:
            b = _numeric_boundaries(col, max_bin) if n else np.zeros(0)
            bins[:, f] = np.searchsorted(b, col, side="left")
            n_bins[f] = b.size + 1
            boundaries.append(b)
    y = None if labels is None else np.asarray(labels, dtype=np.float64)
    return BinnedDataset(bins=bins, n_bins=n_bins, boundaries=boundaries, is_categorical=cat, labels=y, raw=X)
