"""Product title quality scoring: engineered features, boosted trees, neural models, ensemble."""
from __future__ import annotations

from ._jit import USE_NUMBA
from .corpus import DataError, Record, SplitSpec, load_csv, split_holdout, tokenize
from .embed import EmbeddingStore, load_text_vectors
from .ensemble import EnsembleSpec, combine, grid_search_weights, rmse
from .jaro import jaro_winkler

__version__ = "0.1.0"

__all__ = [
    "USE_NUMBA",
    "DataError",
    "Record",
    "SplitSpec",
    "load_csv",
    "split_holdout",
    "tokenize",
    "EmbeddingStore",
    "load_text_vectors",
    "EnsembleSpec",
    "combine",
    "grid_search_weights",
    "rmse",
    "jaro_winkler",
]
