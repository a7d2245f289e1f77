"""Histogram gradient-boosted trees for binary classification."""
from .binning import BinnedDataset, bin_features
from .booster import BoostedModel, GbdtParams, Tree, fit, log_loss, predict_proba, train

__all__ = ["BinnedDataset", "BoostedModel", "GbdtParams", "Tree", "bin_features", "fit", "log_loss", "predict_proba", "train"]
