"""Weighted averaging of deep and shallow probabilities, and RMSE scoring."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class EnsembleSpec:
    w_deep: float
    w_shallow: float

    def __post_init__(self):
        if self.w_deep < 0 or self.w_shallow < 0:
            raise ValueError("ensemble weights must be non-negative")
        if abs(self.w_deep + self.w_shallow - 1.0) > WEIGHT_TOL:
            raise ValueError(f"ensemble weights must sum to 1, got {self.w_deep} + {self.w_shallow}")

    @classmethod
    def defaults(cls, task: str) -> "EnsembleSpec":
        if task == "clarity":
            return cls(0.55, 0.45)
        if task == "conciseness":
            return cls(0.5, 0.5)
        raise ValueError(f"unknown task {task!r}")

    @classmethod
    def from_deep_weight(cls, w_deep: float) -> "EnsembleSpec":
        return cls(w_deep, 1.0 - w_deep)


def combine(p_deep, p_shallow, spec: EnsembleSpec) -> np.ndarray:
    p_deep = np.asarray(p_deep, dtype=np.float64)
    p_shallow = np.asarray(p_shallow, dtype=np.float64)
    if p_deep.shape != p_shallow.shape:
        raise ValueError("deep and shallow predictions differ in length")
    return spec.w_deep * p_deep + spec.w_shallow * p_shallow


def rmse(pred, labels) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if pred.size == 0:
        raise ValueError("rmse of empty input")
    if pred.shape != labels.shape:
        raise ValueError("predictions and labels differ in length")
    return float(np.sqrt(np.mean((pred - labels) ** 2)))


def grid_search_weights(p_deep, p_shallow, labels, step: float = 0.05) -> tuple[EnsembleSpec, float]:
    """Deep weight on a ``step`` grid over [0, 1] minimizing holdout RMSE (ties -> smaller weight)."""
    n_steps = int(round(1.0 / step))
    if not np.isclose(n_steps * step, 1.0):
        raise ValueError("step must divide 1 evenly")
    best = None
    for i in range(n_steps + 1):
        spec = EnsembleSpec.from_deep_weight(round(i * step, 12))
        score = rmse(combine(p_deep, p_shallow, spec), labels)
        if best is None or score < best[1]:
            best = (spec, score)
    return best
