"""Forecast metrics, box-plot statistics and k-fold cross-validation."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .dataio import FoldPlan, ScalingParams, WindowedSamples, denormalize
from .errors import DataError

# A model family trains on samples with a seed and returns a predictor that
# maps samples to predictions in the same (normalized) units as the targets.
Predictor = Callable[[WindowedSamples], np.ndarray]
ModelFamily = Callable[[WindowedSamples, int], Predictor]


def _pair(pred, obs):
    pred = np.asarray(pred, dtype=float).ravel()
    obs = np.asarray(obs, dtype=float).ravel()
    if pred.shape != obs.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} predictions vs {obs.shape[0]} observations")
    if pred.size == 0:
        raise ValueError("empty input")
    if not (np.all(np.isfinite(pred)) and np.all(np.isfinite(obs))):
        raise ValueError("non-finite values")
    return pred, obs


def mse(pred, obs) -> float:
    pred, obs = _pair(pred, obs)
    return float(np.mean((pred - obs) ** 2))


def rmse(pred, obs) -> float:
    return math.sqrt(mse(pred, obs))


def mae(pred, obs) -> float:
    pred, obs = _pair(pred, obs)
    return float(np.mean(np.abs(pred - obs)))


def accuracy_pct(pred, obs) -> float:
    """``100 * clamp(1 - rmse / (max(obs) - min(obs)), 0, 1)``."""
    pred, obs = _pair(pred, obs)
    span = float(obs.max() - obs.min())
    if span <= 0:
        raise ValueError("observations are constant; accuracy is undefined")
    return 100.0 * min(max(1.0 - rmse(pred, obs) / span, 0.0), 1.0)


@dataclass(frozen=True)
class MetricSet:
    rmse: float
    mse: float
    mae: float
    accuracy_pct: float

    def to_dict(self) -> dict:
        return {"rmse": self.rmse, "mse": self.mse, "mae": self.mae, "accuracy_pct": self.accuracy_pct}


def metric_set(pred, obs) -> MetricSet:
    m = mse(pred, obs)
    return MetricSet(math.sqrt(m), m, mae(pred, obs), accuracy_pct(pred, obs))


def _median(sorted_vals: np.ndarray) -> float:
    n = sorted_vals.shape[0]
    mid = n // 2
    if n % 2:
        return float(sorted_vals[mid])
    return float((sorted_vals[mid - 1] + sorted_vals[mid]) / 2.0)


@dataclass(frozen=True)
class CvSummary:
    folds: tuple[float, ...]
    min: float
    q1: float
    median: float
    q3: float
    max: float

    def to_dict(self) -> dict:
        return {"folds": list(self.folds), "min": self.min, "q1": self.q1,
                "median": self.median, "q3": self.q3, "max": self.max}


def boxplot_stats(values) -> CvSummary:
    """Five-number summary; quartiles are medians of the lower and upper halves,
    excluding the overall median when the count is odd."""
    vals = np.asarray(values, dtype=float).ravel()
    if vals.shape[0] < 2:
        raise ValueError("need at least 2 values")
    s = np.sort(vals)
    half = s.shape[0] // 2
    lower = s[:half]
    upper = s[-half:]
    return CvSummary(tuple(float(v) for v in vals), float(s[0]), _median(lower), _median(s),
                     _median(upper), float(s[-1]))


def cross_validate(family: ModelFamily, samples: WindowedSamples, plan: FoldPlan, base_seed: int,
                   scaling: Optional[ScalingParams] = None) -> CvSummary:
    """Train on all folds but one (seed ``base_seed + f``) and score fold ``f``.

    When ``scaling`` is given, predictions and targets are denormalized
    before scoring so accuracy is computed in original units.
    """
    if plan.n != len(samples):
        raise DataError(f"fold plan covers {plan.n} samples, got {len(samples)}")
    accuracies = []
    for f, held in enumerate(plan.fold_assignments):
        if len(held) < 2:
            raise DataError(f"fold {f} has {len(held)} samples; need at least 2")
        train = samples.take(plan.train_indices(f))
        valid = samples.take(slice(held.start, held.stop))
        predictor = family(train, base_seed + f)
        pred, obs = predictor(valid), valid.targets
        if scaling is not None:
            pred, obs = denormalize(pred, scaling), denormalize(obs, scaling)
        accuracies.append(accuracy_pct(pred, obs))
    return boxplot_stats(accuracies)
