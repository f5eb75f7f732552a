"""Model pipelines (FFNN, gradient-trained LSTM, LA-optimized LSTM) and
recursive multi-month forecasting in original units."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional, Union

import numpy as np

from . import ffnn, lstm
from .config import RunConfig
from .dataio import (ScalingParams, TimeSeriesDataset, WindowedSamples, YearMonth, chrono_split,
                     denormalize, fit_minmax, make_windows, monthly_climatology, next_month,
                     normalize, scale, split_point)
from .errors import ConfigError, DataError, LeadTimeWarning
from .evalkit import MetricSet, metric_set
from .lion import LaConfig, ProgressSink, optimize

KINDS = ("ffnn", "lstm", "lstm_la")
MAX_LEAD_MONTHS = 12

Params = Union[ffnn.FfnnParams, lstm.LstmParams]
RainfallRule = Callable[[YearMonth], float]


@dataclass
class TrainedModel:
    kind: str
    parameters: Params
    scaling: ScalingParams
    lag: int
    training_trace: list[float] = field(default_factory=list)
    train_records: int = 0
    train_fraction: float = 0.8
    evaluations: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown model kind {self.kind!r}")

    def predict_normalized(self, inputs: np.ndarray) -> np.ndarray:
        """Forward pass over normalized windows ``(N, lag, 2)``."""
        inputs = np.asarray(inputs, dtype=float)
        if inputs.ndim != 3 or inputs.shape[1] != self.lag:
            raise DataError(f"expected windows of length {self.lag}, got shape {inputs.shape}")
        if self.kind == "ffnn":
            return ffnn.predict_batch(self.parameters, inputs[:, -1, :])
        p = self.parameters
        return lstm.predict_batch(lstm.params_to_genome(p), p.H, p.D, inputs)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "lag": self.lag,
            "train_records": self.train_records,
            "train_fraction": self.train_fraction,
            "scaling": self.scaling.to_dict(),
            "params": self.parameters.to_dict(),
            "evaluations": self.evaluations,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "TrainedModel":
        try:
            kind = doc["kind"]
            if kind == "ffnn":
                params = ffnn.FfnnParams.from_dict(doc["params"])
            elif kind in ("lstm", "lstm_la"):
                params = lstm.LstmParams.from_dict(doc["params"])
            else:
                raise ConfigError(f"unknown model kind {kind!r}")
            return cls(kind, params, ScalingParams.from_dict(doc["scaling"]), int(doc["lag"]),
                       [], int(doc.get("train_records", 0)),
                       float(doc.get("train_fraction", 0.8)), int(doc.get("evaluations", 0)))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(f"malformed model document: {exc}") from None


@dataclass
class PreparedData:
    """Scaled windows plus the chronological split of one dataset."""

    dataset: TimeSeriesDataset
    scaling: ScalingParams
    samples: WindowedSamples
    train: WindowedSamples
    test: WindowedSamples
    train_records: int


def prepare(dataset: TimeSeriesDataset, lag: int, train_fraction: float) -> PreparedData:
    """Window the series and split it; scaling sees only the training records."""
    n_samples = len(dataset) - lag
    if n_samples < 2:
        raise DataError(f"dataset of {len(dataset)} months is too short for lag {lag}")
    n_train = split_point(n_samples, train_fraction)
    train_records = lag + n_train
    scaling = fit_minmax(dataset, train_records)
    samples = make_windows(normalize(dataset, scaling), lag)
    train, test = chrono_split(samples, train_fraction)
    return PreparedData(dataset, scaling, samples, train, test, train_records)


def hybrid_fitness(train: WindowedSamples, hidden: int) -> Callable[[np.ndarray], float]:
    """Training RMSE (normalized units) of the LSTM decoded from a genome."""
    inputs, targets = train.inputs, train.targets
    d = inputs.shape[2]

    def fitness(genome: np.ndarray) -> float:
        pred = lstm.predict_batch(genome, hidden, d, inputs)
        return float(np.sqrt(np.mean((pred - targets) ** 2)))

    return fitness


def train_hybrid(train: WindowedSamples, la_config: LaConfig, hidden: int = 2,
                 scaling: Optional[ScalingParams] = None, train_records: int = 0,
                 progress_sink: Optional[ProgressSink] = None) -> TrainedModel:
    if len(train) < 1:
        raise DataError("no training samples")
    d = train.inputs.shape[2]
    result = optimize(hybrid_fitness(train, hidden), lstm.genome_dim(hidden, d), la_config,
                      progress_sink)
    if any(b > a for a, b in zip(result.trace, result.trace[1:])):
        raise AssertionError("LA best-fitness trace increased")
    params = lstm.genome_to_params(result.best_genome, hidden, d)
    return TrainedModel("lstm_la", params, scaling or _identity_scaling(), train.lag,
                        list(result.trace), train_records, evaluations=result.evaluations)


def _identity_scaling() -> ScalingParams:
    return ScalingParams(0.0, 1.0, 0.0, 1.0)


def train_model(kind: str, train: WindowedSamples, config: RunConfig, seed: int,
                scaling: Optional[ScalingParams] = None, train_records: int = 0,
                progress_sink: Optional[ProgressSink] = None) -> TrainedModel:
    scaling = scaling or _identity_scaling()
    if kind == "ffnn":
        params, trace = ffnn.train_ffnn_gd(train, config.ffnn_lr, config.ffnn_epochs, seed)
        model = TrainedModel("ffnn", params, scaling, train.lag, trace, train_records)
    elif kind == "lstm":
        params, trace = lstm.train_lstm_gd(train, config.lstm_lr, config.lstm_epochs, seed,
                                           hidden=config.hidden)
        model = TrainedModel("lstm", params, scaling, train.lag, trace, train_records)
    elif kind == "lstm_la":
        model = train_hybrid(train, config.la_config(seed), config.hidden, scaling,
                             train_records, progress_sink)
    else:
        raise ConfigError(f"unknown model kind {kind!r}")
    model.train_fraction = config.train_fraction
    return model


def model_family(kind: str, config: RunConfig):
    """Adapter for ``evalkit.cross_validate``."""
    def family(train: WindowedSamples, seed: int):
        model = train_model(kind, train, config, seed)
        return lambda s: model.predict_normalized(s.inputs)
    return family


def _normalize_window(model: TrainedModel, window) -> np.ndarray:
    window = np.asarray(window, dtype=float)
    if window.shape != (model.lag, 2):
        raise DataError(f"window must have shape ({model.lag}, 2), got {window.shape}")
    return np.column_stack([scale(window[:, 0], model.scaling, "gwl"),
                            scale(window[:, 1], model.scaling, "rainfall")])


def predict_one(model: TrainedModel, window) -> float:
    """Next-month gwl (meters) from a raw ``(lag, 2)`` window of (gwl, rainfall)."""
    norm = _normalize_window(model, window)
    out = model.predict_normalized(norm[None, :, :])[0]
    return float(denormalize(out, model.scaling))


def climatology_rule(dataset: TimeSeriesDataset, end: int | None = None) -> RainfallRule:
    clim = monthly_climatology(dataset, end)
    return lambda ym: clim[ym[1]]


@dataclass
class ForecastResult:
    start: YearMonth
    horizon: int
    predictions: list[float]
    rainfall_assumption: str

    def months(self) -> list[YearMonth]:
        return [next_month(self.start, k) for k in range(self.horizon)]


def forecast_recursive(model: TrainedModel, history: TimeSeriesDataset, horizon: int,
                       rainfall_rule: Optional[RainfallRule] = None,
                       origin: Optional[int] = None) -> ForecastResult:
    """Forecast ``horizon`` months after record ``origin`` (default: end of history).

    Only records before ``origin`` are read. Each predicted gwl is fed back
    as the newest window step; future rainfall comes from ``rainfall_rule``,
    by default the per-calendar-month training-period mean.
    """
    if horizon < 0:
        raise ConfigError("horizon must be >= 0")
    if horizon > MAX_LEAD_MONTHS:
        warnings.warn(f"horizon {horizon} exceeds the {MAX_LEAD_MONTHS}-month lead time "
                      "the models are validated for", LeadTimeWarning, stacklevel=2)
    origin = len(history) if origin is None else origin
    if origin < model.lag or origin > len(history):
        raise DataError(f"need {model.lag} observed months before the forecast origin")
    if rainfall_rule is None:
        end = min(model.train_records or origin, origin)
        rainfall_rule = climatology_rule(history, end)
        assumption = f"monthly rainfall climatology over the first {end} records"
    else:
        assumption = getattr(rainfall_rule, "__doc__", None) or "user-supplied rule"
    window = history.matrix()[origin - model.lag:origin].copy()
    start = next_month(history.timestamps[origin - 1])
    preds = []
    for k in range(horizon):
        ym = next_month(start, k)
        value = predict_one(model, window)
        preds.append(value)
        # The appended step is month ym itself: predicted gwl, assumed rainfall.
        window = np.vstack([window[1:], [value, rainfall_rule(ym)]])
    return ForecastResult(start, horizon, preds, assumption)


@dataclass
class Comparison:
    months: list[YearMonth]
    observed: np.ndarray
    predictions: dict[str, np.ndarray]
    metrics: dict[str, MetricSet]
    models: dict[str, TrainedModel]
    prepared: PreparedData


def compare_models(dataset: TimeSeriesDataset, config: RunConfig,
                   progress_sink: Optional[ProgressSink] = None) -> Comparison:
    """Train all three kinds on one split and score them on its test part."""
    prep = prepare(dataset, config.lag, config.train_fraction)
    observed = denormalize(prep.test.targets, prep.scaling)
    months = [dataset.timestamps[i] for i in prep.test.origin_index]
    models, preds, metrics = {}, {}, {}
    for kind in KINDS:
        model = train_model(kind, prep.train, config, config.seed, prep.scaling,
                            prep.train_records, progress_sink if kind == "lstm_la" else None)
        p = denormalize(model.predict_normalized(prep.test.inputs), prep.scaling)
        models[kind], preds[kind], metrics[kind] = model, p, metric_set(p, observed)
    return Comparison(months, observed, preds, metrics, models, prep)
