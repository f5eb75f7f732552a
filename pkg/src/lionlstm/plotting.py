"""Report figures written next to the CSV/JSON outputs.

Rendering uses the Agg backend with PNG metadata stripped, so repeated runs
produce identical bytes.
"""
from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .dataio import YearMonth, format_month  # noqa: E402

MODEL_STYLE = {
    "observed": dict(color="black", lw=1.8, label="Observed"),
    "ffnn": dict(color="tab:orange", lw=1.2, ls="--", label="FFNN"),
    "lstm": dict(color="tab:blue", lw=1.2, ls="-.", label="LSTM"),
    "lstm_la": dict(color="tab:green", lw=1.5, label="LSTM-LA"),
}
LABELS = {k: v["label"] for k, v in MODEL_STYLE.items()}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.savefig(path, dpi=110, metadata={"Software": None})
    plt.close(fig)
    return path


def _month_ticks(ax, months: Sequence[YearMonth], max_ticks: int = 12):
    step = max(1, int(np.ceil(len(months) / max_ticks)))
    idx = list(range(0, len(months), step))
    ax.set_xticks(idx)
    ax.set_xticklabels([format_month(months[i]) for i in idx], rotation=45, ha="right")


def plot_comparison(months: Sequence[YearMonth], observed, predictions: Mapping[str, np.ndarray],
                    path: str | Path) -> Path:
    """Observed vs predicted gwl over the test period."""
    fig, ax = plt.subplots(figsize=(8, 4))
    x = np.arange(len(months))
    ax.plot(x, observed, **MODEL_STYLE["observed"])
    for kind, pred in predictions.items():
        ax.plot(x, pred, **MODEL_STYLE[kind])
    _month_ticks(ax, months)
    ax.set_ylabel("GWL (m below ground)")
    ax.invert_yaxis()
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_metric_bars(metrics: Mapping[str, Mapping[str, float]], path: str | Path,
                     names: Sequence[str] = ("rmse", "mse", "mae")) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    kinds = list(metrics)
    width = 0.8 / len(kinds)
    x = np.arange(len(names))
    for k, kind in enumerate(kinds):
        vals = [metrics[kind][n] for n in names]
        ax.bar(x + (k - (len(kinds) - 1) / 2) * width, vals, width,
               color=MODEL_STYLE[kind]["color"], label=LABELS[kind])
    ax.set_xticks(x)
    ax.set_xticklabels([n.upper() for n in names])
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_cv_boxplot(fold_accuracies: Mapping[str, Sequence[float]], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 4))
    kinds = list(fold_accuracies)
    # whis=(0, 100) draws whiskers at min and max, matching the summary JSON.
    ax.boxplot([list(fold_accuracies[k]) for k in kinds], whis=(0, 100))
    ax.set_xticks(range(1, len(kinds) + 1))
    ax.set_xticklabels([LABELS[k] for k in kinds])
    ax.set_ylabel("Prediction accuracy (%)")
    fig.tight_layout()
    return _save(fig, path)


def plot_forecast(history_months: Sequence[YearMonth], history, forecast_months: Sequence[YearMonth],
                  forecasts: Mapping[str, Sequence[float]], path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(8, 4))
    months = list(history_months) + list(forecast_months)
    n = len(history_months)
    ax.plot(np.arange(n), history, **MODEL_STYLE["observed"])
    xf = np.arange(n - 1, len(months))
    for kind, pred in forecasts.items():
        # Join the forecast to the last observation for a continuous line.
        ax.plot(xf, np.concatenate([[history[-1]], pred]), **MODEL_STYLE[kind])
    ax.axvline(n - 0.5, color="grey", lw=0.8, ls=":")
    _month_ticks(ax, months)
    ax.set_ylabel("GWL (m below ground)")
    ax.invert_yaxis()
    ax.legend(frameon=False)
    fig.tight_layout()
    return _save(fig, path)


def plot_trace(trace: Sequence[float], ylabel: str, path: str | Path) -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(np.arange(1, len(trace) + 1), trace, color="tab:green")
    ax.set_xlabel("Epoch")
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    return _save(fig, path)
