"""Monthly series ingestion, min-max scaling, windowing and splits.

CSV schema (UTF-8)::

    date,gwl_m,rainfall_mm
    2000-01,6.2,120.5

``date`` is ``YYYY-MM``; records must form a gap-free monthly sequence.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError

YearMonth = tuple[int, int]

FEATURES = ("gwl", "rainfall")
HEADER = ["date", "gwl_m", "rainfall_mm"]


def next_month(ym: YearMonth, k: int = 1) -> YearMonth:
    idx = ym[0] * 12 + (ym[1] - 1) + k
    return idx // 12, idx % 12 + 1


def format_month(ym: YearMonth) -> str:
    return f"{ym[0]:04d}-{ym[1]:02d}"


def parse_month(text: str) -> YearMonth:
    parts = text.strip().split("-")
    if len(parts) != 2 or len(parts[0]) != 4 or len(parts[1]) != 2:
        raise ValueError(f"expected YYYY-MM, got {text!r}")
    year, month = int(parts[0]), int(parts[1])
    if not 1 <= month <= 12:
        raise ValueError(f"month out of range in {text!r}")
    return year, month


@dataclass(frozen=True)
class TimeSeriesDataset:
    timestamps: tuple[YearMonth, ...]
    gwl: np.ndarray
    rainfall: np.ndarray

    def __post_init__(self):
        gwl = np.asarray(self.gwl, dtype=float)
        rain = np.asarray(self.rainfall, dtype=float)
        ts = tuple((int(y), int(m)) for y, m in self.timestamps)
        object.__setattr__(self, "gwl", gwl)
        object.__setattr__(self, "rainfall", rain)
        object.__setattr__(self, "timestamps", ts)
        if len(ts) == 0:
            raise DataError("empty dataset")
        if not (len(ts) == gwl.shape[0] == rain.shape[0]) or gwl.ndim != 1 or rain.ndim != 1:
            raise DataError("timestamps, gwl and rainfall must have equal length")
        for prev, cur in zip(ts, ts[1:]):
            if cur != next_month(prev):
                raise DataError(
                    f"month gap: expected {format_month(next_month(prev))} after "
                    f"{format_month(prev)}, found {format_month(cur)}"
                )
        if not (np.all(np.isfinite(gwl)) and np.all(np.isfinite(rain))):
            raise DataError("non-finite value in dataset")

    def __len__(self) -> int:
        return len(self.timestamps)

    def feature(self, name: str) -> np.ndarray:
        if name == "gwl":
            return self.gwl
        if name == "rainfall":
            return self.rainfall
        raise KeyError(name)

    def head(self, end: int) -> "TimeSeriesDataset":
        return TimeSeriesDataset(self.timestamps[:end], self.gwl[:end], self.rainfall[:end])

    def matrix(self) -> np.ndarray:
        """Records as an (n, 2) array of (gwl, rainfall)."""
        return np.column_stack([self.gwl, self.rainfall])


def load_csv(path: str | Path) -> TimeSeriesDataset:
    path = Path(path)
    if not path.is_file():
        raise DataError(f"no such file: {path}")
    rows: list[tuple[YearMonth, float, float, int]] = []
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != HEADER:
            raise DataError(f"{path}:1: expected header {','.join(HEADER)}")
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{line}: expected 3 fields, got {len(row)}")
            try:
                ym = parse_month(row[0])
                gwl = float(row[1])
                rain = float(row[2])
            except ValueError as exc:
                raise DataError(f"{path}:{line}: malformed row: {exc}") from None
            if not (math.isfinite(gwl) and math.isfinite(rain)):
                raise DataError(f"{path}:{line}: non-finite value")
            rows.append((ym, gwl, rain, line))
    if not rows:
        raise DataError("empty dataset")
    rows.sort(key=lambda r: r[0])
    for a, b in zip(rows, rows[1:]):
        if a[0] == b[0]:
            raise DataError(f"{path}:{b[3]}: duplicate month {format_month(b[0])}")
        if b[0] != next_month(a[0]):
            missing = format_month(next_month(a[0]))
            raise DataError(f"{path}:{b[3]}: month gap, missing {missing}")
    return TimeSeriesDataset(
        tuple(r[0] for r in rows),
        np.array([r[1] for r in rows]),
        np.array([r[2] for r in rows]),
    )


def write_csv(dataset: TimeSeriesDataset, path: str | Path, gwl_fmt: str = "{:.4f}",
              rain_fmt: str = "{:.2f}") -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(HEADER)
        for ym, g, r in zip(dataset.timestamps, dataset.gwl, dataset.rainfall):
            w.writerow([format_month(ym), gwl_fmt.format(g), rain_fmt.format(r)])


@dataclass(frozen=True)
class ScalingParams:
    gwl_min: float
    gwl_max: float
    rainfall_min: float
    rainfall_max: float

    def __post_init__(self):
        for f in FEATURES:
            lo, hi = self.bounds(f)
            if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
                raise DataError(f"invalid scaling for {f}: min={lo}, max={hi}")

    def bounds(self, feature: str) -> tuple[float, float]:
        if feature == "gwl":
            return self.gwl_min, self.gwl_max
        if feature == "rainfall":
            return self.rainfall_min, self.rainfall_max
        raise KeyError(feature)

    def is_constant(self, feature: str) -> bool:
        lo, hi = self.bounds(feature)
        return hi == lo

    def to_dict(self) -> dict:
        return {"gwl_min": self.gwl_min, "gwl_max": self.gwl_max,
                "rainfall_min": self.rainfall_min, "rainfall_max": self.rainfall_max}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalingParams":
        return cls(float(d["gwl_min"]), float(d["gwl_max"]),
                   float(d["rainfall_min"]), float(d["rainfall_max"]))


def fit_minmax(dataset: TimeSeriesDataset, range_end: int) -> ScalingParams:
    """Per-feature min/max over records ``[0, range_end)``."""
    if range_end <= 0:
        raise DataError("range_end must be positive")
    if range_end > len(dataset):
        raise DataError(f"range_end {range_end} exceeds dataset length {len(dataset)}")
    g = dataset.gwl[:range_end]
    r = dataset.rainfall[:range_end]
    return ScalingParams(float(g.min()), float(g.max()), float(r.min()), float(r.max()))


def scale(values, scaling: ScalingParams, feature: str) -> np.ndarray:
    lo, hi = scaling.bounds(feature)
    values = np.asarray(values, dtype=float)
    if hi == lo:
        return np.zeros_like(values)
    return (values - lo) / (hi - lo)


def denormalize(values, scaling: ScalingParams, feature: str = "gwl") -> np.ndarray:
    lo, hi = scaling.bounds(feature)
    values = np.asarray(values, dtype=float)
    if hi == lo:
        return np.full_like(values, lo)
    return values * (hi - lo) + lo


def normalize(dataset: TimeSeriesDataset, scaling: ScalingParams) -> TimeSeriesDataset:
    # Values outside the fitted range are not clamped.
    return TimeSeriesDataset(
        dataset.timestamps,
        scale(dataset.gwl, scaling, "gwl"),
        scale(dataset.rainfall, scaling, "rainfall"),
    )


@dataclass(frozen=True)
class WindowedSamples:
    """Lagged input sequences ``(N, L, 2)`` paired with next-month gwl targets."""

    inputs: np.ndarray
    targets: np.ndarray
    origin_index: np.ndarray

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        targets = np.asarray(self.targets, dtype=float)
        origin = np.asarray(self.origin_index, dtype=np.int64)
        if inputs.ndim != 3 or targets.shape != (inputs.shape[0],) or origin.shape != targets.shape:
            raise DataError("inconsistent sample shapes")
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "targets", targets)
        object.__setattr__(self, "origin_index", origin)

    def __len__(self) -> int:
        return self.targets.shape[0]

    @property
    def lag(self) -> int:
        return self.inputs.shape[1]

    def take(self, index) -> "WindowedSamples":
        """Subset by slice or integer index array, keeping the given order."""
        return WindowedSamples(self.inputs[index], self.targets[index], self.origin_index[index])


def make_windows(dataset: TimeSeriesDataset, lag: int) -> WindowedSamples:
    if lag < 1:
        raise DataError(f"lag must be >= 1, got {lag}")
    n = len(dataset)
    if n <= lag:
        raise DataError(f"dataset too short: {n} records for lag {lag}")
    x = dataset.matrix()
    count = n - lag
    idx = np.arange(count)[:, None] + np.arange(lag)[None, :]
    return WindowedSamples(x[idx], dataset.gwl[lag:].copy(), np.arange(lag, n))


def split_point(n: int, train_fraction: float) -> int:
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must lie in (0, 1), got {train_fraction}")
    # Guard against 0.8 * 10 = 7.999... style rounding.
    n_train = math.floor(train_fraction * n + 1e-9)
    if n_train < 1 or n_train >= n:
        raise DataError(f"split of {n} samples at {train_fraction} leaves an empty side")
    return n_train


def chrono_split(samples: WindowedSamples, train_fraction: float):
    """First ``floor(fraction * N)`` samples train, the rest test; no shuffling."""
    n_train = split_point(len(samples), train_fraction)
    return samples.take(slice(0, n_train)), samples.take(slice(n_train, None))


@dataclass(frozen=True)
class FoldPlan:
    fold_assignments: tuple[range, ...]

    def __len__(self) -> int:
        return len(self.fold_assignments)

    @property
    def n(self) -> int:
        return self.fold_assignments[-1].stop

    def train_indices(self, fold: int) -> np.ndarray:
        held = self.fold_assignments[fold]
        return np.concatenate([np.arange(0, held.start), np.arange(held.stop, self.n)])

    def sizes(self) -> list[int]:
        return [len(r) for r in self.fold_assignments]


def kfold_plan(n: int, k: int) -> FoldPlan:
    """Contiguous blocks; the first ``n % k`` folds get one extra sample."""
    if k < 2:
        raise DataError(f"k must be >= 2, got {k}")
    if n < k:
        raise DataError(f"cannot split {n} samples into {k} folds")
    base, extra = divmod(n, k)
    ranges = []
    start = 0
    for f in range(k):
        size = base + (1 if f < extra else 0)
        ranges.append(range(start, start + size))
        start += size
    return FoldPlan(tuple(ranges))


def monthly_climatology(dataset: TimeSeriesDataset, end: int | None = None) -> dict[int, float]:
    """Mean rainfall per calendar month over records ``[0, end)``."""
    end = len(dataset) if end is None else end
    sums: dict[int, list[float]] = {}
    for (_, m), r in zip(dataset.timestamps[:end], dataset.rainfall[:end]):
        sums.setdefault(m, []).append(float(r))
    overall = float(np.mean(dataset.rainfall[:end]))
    return {m: (float(np.mean(sums[m])) if m in sums else overall) for m in range(1, 13)}


def months_between(start: YearMonth, count: int) -> list[YearMonth]:
    return [next_month(start, k) for k in range(count)]


def dataset_from_rows(rows: Iterable[Sequence]) -> TimeSeriesDataset:
    """Build a dataset from ``(YYYY-MM, gwl, rainfall)`` rows; mostly for tests."""
    rows = list(rows)
    return TimeSeriesDataset(
        tuple(parse_month(r[0]) if isinstance(r[0], str) else tuple(r[0]) for r in rows),
        np.array([float(r[1]) for r in rows]),
        np.array([float(r[2]) for r in rows]),
    )
