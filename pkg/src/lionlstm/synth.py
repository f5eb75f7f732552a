"""Synthetic monthly groundwater/rainfall series.

    rain_t = profile[month_t] * LogNormal(0, rain_sigma)
    gwl_t  = 5 + 2 sin(2 pi t / 12 + phase) + 0.004 t - 0.003 rain_t + eps_t,
    eps_t  ~ N(0, 0.05)

``gwl`` is depth to water in meters, so wet months lower it. The default
rainfall profile is a monsoon-shaped climatology in millimeters; none of
these constants come from observed data.
"""
from __future__ import annotations

import numpy as np

from .dataio import TimeSeriesDataset, YearMonth, months_between
from .errors import ConfigError

MONSOON_PROFILE_MM = (5.0, 3.0, 8.0, 30.0, 120.0, 380.0,
                      420.0, 300.0, 180.0, 150.0, 60.0, 15.0)
MIN_MONTHS = 24


def generate_series(months: int, seed: int, start: YearMonth = (2000, 1), phase: float = 0.0,
                    noise_sd: float = 0.05, rain_sigma: float = 0.25,
                    profile=MONSOON_PROFILE_MM) -> TimeSeriesDataset:
    if months < MIN_MONTHS:
        raise ConfigError(f"need at least {MIN_MONTHS} months, got {months}")
    rng = np.random.default_rng(seed)
    stamps = months_between(start, months)
    t = np.arange(months, dtype=float)
    base = np.array([profile[m - 1] for _, m in stamps])
    rain = base * rng.lognormal(0.0, rain_sigma, size=months)
    eps = rng.normal(0.0, noise_sd, size=months)
    gwl = 5.0 + 2.0 * np.sin(2.0 * np.pi * t / 12.0 + phase) + 0.004 * t - 0.003 * rain + eps
    # Round to the CSV precision so a written file reloads to the same values.
    return TimeSeriesDataset(tuple(stamps), np.round(gwl, 4), np.round(rain, 2))
